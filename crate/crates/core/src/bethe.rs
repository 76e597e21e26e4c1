//! Bethe ansatz for the spin-1 Liouvillian.
//!
//! Eigenstates in the sector `S^z_tot = m − n` are built from the pseudovacuum
//! `|−1⟩^{⊗n}` as
//!
//! ```text
//! |μ₁…μ_m⟩ = Π_k ( Σ_j S⁺_j / (μ_k − iω_j/2) ) |−1…−1⟩
//! ```
//!
//! where the roots solve
//!
//! ```text
//! 1/g₊ + Σ_k 1/(μ_j − iω_k/2) − Σ_{k≠j} 1/(μ_j − μ_k) = 0,   j = 1..m
//! ```
//!
//! and the eigenvalue is `λ = 2Σμ − iΣω + (iΩ + g₊)(m − n) − g₀(m − n)²`.
//! Internally the coupling enters as `1/g₊`, so the infinite-noise point
//! `1/g₊ = 0` is an ordinary point of every continuation.

use faer::linalg::solvers::Solve;
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::liouvillian::{LiouvillianMatrix, SectorBlock};
use crate::params::ModelParams;
use crate::spinalg::{Basis, ComplexVector, C64, I, ZERO};

/// Distance below which a root counts as sitting on a pole or another root.
pub const SINGULAR_TOL: f64 = 1e-12;
/// Bisections allowed per continuation interval.
pub const MAX_REFINEMENTS: usize = 10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BetheSolution {
    /// Sorted by `(Re, Im)`.
    pub roots: Vec<C64>,
    pub m: usize,
    pub n: usize,
    pub params: ModelParams,
    /// `‖residual‖∞` at the returned roots.
    pub residual_norm: f64,
    pub eigenvalue: C64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    /// Negative control only: flips the sign of the root-root interaction.
    #[doc(hidden)]
    pub flip_interaction: bool,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 200, max_halvings: 30, flip_interaction: false }
    }
}

/// The Bethe equations for fixed detunings and `1/g₊`.
#[derive(Debug, Clone)]
pub struct BetheEquations {
    /// Pole positions `iω_k/2`.
    poles: Vec<C64>,
    inv_g: f64,
    interaction: f64,
    guard: f64,
}

impl BetheEquations {
    pub fn new(omega: &[f64], inv_g: f64) -> Result<Self> {
        if omega.is_empty() {
            return Err(Error::InvalidParams("at least one site is required".into()));
        }
        if !inv_g.is_finite() || inv_g < 0.0 {
            return Err(Error::InvalidParams(format!("1/g+ must be finite and >= 0, got {inv_g}")));
        }
        let scale = omega.iter().fold(1.0f64, |a, w| a.max(w.abs()));
        for (i, a) in omega.iter().enumerate() {
            for b in &omega[i + 1..] {
                if (a - b).abs() <= 1e-12 * scale {
                    return Err(Error::InvalidParams(format!(
                        "degenerate detunings {a} and {b}; perturb them apart before solving"
                    )));
                }
            }
        }
        let poles = omega.iter().map(|w| I * (0.5 * w)).collect();
        Ok(Self { poles, inv_g, interaction: 1.0, guard: 1e-8 * scale })
    }

    pub fn from_params(p: &ModelParams) -> Result<Self> {
        if !(p.g_plus > 0.0) {
            return Err(Error::InvalidParams("the Bethe equations need g+ > 0".into()));
        }
        Self::new(&p.omega, 1.0 / p.g_plus)
    }

    fn with_options(mut self, opts: &NewtonOptions) -> Self {
        if opts.flip_interaction {
            self.interaction = -1.0;
        }
        self
    }

    pub fn n(&self) -> usize {
        self.poles.len()
    }

    pub fn inv_g(&self) -> f64 {
        self.inv_g
    }

    /// Errors if any root is within `tol` of a pole or of another root.
    fn check_singular(&self, roots: &[C64], tol: f64) -> Result<()> {
        for (j, mu) in roots.iter().enumerate() {
            for (k, pole) in self.poles.iter().enumerate() {
                if (mu - pole).norm() < tol {
                    return Err(Error::Singularity(format!("root {j} ({mu}) hits pole {k} ({pole})")));
                }
            }
            for (k, nu) in roots.iter().enumerate().skip(j + 1) {
                if (mu - nu).norm() < tol {
                    return Err(Error::Singularity(format!("roots {j} and {k} collide at {mu}")));
                }
            }
        }
        Ok(())
    }

    pub fn residual(&self, roots: &[C64]) -> Result<Vec<C64>> {
        self.check_singular(roots, SINGULAR_TOL)?;
        Ok(self.residual_unchecked(roots))
    }

    fn residual_unchecked(&self, roots: &[C64]) -> Vec<C64> {
        roots
            .iter()
            .enumerate()
            .map(|(j, &mu)| {
                let poles: C64 = self.poles.iter().map(|p| (mu - p).inv()).sum();
                let pair: C64 = roots.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &nu)| (mu - nu).inv()).sum();
                C64::new(self.inv_g, 0.0) + poles - pair * self.interaction
            })
            .collect()
    }

    /// `∂F_j/∂μ_l`: diagonal `−Σ_k (μ_j − iω_k/2)^{−2} + Σ_{k≠j} (μ_j − μ_k)^{−2}`,
    /// off-diagonal `−(μ_j − μ_l)^{−2}`.
    pub fn jacobian(&self, roots: &[C64]) -> Result<Mat<C64>> {
        self.check_singular(roots, SINGULAR_TOL)?;
        let m = roots.len();
        Ok(Mat::from_fn(m, m, |j, l| {
            if j == l {
                let poles: C64 = self.poles.iter().map(|p| -(roots[j] - p).powi(-2)).sum();
                let pair: C64 =
                    roots.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &nu)| (roots[j] - nu).powi(-2)).sum();
                poles + pair * self.interaction
            } else {
                -(roots[j] - roots[l]).powi(-2) * self.interaction
            }
        }))
    }

    /// Damped Newton iteration. Steps are halved while they increase the
    /// residual or bring a root within the pole/collision guard.
    pub fn newton(&self, initial: &[C64], opts: &NewtonOptions) -> Result<(Vec<C64>, f64, usize)> {
        if initial.is_empty() {
            return Ok((Vec::new(), 0.0, 0));
        }
        self.check_singular(initial, self.guard)?;
        let mut x = initial.to_vec();
        let mut f = self.residual_unchecked(&x);
        let mut r = inf_norm(&f);
        for it in 0..opts.max_iter {
            if r < opts.tol {
                return Ok((x, r, it));
            }
            let j = self.jacobian(&x)?;
            let rhs = faer::Col::<C64>::from_fn(f.len(), |i| -f[i]);
            let dx = j.partial_piv_lu().solve(&rhs);
            if (0..dx.nrows()).any(|i| !dx[i].re.is_finite() || !dx[i].im.is_finite()) {
                return Err(Error::Singularity(format!("singular Jacobian at iteration {it}")));
            }
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..=opts.max_halvings {
                let xn: Vec<C64> = x.iter().enumerate().map(|(i, xi)| xi + dx[i] * t).collect();
                if self.check_singular(&xn, self.guard).is_ok() {
                    let fn_ = self.residual_unchecked(&xn);
                    let rn = inf_norm(&fn_);
                    if rn.is_finite() && rn < r {
                        accepted = Some((xn, fn_, rn));
                        break;
                    }
                }
                t *= 0.5;
            }
            match accepted {
                Some((xn, fn_, rn)) => {
                    x = xn;
                    f = fn_;
                    r = rn;
                }
                None => return Err(Error::NoConvergence { iterations: it, residual: r }),
            }
        }
        if r < opts.tol {
            Ok((x, r, opts.max_iter))
        } else {
            Err(Error::NoConvergence { iterations: opts.max_iter, residual: r })
        }
    }
}

fn inf_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn residual(roots: &[C64], p: &ModelParams) -> Result<Vec<C64>> {
    BetheEquations::from_params(p)?.residual(roots)
}

pub fn jacobian(roots: &[C64], p: &ModelParams) -> Result<Mat<C64>> {
    BetheEquations::from_params(p)?.jacobian(roots)
}

/// `λ = 2Σμ − iΣω + (iΩ + g₊)(m − n) − g₀(m − n)²`.
pub fn eigenvalue_from_roots(roots: &[C64], p: &ModelParams) -> C64 {
    let shift = roots.len() as f64 - p.n() as f64;
    let sum_mu: C64 = roots.iter().sum();
    let sum_omega: f64 = p.omega.iter().sum();
    sum_mu * 2.0 - I * sum_omega + C64::new(p.g_plus, p.omega_big) * shift - C64::new(p.g_zero * shift * shift, 0.0)
}

fn sort_roots(mut roots: Vec<C64>) -> Vec<C64> {
    linalg::sort_complex(&mut roots);
    roots
}

fn solution(roots: Vec<C64>, p: &ModelParams, residual_norm: f64, iterations: usize) -> BetheSolution {
    let roots = sort_roots(roots);
    BetheSolution {
        m: roots.len(),
        n: p.n(),
        eigenvalue: eigenvalue_from_roots(&roots, p),
        roots,
        params: p.clone(),
        residual_norm,
        iterations,
    }
}

pub fn newton_solve(initial: &[C64], p: &ModelParams, opts: &NewtonOptions) -> Result<BetheSolution> {
    let eq = BetheEquations::from_params(p)?.with_options(opts);
    let (roots, r, it) = eq.newton(initial, opts)?;
    Ok(solution(roots, p, r, it))
}

/// Spacing `Δ_y` of uniformly spaced detunings `ω_j = j Δ_y`.
pub fn uniform_spacing(p: &ModelParams) -> Result<f64> {
    let dy = p.omega[0];
    let ok = dy > 0.0
        && p.omega.iter().enumerate().all(|(j, w)| (w - (j + 1) as f64 * dy).abs() <= 1e-9 * dy * (j + 1) as f64);
    if ok {
        Ok(dy)
    } else {
        Err(Error::InvalidParams("the string state needs uniformly spaced detunings ω_j = j Δ_y".into()))
    }
}

/// The infinite-`n` string offset at `1/g₊ = 0`, `Δ_y artanh(1/√2) / 2π`.
pub fn string_offset(delta_y: f64) -> f64 {
    delta_y * std::f64::consts::FRAC_1_SQRT_2.atanh() / (2.0 * std::f64::consts::PI)
}

/// Initial guess for the string state at `1/g₊ = 0`: `⌊n/2⌋` pairs
/// `±d₀ + i(Δ_y/2)(3/2 + 2p)` sitting between every other pair of poles, plus
/// one root near the axis above them when `n` is odd.
pub fn string_seed(n: usize, delta_y: f64) -> Vec<C64> {
    let h = delta_y / 2.0;
    let d0 = string_offset(delta_y);
    let pairs = n / 2;
    let mut x = Vec::with_capacity(n);
    for p in 0..pairs {
        let y = h * (1.5 + 2.0 * p as f64);
        x.push(C64::new(d0, y));
        x.push(C64::new(-d0, y));
    }
    if n % 2 == 1 {
        x.push(C64::new(1e-3 * delta_y, h * (2.0 * pairs as f64 + 0.5)));
    }
    x
}

/// Tracks a root set from `from` to `to` in `1/g₊`, bisecting on failure.
fn track(
    omega: &[f64],
    roots: Vec<C64>,
    from: f64,
    to: f64,
    opts: &NewtonOptions,
) -> Result<(Vec<C64>, f64, usize)> {
    let mut x = roots;
    let mut cur = from;
    let mut targets = vec![to];
    let mut refinements = 0;
    let mut last = (0.0, 0);
    while let Some(&t) = targets.last() {
        let eq = BetheEquations::new(omega, t)?.with_options(opts);
        match eq.newton(&x, opts) {
            Ok((xn, r, it)) => {
                x = xn;
                cur = t;
                last = (r, it);
                targets.pop();
            }
            Err(e) => {
                refinements += 1;
                if refinements > MAX_REFINEMENTS {
                    return Err(Error::Tracking { g_plus: 1.0 / t, reason: e.to_string() });
                }
                log::debug!("bisecting 1/g+ interval [{cur}, {t}] after: {e}");
                targets.push(0.5 * (cur + t));
            }
        }
    }
    Ok((x, last.0, last.1))
}

fn check_descending(g_path: &[f64]) -> Result<()> {
    if g_path.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
        return Err(Error::InvalidParams("g+ path values must be positive and finite".into()));
    }
    if g_path.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidParams("g+ path must run from the largest value down".into()));
    }
    Ok(())
}

fn continue_from(
    p: &ModelParams,
    mut roots: Vec<C64>,
    mut inv_g: f64,
    g_path: &[f64],
    opts: &NewtonOptions,
) -> Result<Vec<BetheSolution>> {
    let mut out = Vec::with_capacity(g_path.len());
    for &g in g_path {
        let (x, r, it) = track(&p.omega, roots, inv_g, 1.0 / g, opts)?;
        out.push(solution(x.clone(), &p.with_g_plus(g), r, it));
        roots = x;
        inv_g = 1.0 / g;
    }
    Ok(out)
}

/// The dominant string state (`m = n`) along a decreasing `g₊` path.
///
/// The seed is solved at `1/g₊ = 0` first and then continued. Where that
/// limit is singular the seed is anchored at a small finite `1/g₊` instead.
pub fn continuation_string_state(p: &ModelParams, g_path: &[f64]) -> Result<Vec<BetheSolution>> {
    continuation_string_state_with(p, g_path, &NewtonOptions::default())
}

pub fn continuation_string_state_with(p: &ModelParams, g_path: &[f64], opts: &NewtonOptions) -> Result<Vec<BetheSolution>> {
    check_descending(g_path)?;
    let Some(&g_first) = g_path.first() else {
        return Ok(Vec::new());
    };
    let dy = uniform_spacing(p)?;
    let seed = string_seed(p.n(), dy);
    // 1/g₊ = 0 is singular for some odd n (n = 3); fall back to finite anchors
    let anchors = [0.0, 1.0 / g_first, 1e-3 / dy, 1e-2 / dy];
    let mut last_err = None;
    for inv_g in anchors {
        let eq = BetheEquations::new(&p.omega, inv_g)?.with_options(opts);
        match eq.newton(&seed, opts) {
            Ok((roots, _, _)) => {
                if inv_g > 0.0 {
                    log::debug!("string seed anchored at 1/g+ = {inv_g}");
                }
                return continue_from(p, roots, inv_g, g_path, opts);
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(Error::Tracking { g_plus: f64::INFINITY, reason: last_err.map(|e| e.to_string()).unwrap_or_default() })
}

/// Zeros of the generalized Laguerre polynomial `L_n^{(−2n−1)}`, from the
/// eigenvalues of its companion matrix.
pub fn laguerre_zeros(n: usize) -> Result<Vec<C64>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    // c_k = binom(−n−1, n−k) (−1)^k / k!
    let top = -(n as f64) - 1.0;
    let coeff = |k: usize| {
        let mut b = 1.0;
        for i in 0..(n - k) {
            b *= (top - i as f64) / (i + 1) as f64;
        }
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        b * if k % 2 == 0 { 1.0 } else { -1.0 } / fact
    };
    let c: Vec<f64> = (0..=n).map(coeff).collect();
    let lead = c[n];
    let companion = Mat::from_fn(n, n, |i, j| {
        if j == n - 1 {
            C64::new(-c[i] / lead, 0.0)
        } else if i == j + 1 {
            C64::new(1.0, 0.0)
        } else {
            ZERO
        }
    });
    linalg::eigenvalues(&companion, "Laguerre companion")
}

/// Exact `ω = 0` roots of the maximal-spin state, `μ_j = (g₊/2) x_j`.
pub fn max_spin_seed(n: usize, g_plus: f64) -> Result<Vec<C64>> {
    Ok(laguerre_zeros(n)?.into_iter().map(|x| x * (0.5 * g_plus)).collect())
}

/// The `S^z_tot = 0` state descended from the maximal total spin, tracked
/// from the largest `g₊` of the path (seeded by [`max_spin_seed`]) downward.
pub fn continuation_max_spin_state(p: &ModelParams, g_path: &[f64]) -> Result<Vec<BetheSolution>> {
    continuation_max_spin_state_with(p, g_path, &NewtonOptions::default())
}

pub fn continuation_max_spin_state_with(p: &ModelParams, g_path: &[f64], opts: &NewtonOptions) -> Result<Vec<BetheSolution>> {
    check_descending(g_path)?;
    let Some(&g0) = g_path.first() else {
        return Ok(Vec::new());
    };
    let eq = BetheEquations::new(&p.omega, 1.0 / g0)?.with_options(opts);
    let (roots, _, _) =
        eq.newton(&max_spin_seed(p.n(), g0)?, opts).map_err(|e| Error::Tracking { g_plus: g0, reason: e.to_string() })?;
    continue_from(p, roots, 1.0 / g0, g_path, opts)
}

/// Random pole-safe starts solved in parallel, deduplicated as root multisets.
///
/// Even starts are drawn in a box around the poles scaled by `g₊` and the
/// pole spread, odd starts at log-uniform distances from random poles. Each
/// start has its own RNG stream, so results do not depend on scheduling.
pub fn multi_start(p: &ModelParams, m: usize, n_starts: usize, seed: u64, opts: &NewtonOptions) -> Result<Vec<BetheSolution>> {
    let eq = BetheEquations::from_params(p)?.with_options(opts);
    let spread = 0.5 * p.omega_spread().max(1e-3);
    let reach = spread.max(p.g_plus.min(10.0 * spread));
    let lo_im = 0.5 * p.omega.iter().copied().fold(f64::INFINITY, f64::min) - reach;
    let hi_im = 0.5 * p.omega.iter().copied().fold(f64::NEG_INFINITY, f64::max) + reach;
    let found: Vec<Option<BetheSolution>> = (0..n_starts)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            // odd starts cluster around poles, where the slow branches live
            let start: Vec<C64> = (0..m)
                .map(|_| {
                    if s % 2 == 0 {
                        C64::new(rng.gen_range(-reach..reach), rng.gen_range(lo_im..hi_im))
                    } else {
                        let pole = eq.poles[rng.gen_range(0..eq.poles.len())];
                        let r = spread * 10f64.powf(rng.gen_range(-2.0..0.3));
                        pole + C64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))
                    }
                })
                .collect();
            eq.newton(&start, opts).ok().map(|(x, r, it)| solution(x, p, r, it))
        })
        .collect();
    Ok(dedup(found.into_iter().flatten().collect(), 1e-8))
}

/// Removes solutions whose sorted root lists agree within `tol` (relative to
/// the root scale).
pub fn dedup(solutions: Vec<BetheSolution>, tol: f64) -> Vec<BetheSolution> {
    let mut kept: Vec<BetheSolution> = Vec::new();
    for s in solutions {
        let scale = s.roots.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let dup = kept.iter().any(|k| {
            k.roots.len() == s.roots.len()
                && linalg::match_eigenvalues(&k.roots, &s.roots).map(|(_, d)| d < tol * scale).unwrap_or(false)
        });
        if !dup {
            kept.push(s);
        }
    }
    kept
}

/// Applies `B(μ) = Σ_j S⁺_j / (μ − iω_j/2)` to a spherical-basis vector.
fn apply_raising(v: &[C64], mu: C64, poles: &[C64]) -> Vec<C64> {
    let n = poles.len();
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut out = vec![ZERO; v.len()];
    for (idx, &amp) in v.iter().enumerate() {
        if amp == ZERO {
            continue;
        }
        for (j, pole) in poles.iter().enumerate() {
            let stride = 3usize.pow((n - j - 1) as u32);
            let local = (idx / stride) % 3;
            // S⁺ raises m: local index 2 → 1 → 0, each with amplitude √2
            if local > 0 {
                out[idx - stride] += amp * sqrt2 / (mu - pole);
            }
        }
    }
    out
}

/// The normalized Bethe vector in the full `3^n` spherical basis.
pub fn bethe_vector(roots: &[C64], p: &ModelParams) -> Result<ComplexVector> {
    let n = p.n();
    let eq = BetheEquations::new(&p.omega, if p.g_plus > 0.0 { 1.0 / p.g_plus } else { 0.0 })?;
    eq.check_singular(roots, SINGULAR_TOL)?;
    let dim = 3usize.pow(n as u32);
    let mut v = vec![ZERO; dim];
    v[dim - 1] = C64::new(1.0, 0.0);
    for &mu in roots {
        v = apply_raising(&v, mu, &eq.poles);
        // rescale as we go; only the direction matters
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::ZeroVector);
        }
        v.iter_mut().for_each(|z| *z /= norm);
    }
    Ok(ComplexVector::from_fn(dim, |i| v[i]))
}

/// `‖ℒv − λv‖₂/‖v‖₂` for the Bethe vector of `sol` against a spherical-basis
/// full Liouvillian.
pub fn verify_eigenpair(l: &LiouvillianMatrix, sol: &BetheSolution) -> Result<f64> {
    if l.basis != Basis::Spherical {
        return Err(Error::InvalidParams("Bethe vectors live in the spherical basis".into()));
    }
    if l.n_sites != sol.n {
        return Err(Error::DimensionMismatch { expected: l.n_sites.to_string(), found: sol.n.to_string() });
    }
    let v = bethe_vector(&sol.roots, &sol.params)?;
    Ok(linalg::eigen_residual(&l.mat, &v, sol.eigenvalue))
}

/// As [`verify_eigenpair`], restricted to the `S^z_tot = m − n` block.
pub fn verify_in_sector(block: &SectorBlock, sol: &BetheSolution) -> Result<f64> {
    if block.sz_tot != sol.m as i32 - sol.n as i32 || block.n_sites != sol.n {
        return Err(Error::DimensionMismatch {
            expected: format!("sector {} of n = {}", sol.m as i32 - sol.n as i32, sol.n),
            found: format!("sector {} of n = {}", block.sz_tot, block.n_sites),
        });
    }
    let full = bethe_vector(&sol.roots, &sol.params)?;
    let v = ComplexVector::from_fn(block.indices.len(), |k| full[block.indices[k]]);
    Ok(linalg::eigen_residual(&block.mat, &v, sol.eigenvalue))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouvillian;

    fn params(omega_big: f64, omega: Vec<f64>, gp: f64) -> ModelParams {
        ModelParams::new(omega_big, omega, gp, 0.0).unwrap()
    }

    #[test]
    fn single_site_closed_form() {
        let (w, g) = (1.4, 2.5);
        let p = params(0.3, vec![w], g);
        let mu = [C64::new(-g, w / 2.0)];
        assert!(residual(&mu, &p).unwrap()[0].norm() < 1e-15);
        let j = jacobian(&mu, &p).unwrap();
        assert!((j[(0, 0)] + C64::new(1.0 / (g * g), 0.0)).norm() < 1e-15);
        assert!((eigenvalue_from_roots(&mu, &p) - C64::new(-2.0 * g, 0.0)).norm() < 1e-14);
        let sol = newton_solve(&mu, &p, &NewtonOptions::default()).unwrap();
        assert!(sol.iterations <= 1);
    }

    #[test]
    fn singular_configurations_are_named() {
        let p = params(0.0, vec![2.0, 4.0], 1.0);
        let err = residual(&[C64::new(0.0, 1.0), C64::new(0.5, 0.5)], &p).unwrap_err();
        assert!(err.to_string().contains("pole 0"), "{err}");
        let err = residual(&[C64::new(0.3, 0.5), C64::new(0.3, 0.5)], &p).unwrap_err();
        assert!(err.to_string().contains("collide"), "{err}");
    }

    #[test]
    fn degenerate_detunings_rejected() {
        assert!(BetheEquations::new(&[1.0, 1.0], 0.1).is_err());
        assert!(BetheEquations::new(&[1.0, 1.0 + 1e-6], 0.1).is_ok());
    }

    #[test]
    fn two_site_solution_matches_ed() {
        let p = params(0.7, vec![2.0, 4.0], 1.0);
        let ed = liouvillian::sector_spectrum(&p, 0).unwrap();
        let sols = multi_start(&p, 2, 64, 1, &NewtonOptions::default()).unwrap();
        assert!(!sols.is_empty());
        for s in &sols {
            let d = ed.iter().map(|z| (z - s.eigenvalue).norm()).fold(f64::INFINITY, f64::min);
            assert!(d < 1e-9, "λ = {} is {d:.2e} from the ED spectrum", s.eigenvalue);
        }
    }

    #[test]
    fn sector_shift_terms_match_ed() {
        // m = 1 of n = 2 lives in S^z_tot = −1; m = 0 is the pseudovacuum
        let p = ModelParams::new(0.7, vec![2.0, 4.0], 1.3, 0.4).unwrap();
        let ed = liouvillian::sector_spectrum(&p, -1).unwrap();
        let eq = BetheEquations::from_params(&p).unwrap();
        for start in [C64::new(-1.0, 0.2), C64::new(1.0, 3.0)] {
            let (x, _, _) = eq.newton(&[start], &NewtonOptions::default()).unwrap();
            let lam = eigenvalue_from_roots(&x, &p);
            let d = ed.iter().map(|z| (z - lam).norm()).fold(f64::INFINITY, f64::min);
            assert!(d < 1e-9, "λ = {lam}");
        }
        let vac = liouvillian::sector_spectrum(&p, -2).unwrap();
        assert!((vac[0] - eigenvalue_from_roots(&[], &p)).norm() < 1e-12);
    }

    #[test]
    fn bethe_vector_basics() {
        let p = params(0.0, vec![1.0, 3.0], 1.0);
        let v = bethe_vector(&[], &p).unwrap();
        assert_eq!(v[8], C64::new(1.0, 0.0));
        let p1 = params(0.0, vec![1.0], 1.0);
        let v = bethe_vector(&[C64::new(0.3, -2.0)], &p1).unwrap();
        assert!((v[1].norm() - 1.0).abs() < 1e-14 && v[0].norm() < 1e-15 && v[2].norm() < 1e-15);
    }

    #[test]
    fn string_state_matches_ed_dominant() {
        let n = 4;
        let p = ModelParams::uniform(n, 2.0, -(n as f64 + 3.0), 1.0).unwrap();
        let path = [1e3, 1e2, 10.0];
        let sols = continuation_string_state(&p, &path).unwrap();
        for s in &sols {
            let ed = liouvillian::sector_spectrum(&s.params, 0).unwrap();
            let dom = liouvillian::dominant_eigenvalue(&ed, 0.0).unwrap();
            assert!((dom - s.eigenvalue).norm() < 1e-8, "g = {}: {} vs {dom}", s.params.g_plus, s.eigenvalue);
            let block = liouvillian::build_sector(&s.params, 0).unwrap();
            assert!(verify_in_sector(&block, s).unwrap() < 1e-8);
        }
        // roots are pushed towards negative real parts as 1/g grows
        let means: Vec<f64> = sols.iter().map(|s| s.roots.iter().map(|z| z.re).sum::<f64>()).collect();
        assert!(means.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn laguerre_zero_sum() {
        for n in [1, 2, 4, 6, 10] {
            let z = laguerre_zeros(n).unwrap();
            let s: C64 = z.iter().sum();
            assert!((s + C64::new((n * (n + 1)) as f64, 0.0)).norm() < 1e-8 * (n * n) as f64, "n = {n}: {s}");
        }
    }

    #[test]
    fn max_spin_branch_at_small_omega() {
        let n = 6;
        let g = 1.0;
        let eps = 1e-5;
        let p = params(0.0, (1..=n).map(|j| eps * j as f64).collect(), g);
        let sols = continuation_max_spin_state(&p, &[g]).unwrap();
        let lam = sols[0].eigenvalue;
        assert!((lam.re + g * (n * (n + 1)) as f64).abs() < 1e-6 * g * (n * n) as f64, "{lam}");
    }

    #[test]
    fn corrupted_root_is_detected() {
        let n = 4;
        let p = ModelParams::uniform(n, 2.0, -7.0, 100.0).unwrap();
        let sol = continuation_string_state(&p, &[100.0]).unwrap().remove(0);
        let block = liouvillian::build_sector(&p, 0).unwrap();
        assert!(verify_in_sector(&block, &sol).unwrap() < 1e-8);
        let mut bad = sol.clone();
        bad.roots[0] += 0.1;
        assert!(verify_in_sector(&block, &bad).unwrap() > 1e-3);
    }

    #[test]
    fn descending_path_required() {
        let p = ModelParams::uniform(3, 2.0, -6.0, 1.0).unwrap();
        assert!(continuation_string_state(&p, &[10.0, 100.0]).is_err());
        let q = params(0.0, vec![1.0, 2.5, 3.0], 1.0);
        assert!(continuation_string_state(&q, &[10.0]).is_err());
    }
}
