//! Spectral statistics: eigenvalue flow under a change of the detunings,
//! nearest-neighbour spacings, and the distribution of the relaxation rate.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouvillian;
use crate::linalg;
use crate::params::{stream_rng, ModelParams};
use crate::spinalg::C64;

/// How raw spacings are brought to unit mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unfolding {
    /// Divide by the mean spacing of the whole level set.
    GlobalMean,
    /// Divide each spacing by the mean over a centred window of this many
    /// spacings (clamped at the ends).
    Window(usize),
}

impl Default for Unfolding {
    fn default() -> Self {
        Unfolding::Window(10)
    }
}

/// Sorted nearest-neighbour spacings normalized to unit local mean.
pub fn normalized_spacings(levels: &[f64], unfolding: Unfolding) -> Result<Vec<f64>> {
    if levels.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: levels.len() });
    }
    if levels.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("level set".into()));
    }
    let mut sorted = levels.to_vec();
    sorted.sort_by(f64::total_cmp);
    let raw: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    let m = raw.len();
    let local_mean = |i: usize| -> f64 {
        match unfolding {
            Unfolding::GlobalMean => raw.iter().sum::<f64>() / m as f64,
            Unfolding::Window(w) => {
                let w = w.clamp(1, m);
                let lo = i.saturating_sub(w / 2).min(m - w);
                raw[lo..lo + w].iter().sum::<f64>() / w as f64
            }
        }
    };
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let mean = local_mean(i);
        if !(mean > 0.0) {
            return Err(Error::DegenerateSample("zero mean spacing".into()));
        }
        out.push(raw[i] / mean);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Asymptotic Kolmogorov tail probability with the Stephens small-sample
/// correction, `Q((√n + 0.12 + 0.11/√n) D)`.
pub fn kolmogorov_p(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    if sample.is_empty() {
        return Err(Error::Empty("KS sample".into()));
    }
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        let f = cdf(xi);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(KsResult { statistic: d, p_value: kolmogorov_p(d, x.len()), n: x.len() })
}

pub fn ks_exponential(spacings: &[f64]) -> Result<KsResult> {
    ks_test(spacings, |s| if s <= 0.0 { 0.0 } else { 1.0 - (-s).exp() })
}

/// Minimum number of levels accepted by the spacing tests.
pub const MIN_SPACING_SAMPLES: usize = 50;

/// KS test of the unfolded nearest-neighbour spacings of `levels` against the
/// unit exponential (Poisson statistics).
pub fn spacing_statistics(levels: &[f64], unfolding: Unfolding) -> Result<KsResult> {
    if levels.len() < MIN_SPACING_SAMPLES {
        return Err(Error::TooFewSamples { needed: MIN_SPACING_SAMPLES, got: levels.len() });
    }
    ks_exponential(&normalized_spacings(levels, unfolding)?)
}

/// Unfolds each level set separately and pools the spacings before testing.
pub fn pooled_spacing_statistics(groups: &[Vec<f64>], unfolding: Unfolding) -> Result<KsResult> {
    let mut pooled = Vec::new();
    for g in groups {
        pooled.extend(normalized_spacings(g, unfolding)?);
    }
    if pooled.len() < MIN_SPACING_SAMPLES {
        return Err(Error::TooFewSamples { needed: MIN_SPACING_SAMPLES, got: pooled.len() });
    }
    ks_exponential(&pooled)
}

/// Spacings drawn from the Wigner surmise `(π s/2) exp(−π s²/4)`.
pub fn wigner_surmise_sample<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<f64> {
    (0..count)
        .map(|_| {
            let u: f64 = rng.gen();
            (-4.0 * (1.0 - u).ln() / std::f64::consts::PI).sqrt()
        })
        .collect()
}

/// The cluster of slow modes separated from the rest of the spectrum by the
/// widest multiplicative gap in `|λ|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlowCluster {
    pub values: Vec<C64>,
    /// Geometric mean of the moduli on either side of the gap.
    pub threshold: f64,
    /// Ratio of those moduli.
    pub gap_ratio: f64,
}

pub fn slow_cluster(eigs: &[C64]) -> Result<SlowCluster> {
    if eigs.len() < 2 {
        return Err(Error::Empty("need at least two eigenvalues".into()));
    }
    let scale = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let floor = 1e-12 * scale;
    let mut mods: Vec<f64> = eigs.iter().map(|z| z.norm().max(floor)).collect();
    mods.sort_by(f64::total_cmp);
    let (mut best, mut at) = (0.0, 0);
    for i in 0..mods.len() - 1 {
        let r = mods[i + 1] / mods[i];
        if r > best {
            best = r;
            at = i;
        }
    }
    let threshold = (mods[at] * mods[at + 1]).sqrt();
    let values = eigs.iter().copied().filter(|z| z.norm().max(floor) < threshold).collect();
    Ok(SlowCluster { values, threshold, gap_ratio: best })
}

/// Distribution of the detunings in a random draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OmegaSampler {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, std: f64 },
    Zero,
}

impl OmegaSampler {
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        match *self {
            OmegaSampler::Uniform { lo, hi } => {
                if !(lo < hi) {
                    return Err(Error::InvalidParams(format!("empty uniform range [{lo}, {hi})")));
                }
                Ok((0..n).map(|_| rng.gen_range(lo..hi)).collect())
            }
            OmegaSampler::Normal { mean, std } => {
                let d = Normal::new(mean, std).map_err(|e| Error::InvalidParams(e.to_string()))?;
                Ok((0..n).map(|_| d.sample(rng)).collect())
            }
            OmegaSampler::Zero => Ok(vec![0.0; n]),
        }
    }

    /// The same distribution with every length multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        match *self {
            OmegaSampler::Uniform { lo, hi } => OmegaSampler::Uniform { lo: s * lo, hi: s * hi },
            OmegaSampler::Normal { mean, std } => OmegaSampler::Normal { mean: s * mean, std: s * std },
            OmegaSampler::Zero => OmegaSampler::Zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSample {
    /// Relaxation rates `λ₀ = −Re λ_dom ≥ 0`, one per draw, in draw order.
    pub draws: Vec<f64>,
    pub n: usize,
    pub sampler: OmegaSampler,
    pub omega_big: f64,
    pub g_plus: f64,
    pub seed: u64,
}

/// Relaxation rate of each of `n_draws` i.i.d. detuning draws. Draw `k` uses
/// sub-stream `k` of `seed`.
pub fn rate_distribution(
    n: usize,
    sampler: OmegaSampler,
    omega_big: f64,
    g_plus: f64,
    n_draws: usize,
    seed: u64,
) -> Result<RateSample> {
    let draws = (0..n_draws)
        .into_par_iter()
        .map(|k| {
            let omega = sampler.sample(n, &mut stream_rng(seed, k as u64))?;
            let p = ModelParams::new(omega_big, omega, g_plus, 0.0)?;
            let eigs = liouvillian::full_spectrum_by_sectors(&p)?.eigenvalues;
            let dom = liouvillian::dominant_eigenvalue(&eigs, 0.0)?;
            Ok((-dom.re).max(0.0))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(RateSample { draws, n, sampler, omega_big, g_plus, seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullFit {
    /// Shape.
    pub alpha: f64,
    /// Scale.
    pub beta: f64,
    pub ks: KsResult,
}

/// Maximum-likelihood Weibull fit. The shape solves the profile equation
/// `Σ x^α ln x / Σ x^α − 1/α − mean(ln x) = 0` (monotone in α) by safeguarded
/// Newton; the scale follows as `(mean x^α)^{1/α}`.
pub fn weibull_fit(sample: &[f64]) -> Result<WeibullFit> {
    if sample.len() < 100 {
        return Err(Error::TooFewSamples { needed: 100, got: sample.len() });
    }
    if sample.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::InvalidParams("Weibull fit needs finite positive samples".into()));
    }
    let n = sample.len() as f64;
    let mean_ln = sample.iter().map(|x| x.ln()).sum::<f64>() / n;
    // work with y = x / geometric mean so x^α stays representable
    let logs: Vec<f64> = sample.iter().map(|x| x.ln() - mean_ln).collect();
    if logs.iter().all(|&l| l.abs() < 1e-12) {
        return Err(Error::DegenerateSample("all values equal".into()));
    }
    let h = |a: f64| -> (f64, f64) {
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        let shift = logs.iter().fold(f64::NEG_INFINITY, |m, &l| m.max(a * l));
        for &l in &logs {
            let w = (a * l - shift).exp();
            s0 += w;
            s1 += w * l;
            s2 += w * l * l;
        }
        let m1 = s1 / s0;
        (m1 - 1.0 / a, s2 / s0 - m1 * m1 + 1.0 / (a * a))
    };
    let (mut lo, mut hi) = (1e-3, 1.0);
    while h(hi).0 < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::NoConvergence { iterations: 0, residual: h(hi).0 });
        }
    }
    let mut a = 0.5 * (lo + hi);
    let mut converged = false;
    for _ in 0..200 {
        let (f, df) = h(a);
        if f < 0.0 {
            lo = a;
        } else {
            hi = a;
        }
        let mut next = a - f / df;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - a).abs() < 1e-14 * a {
            a = next;
            converged = true;
            break;
        }
        a = next;
    }
    if !converged {
        return Err(Error::NoConvergence { iterations: 200, residual: h(a).0 });
    }
    let shift = logs.iter().fold(f64::NEG_INFINITY, |m, &l| m.max(a * l));
    let mean_pow = logs.iter().map(|&l| (a * l - shift).exp()).sum::<f64>() / n;
    let beta = ((mean_pow.ln() + shift) / a + mean_ln).exp();
    let ks = ks_test(sample, |x| if x <= 0.0 { 0.0 } else { 1.0 - (-(x / beta).powf(a)).exp() })?;
    Ok(WeibullFit { alpha: a, beta, ks })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    /// A match is accepted when its distance from the predicted value is at
    /// most this fraction of the distance to the next-best candidate.
    pub ambiguity: f64,
    /// Interval halvings allowed before giving up.
    pub max_refinements: usize,
    /// Relative tolerance under which two eigenvalues count as degenerate.
    pub degeneracy_tol: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { ambiguity: 0.5, max_refinements: 4, degeneracy_tol: 1e-9 }
    }
}

/// Eigenvalues followed continuously along a parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    /// The grid actually used, including refinement points.
    pub grid: Vec<f64>,
    /// `trajectories[i][k]` is eigenvalue `i` at `grid[k]`.
    pub trajectories: Vec<Vec<C64>>,
    /// Total number of interval halvings performed.
    pub refinements: usize,
    /// Largest accepted ambiguity ratio.
    pub worst_ratio: f64,
}

impl FlowTrace {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }
}

fn spectrum_scale(z: &[C64]) -> f64 {
    z.iter().map(|w| w.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE)
}

/// Assigns `next` to the trajectories ending in `cur` (with previous point
/// `prev`, stepped by `h_prev` and now by `h`). Returns the permutation and
/// the worst ambiguity ratio.
fn match_step(prev: Option<(&[C64], f64)>, cur: &[C64], next: &[C64], h: f64, opts: &FlowOptions) -> (Vec<usize>, f64) {
    let pred: Vec<C64> = match prev {
        Some((p, h_prev)) => cur.iter().zip(p).map(|(c, q)| c + (c - q) * (h / h_prev)).collect(),
        None => cur.to_vec(),
    };
    let cost: Vec<Vec<f64>> = pred.iter().map(|p| next.iter().map(|w| (p - w).norm()).collect()).collect();
    let assign = linalg::hungarian(&cost);
    let deg = opts.degeneracy_tol * spectrum_scale(cur).max(spectrum_scale(next));
    let mut worst: f64 = 0.0;
    for i in 0..cur.len() {
        let d = cost[i][assign[i]];
        if d <= deg {
            continue;
        }
        // candidates taken by trajectories degenerate with i are equivalent
        let taken_by_cluster: Vec<usize> =
            (0..cur.len()).filter(|&j| (cur[j] - cur[i]).norm() <= deg).map(|j| assign[j]).collect();
        let second = (0..next.len())
            .filter(|c| !taken_by_cluster.contains(c))
            .map(|c| cost[i][c])
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(if second > 0.0 { d / second } else { f64::INFINITY });
    }
    (assign, worst)
}

/// Follows the eigenvalues returned by `spectrum_at` along `grid`, halving
/// any interval where the predictor-corrector matching is ambiguous.
pub fn track<F>(grid: &[f64], spectrum_at: F, opts: &FlowOptions) -> Result<FlowTrace>
where
    F: Fn(f64) -> Result<Vec<C64>> + Sync,
{
    if grid.len() < 2 {
        return Err(Error::Empty("flow grid needs at least two points".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParams("flow grid must be strictly increasing".into()));
    }
    let spectra: Vec<Vec<C64>> = grid.par_iter().map(|&x| spectrum_at(x)).collect::<Result<_>>()?;
    let dim = spectra[0].len();
    if spectra.iter().any(|s| s.len() != dim) {
        return Err(Error::DimensionMismatch { expected: format!("{dim} eigenvalues at every grid point"), found: "varying counts".into() });
    }
    let mut start = spectra[0].clone();
    linalg::sort_complex(&mut start);
    let mut out_grid = vec![grid[0]];
    let mut cols: Vec<Vec<C64>> = vec![start];
    let mut refinements = 0;
    let mut worst_ratio: f64 = 0.0;

    for (k, w) in grid.windows(2).enumerate() {
        // stack of pending points in this interval, nearest last
        let mut pending: Vec<(f64, Vec<C64>, usize)> = vec![(w[1], spectra[k + 1].clone(), 0)];
        while let Some((x, next, depth)) = pending.pop() {
            let x_cur = *out_grid.last().expect("nonempty");
            let h = x - x_cur;
            let prev = if out_grid.len() >= 2 {
                Some((cols[cols.len() - 2].as_slice(), x_cur - out_grid[out_grid.len() - 2]))
            } else {
                None
            };
            let cur = cols.last().expect("nonempty");
            let (assign, ratio) = match_step(prev, cur, &next, h, opts);
            if ratio <= opts.ambiguity {
                worst_ratio = worst_ratio.max(ratio);
                cols.push(assign.iter().map(|&c| next[c]).collect());
                out_grid.push(x);
                continue;
            }
            if depth >= opts.max_refinements {
                return Err(Error::Matching { lo: x_cur, hi: x, refinements: depth });
            }
            let mid = 0.5 * (x_cur + x);
            refinements += 1;
            let mid_spec = spectrum_at(mid)?;
            pending.push((x, next, depth + 1));
            pending.push((mid, mid_spec, depth + 1));
        }
    }
    let trajectories = (0..dim).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    Ok(FlowTrace { grid: out_grid, trajectories, refinements, worst_ratio })
}

/// A seeded non-uniform unit direction in detuning space. A uniform shift
/// `ω_j → ω_j + c` only adds `i c S^z_tot`, which is constant on a sector, so
/// the mean is projected out.
pub fn flow_direction(n: usize, seed: u64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidParams("a non-uniform direction needs n ≥ 2".into()));
    }
    let mut rng = stream_rng(seed, u64::MAX);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mean = v.iter().sum::<f64>() / n as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::InvalidParams("degenerate direction".into()));
    }
    Ok(v.into_iter().map(|x| x / norm).collect())
}

/// Sector eigenvalues along `ω(Δω) = ω + Δω·direction`.
pub fn flow_sweep(p: &ModelParams, d_omega_grid: &[f64], sector: i32, direction: &[f64]) -> Result<FlowTrace> {
    flow_sweep_with(p, d_omega_grid, sector, direction, &FlowOptions::default())
}

pub fn flow_sweep_with(
    p: &ModelParams,
    d_omega_grid: &[f64],
    sector: i32,
    direction: &[f64],
    opts: &FlowOptions,
) -> Result<FlowTrace> {
    if direction.len() != p.n() {
        return Err(Error::DimensionMismatch { expected: format!("{} direction entries", p.n()), found: direction.len().to_string() });
    }
    let at = |d: f64| {
        let omega = p.omega.iter().zip(direction).map(|(w, v)| w + d * v).collect();
        liouvillian::sector_spectrum(&p.with_omega(omega), sector)
    };
    track(d_omega_grid, at, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub a: usize,
    pub b: usize,
    /// Grid interval `[lo, hi]` containing the swap.
    pub lo: f64,
    pub hi: f64,
    /// Linearly interpolated position of the closest approach.
    pub at: f64,
    /// Interpolated minimal `|λ_a − λ_b|` on the interval.
    pub min_distance: f64,
}

/// Level crossings in a trace: the real-part order of two trajectories swaps
/// on a grid interval and the linearly interpolated minimal distance there is
/// below `rel_tol` times the local modulus (an avoided crossing keeps its gap).
/// Both endpoint distances must exceed that tolerance, so pairs that stay
/// degenerate (and swap order only through roundoff) are not reported.
///
/// An avoided crossing whose gap is small compared with the grid step is
/// indistinguishable from a crossing on that grid; resolve it by refining.
pub fn detect_crossings(trace: &FlowTrace, rel_tol: f64) -> Vec<Crossing> {
    let mut out = Vec::new();
    let t = &trace.trajectories;
    for k in 0..trace.grid.len().saturating_sub(1) {
        for a in 0..t.len() {
            for b in a + 1..t.len() {
                let d0 = t[a][k] - t[b][k];
                let d1 = t[a][k + 1] - t[b][k + 1];
                if d0.re * d1.re >= 0.0 {
                    continue;
                }
                let dd = d1 - d0;
                let s = if dd.norm_sqr() > 0.0 { (-(d0.re * dd.re + d0.im * dd.im) / dd.norm_sqr()).clamp(0.0, 1.0) } else { 0.0 };
                let min_distance = (d0 + dd * s).norm();
                let local = [t[a][k], t[a][k + 1], t[b][k], t[b][k + 1]].iter().map(|z| z.norm()).fold(0.0, f64::max);
                let tol = rel_tol * local;
                if min_distance <= tol && d0.norm() > tol && d1.norm() > tol {
                    let (lo, hi) = (trace.grid[k], trace.grid[k + 1]);
                    out.push(Crossing { a, b, lo, hi, at: lo + s * (hi - lo), min_distance });
                }
            }
        }
    }
    out
}

/// Default relative gap below which an order swap counts as a crossing.
pub const CROSSING_REL_TOL: f64 = 1e-6;
