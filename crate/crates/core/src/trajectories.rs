//! Stochastic-unitary unraveling: all spins precess in one common Gaussian
//! white-noise field,
//!
//! ```text
//! dH_t = Σ_j [(Ω + ω_j) dt + sqrt(2g₀) dη_z] s_j^z + sqrt(2g₊) Σ_j (dη_x s_j^x + dη_y s_j^y)
//! ```
//!
//! and each step applies `U = exp(−i dH_t)` exactly. Because `dH_t` is a sum
//! of single-site terms, `U` factorizes into one 2×2 rotation per site.
//!
//! Trajectory `k` draws from `ChaCha8Rng::seed_from_u64(seed)` on stream `k`,
//! and partial sums are reduced in a fixed chunk order, so results are
//! bitwise reproducible and independent of the thread count.

use faer::Mat;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::qme::{self, DensityMatrix};
use crate::spinalg::{ComplexMatrix, C64, I};

const CHUNK: usize = 64;
/// Largest tolerated fraction of non-finite trajectories.
pub const MAX_EXCLUDED_FRACTION: f64 = 1e-3;

/// Raw Wiener increments, each `~ N(0, dt)`; the `sqrt(2g)` factors are
/// applied in [`step_unitary`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseIncrement {
    pub d_eta_x: f64,
    pub d_eta_y: f64,
    pub d_eta_z: f64,
    pub dt: f64,
}

impl NoiseIncrement {
    pub fn zero(dt: f64) -> Self {
        Self { d_eta_x: 0.0, d_eta_y: 0.0, d_eta_z: 0.0, dt }
    }

    pub fn sample<R: Rng + ?Sized>(dt: f64, rng: &mut R) -> Self {
        let s = dt.sqrt();
        let mut g = || s * rng.sample::<f64, _>(StandardNormal);
        Self { d_eta_x: g(), d_eta_y: g(), d_eta_z: g(), dt }
    }

    pub fn negated(&self) -> Self {
        Self { d_eta_x: -self.d_eta_x, d_eta_y: -self.d_eta_y, d_eta_z: -self.d_eta_z, dt: self.dt }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub params: ModelParams,
    pub dt: f64,
    pub t_final: f64,
    pub n_traj: usize,
    pub seed: u64,
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.dt > 0.0) || !(self.t_final >= 0.0) || self.n_traj == 0 {
            return Err(Error::InvalidParams(format!(
                "need dt > 0, t_final >= 0, n_traj >= 1 (dt = {}, t = {}, n_traj = {})",
                self.dt, self.t_final, self.n_traj
            )));
        }
        Ok(())
    }
}

/// `exp(−i b·σ/2)` as a 2×2 matrix.
fn site_rotation(b: [f64; 3]) -> [[C64; 2]; 2] {
    let norm = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
    let (c, s) = ((0.5 * norm).cos(), if norm > 0.0 { (0.5 * norm).sin() / norm } else { 0.5 });
    let (x, y, z) = (b[0] * s, b[1] * s, b[2] * s);
    // cos − i(b̂·σ) sin
    [[C64::new(c, -z), C64::new(-y, -x)], [C64::new(y, -x), C64::new(c, z)]]
}

/// Per-site rotation vectors `b_j` of `dH_t` for one increment.
fn rotation_vectors(p: &ModelParams, inc: &NoiseIncrement) -> Vec<[f64; 3]> {
    let sp = (2.0 * p.g_plus).sqrt();
    let sz = (2.0 * p.g_zero).sqrt();
    (0..p.n())
        .map(|j| [sp * inc.d_eta_x, sp * inc.d_eta_y, p.precession(j) * inc.dt + sz * inc.d_eta_z])
        .collect()
}

/// `ρ ← (⊗_j u_j) ρ (⊗_j u_j)†`, applied one site at a time.
fn conjugate_by_product(rho: &mut ComplexMatrix, us: &[[[C64; 2]; 2]]) {
    let n = us.len();
    let d = 1usize << n;
    for (j, u) in us.iter().enumerate() {
        let bit = 1usize << (n - 1 - j);
        // rows: ρ ← u ρ on site j
        for col in 0..d {
            for r0 in (0..d).filter(|r| r & bit == 0) {
                let (a, b) = (rho[(r0, col)], rho[(r0 | bit, col)]);
                rho[(r0, col)] = u[0][0] * a + u[0][1] * b;
                rho[(r0 | bit, col)] = u[1][0] * a + u[1][1] * b;
            }
        }
        // columns: ρ ← ρ u† on site j
        for row in 0..d {
            for c0 in (0..d).filter(|c| c & bit == 0) {
                let (a, b) = (rho[(row, c0)], rho[(row, c0 | bit)]);
                rho[(row, c0)] = a * u[0][0].conj() + b * u[0][1].conj();
                rho[(row, c0 | bit)] = a * u[1][0].conj() + b * u[1][1].conj();
            }
        }
    }
}

fn step_in_place(rho: &mut ComplexMatrix, p: &ModelParams, inc: &NoiseIncrement) {
    let us: Vec<_> = rotation_vectors(p, inc).into_iter().map(site_rotation).collect();
    conjugate_by_product(rho, &us);
}

/// The full unitary `exp(−i dH_t)` (mainly for tests and small systems).
pub fn step_operator(p: &ModelParams, inc: &NoiseIncrement) -> ComplexMatrix {
    let us: Vec<_> = rotation_vectors(p, inc).into_iter().map(site_rotation).collect();
    let mut out = Mat::<C64>::identity(1, 1);
    for u in us {
        let m = Mat::from_fn(2, 2, |i, j| u[i][j]);
        out = crate::spinalg::kron(&out, &m);
    }
    out
}

/// One exact stochastic step `U ρ U†`.
pub fn step_unitary(rho: &DensityMatrix, p: &ModelParams, inc: &NoiseIncrement) -> Result<DensityMatrix> {
    if rho.n_spins() != p.n() {
        return Err(Error::DimensionMismatch { expected: format!("{} spins", p.n()), found: rho.n_spins().to_string() });
    }
    let mut m = rho.mat().clone();
    step_in_place(&mut m, p, inc);
    Ok(DensityMatrix::from_trusted(m))
}

fn all_finite(m: &ComplexMatrix) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| m[(i, j)].re.is_finite() && m[(i, j)].im.is_finite()))
}

/// Monte Carlo mean over trajectories with per-entry standard errors.
#[derive(Debug, Clone)]
pub struct TrajectoryAverage {
    pub mean: DensityMatrix,
    pub stderr_re: Mat<f64>,
    pub stderr_im: Mat<f64>,
    pub n_used: usize,
    pub excluded: usize,
}

/// Running mean and centred second moments (Welford within a chunk, Chan's
/// pairwise update between chunks).
struct Moments {
    mean: ComplexMatrix,
    m2_re: Mat<f64>,
    m2_im: Mat<f64>,
    count: usize,
    excluded: usize,
}

impl Moments {
    fn zeros(d: usize) -> Self {
        Self { mean: Mat::zeros(d, d), m2_re: Mat::zeros(d, d), m2_im: Mat::zeros(d, d), count: 0, excluded: 0 }
    }

    fn add(&mut self, m: &ComplexMatrix) {
        self.count += 1;
        let n = self.count as f64;
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let z = m[(i, j)];
                let delta = z - self.mean[(i, j)];
                self.mean[(i, j)] += delta / n;
                let after = z - self.mean[(i, j)];
                self.m2_re[(i, j)] += delta.re * after.re;
                self.m2_im[(i, j)] += delta.im * after.im;
            }
        }
    }

    fn merge(mut self, other: Moments) -> Self {
        let (na, nb) = (self.count as f64, other.count as f64);
        let excluded = self.excluded + other.excluded;
        if other.count == 0 {
            self.excluded = excluded;
            return self;
        }
        if self.count == 0 {
            return Moments { excluded, ..other };
        }
        let n = na + nb;
        for j in 0..self.mean.ncols() {
            for i in 0..self.mean.nrows() {
                let delta = other.mean[(i, j)] - self.mean[(i, j)];
                self.mean[(i, j)] += delta * (nb / n);
                self.m2_re[(i, j)] += other.m2_re[(i, j)] + delta.re * delta.re * na * nb / n;
                self.m2_im[(i, j)] += other.m2_im[(i, j)] + delta.im * delta.im * na * nb / n;
            }
        }
        self.count += other.count;
        self.excluded = excluded;
        self
    }

    /// Standard error of the mean per entry.
    fn stderr(&self, m2: &Mat<f64>) -> Mat<f64> {
        let n = self.count as f64;
        Mat::from_fn(m2.nrows(), m2.ncols(), |i, j| (m2[(i, j)] / (n - 1.0).max(1.0) / n).sqrt())
    }
}

/// Sums `f(k)` over `k in 0..count` in fixed-size chunks, in parallel, and
/// reduces the chunks in index order.
fn chunked_moments<F>(count: usize, d: usize, f: F) -> Moments
where
    F: Fn(usize) -> Option<ComplexMatrix> + Sync,
{
    let n_chunks = count.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut m = Moments::zeros(d);
            for k in c * CHUNK..((c + 1) * CHUNK).min(count) {
                match f(k) {
                    Some(x) => m.add(&x),
                    None => m.excluded += 1,
                }
            }
            m
        })
        .collect();
    parts.into_iter().fold(Moments::zeros(d), Moments::merge)
}

/// Runs `cfg.n_traj` independent trajectories from `rho0` to `cfg.t_final`.
pub fn average_evolution(rho0: &DensityMatrix, cfg: &TrajectoryConfig) -> Result<TrajectoryAverage> {
    cfg.validate()?;
    let p = &cfg.params;
    if rho0.n_spins() != p.n() {
        return Err(Error::DimensionMismatch { expected: format!("{} spins", p.n()), found: rho0.n_spins().to_string() });
    }
    let steps = (cfg.t_final / cfg.dt).round() as usize;
    let h = if steps == 0 { 0.0 } else { cfg.t_final / steps as f64 };
    let d = rho0.mat().nrows();
    let moments = chunked_moments(cfg.n_traj, d, |k| {
        let mut rng = crate::params::stream_rng(cfg.seed, k as u64);
        let mut rho = rho0.mat().clone();
        for _ in 0..steps {
            step_in_place(&mut rho, p, &NoiseIncrement::sample(h, &mut rng));
        }
        all_finite(&rho).then_some(rho)
    });
    if moments.excluded as f64 > MAX_EXCLUDED_FRACTION * cfg.n_traj as f64 || moments.count == 0 {
        return Err(Error::Trajectories { excluded: moments.excluded, total: cfg.n_traj });
    }
    let stderr_re = moments.stderr(&moments.m2_re);
    let stderr_im = moments.stderr(&moments.m2_im);
    Ok(TrajectoryAverage {
        mean: DensityMatrix::from_trusted(moments.mean.clone()),
        stderr_re,
        stderr_im,
        n_used: moments.count,
        excluded: moments.excluded,
    })
}

/// Estimated Itô drift minus the master-equation right-hand side.
#[derive(Debug, Clone)]
pub struct DriftCheck {
    /// `E[Δρ]/dt − lindblad_rhs(ρ)`.
    pub residual: ComplexMatrix,
    /// Largest per-entry Monte Carlo standard error of `E[Δρ]/dt`.
    pub max_stderr: f64,
}

impl DriftCheck {
    pub fn norm(&self) -> f64 {
        self.residual.norm_l2()
    }
}

/// Single-step estimate of the drift using antithetic pairs `(η, −η)`, which
/// cancel the odd orders of the noise exactly.
pub fn ito_drift_check(rho: &DensityMatrix, p: &ModelParams, dt: f64, n_samples: usize, seed: u64) -> Result<DriftCheck> {
    if !(dt > 0.0) || n_samples == 0 {
        return Err(Error::InvalidParams("need dt > 0 and n_samples >= 1".into()));
    }
    if dt * p.g_plus.max(p.g_zero) > 1e-2 {
        log::warn!("dt * rate = {:.3e} is not small; the drift estimate carries an O(dt) bias", dt * p.g_plus.max(p.g_zero));
    }
    let model = qme::build_model(p)?;
    let d = rho.mat().nrows();
    let moments = chunked_moments(n_samples, d, |k| {
        let mut rng = crate::params::stream_rng(seed, k as u64);
        let inc = NoiseIncrement::sample(dt, &mut rng);
        let mut a = rho.mat().clone();
        let mut b = rho.mat().clone();
        step_in_place(&mut a, p, &inc);
        step_in_place(&mut b, p, &inc.negated());
        let delta = Mat::from_fn(d, d, |i, j| ((a[(i, j)] + b[(i, j)]) * 0.5 - rho.mat()[(i, j)]) / dt);
        Some(delta)
    });
    let max_stderr = moments.stderr(&moments.m2_re).norm_max().max(moments.stderr(&moments.m2_im).norm_max());
    let mean = moments.mean;
    let rhs = qme::lindblad_rhs(rho.mat(), &model)?;
    Ok(DriftCheck { residual: mean - rhs, max_stderr })
}

/// Commutator part of the drift, `−i[H, ρ]`, for the deterministic limit.
pub fn deterministic_drift(rho: &DensityMatrix, p: &ModelParams) -> Result<ComplexMatrix> {
    let h = qme::build_model(p)?.h;
    Ok((&h * rho.mat() - rho.mat() * &h) * faer::Scale(-I))
}
