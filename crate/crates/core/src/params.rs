//! The physical parameter set shared by every module.
//!
//! `g_plus` and `g_zero` are the coefficients of the spin-spin terms of the
//! correlator Liouvillian,
//!
//! ```text
//! L = i Σ_j (Ω + ω_j) S^z_j − g₊ Σ_{j,k} (S^x_j S^x_k + S^y_j S^y_k) − g₀ Σ_{j,k} S^z_j S^z_k .
//! ```
//!
//! On the density-matrix side the same rates correspond to Hermitian jump
//! operators `L_α = sqrt(2 g_α) Σ_j s_j^α` (equivalently `L_± = sqrt(g₊) Σ_j s_j^±`
//! with `g₊ = g₋`), and to white noise of covariance `2 g_α δ(t − t')` in the
//! stochastic unraveling. See the book chapter on conventions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Independent deterministic sub-stream `index` of `seed`. Parallel loops draw
/// item `k` from stream `k`, so results do not depend on thread scheduling.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Common precession frequency Ω.
    pub omega_big: f64,
    /// Per-spin detunings ω_j; its length is the number of spins (or sites).
    pub omega: Vec<f64>,
    pub g_plus: f64,
    pub g_zero: f64,
}

impl ModelParams {
    pub fn new(omega_big: f64, omega: Vec<f64>, g_plus: f64, g_zero: f64) -> Result<Self> {
        let p = Self { omega_big, omega, g_plus, g_zero };
        p.validate()?;
        Ok(p)
    }

    /// Uniformly spaced detunings `ω_j = j Δ_y`, `j = 1..=n`.
    pub fn uniform(n: usize, delta_y: f64, omega_big: f64, g_plus: f64) -> Result<Self> {
        let omega = (1..=n).map(|j| j as f64 * delta_y).collect();
        Self::new(omega_big, omega, g_plus, 0.0)
    }

    /// Detunings drawn i.i.d. from `Uni(lo, hi)`.
    pub fn random_uniform<R: Rng + ?Sized>(
        n: usize,
        lo: f64,
        hi: f64,
        omega_big: f64,
        g_plus: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let omega = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
        Self::new(omega_big, omega, g_plus, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.omega.is_empty() {
            return Err(Error::InvalidParams("at least one spin is required".into()));
        }
        if !(self.g_plus >= 0.0) || !(self.g_zero >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "rates must be non-negative (g+ = {}, g0 = {})",
                self.g_plus, self.g_zero
            )));
        }
        let all = [self.omega_big, self.g_plus, self.g_zero];
        if all.iter().chain(&self.omega).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.omega.len()
    }

    pub fn with_g_plus(&self, g_plus: f64) -> Self {
        Self { g_plus, ..self.clone() }
    }

    pub fn with_omega(&self, omega: Vec<f64>) -> Self {
        Self { omega, ..self.clone() }
    }

    /// Precession frequency of site `j`, `Ω + ω_j`.
    pub fn precession(&self, j: usize) -> f64 {
        self.omega_big + self.omega[j]
    }

    /// Largest rate or frequency scale, used for step-size sanity checks.
    pub fn scale(&self) -> f64 {
        let w = self.omega.iter().map(|w| (self.omega_big + w).abs()).fold(0.0, f64::max);
        w.max(self.g_plus).max(self.g_zero)
    }

    /// `max ω − min ω`.
    pub fn omega_spread(&self) -> f64 {
        let lo = self.omega.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.omega.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }
}
