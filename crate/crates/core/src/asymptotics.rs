//! Large-`n` limit of the string state.
//!
//! With poles spaced by `iΔ_y` and the free charges split evenly between real
//! parts `+Δ₊` and `−Δ₋`, the lattice sums close to
//!
//! ```text
//! (2π/Δ_y) tanh(2πΔ₊/Δ_y) = (π/Δ_y) coth(π(Δ₊+Δ₋)/Δ_y) − 1/g₊
//! (2π/Δ_y) tanh(2πΔ₋/Δ_y) = (π/Δ_y) coth(π(Δ₊+Δ₋)/Δ_y) + 1/g₊
//! ```
//!
//! and the eigenvalue follows from `Re λ = 2 Σ Re μ ≈ n(Δ₊ − Δ₋)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaPair {
    pub delta_plus: f64,
    pub delta_minus: f64,
    pub delta_y: f64,
    /// `f64::INFINITY` at the infinite-noise point.
    pub g_plus: f64,
    /// `max |F|` of the two defining equations at the returned pair.
    pub residual: f64,
}

impl DeltaPair {
    /// Predicted decay rate per spin, `Δ₋ − Δ₊`.
    pub fn rate_per_spin(&self) -> f64 {
        self.delta_minus - self.delta_plus
    }
}

/// The symmetric `1/g₊ = 0` solution, `Δ_y artanh(1/√2) / 2π`.
pub fn symmetric_delta(delta_y: f64) -> f64 {
    crate::bethe::string_offset(delta_y)
}

fn equations(x: f64, y: f64, delta_y: f64, inv_g: f64) -> [f64; 2] {
    let a = 2.0 * std::f64::consts::PI / delta_y;
    let b = a / 2.0;
    let coth = 1.0 / (b * (x + y)).tanh();
    [a * (a * x).tanh() - b * coth + inv_g, a * (a * y).tanh() - b * coth - inv_g]
}

fn jacobian(x: f64, y: f64, delta_y: f64) -> [[f64; 2]; 2] {
    let a = 2.0 * std::f64::consts::PI / delta_y;
    let b = a / 2.0;
    let csch2 = (b * (x + y)).sinh().powi(-2) * b * b;
    let sech2 = |t: f64| (a * t).cosh().powi(-2) * a * a;
    [[sech2(x) + csch2, csch2], [csch2, sech2(y) + csch2]]
}

fn newton(mut x: f64, mut y: f64, delta_y: f64, inv_g: f64, tol: f64) -> Result<(f64, f64, f64)> {
    let mut f = equations(x, y, delta_y, inv_g);
    let mut r = f[0].abs().max(f[1].abs());
    for _ in 0..100 {
        if r < tol {
            return Ok((x, y, r));
        }
        let j = jacobian(x, y, delta_y);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let dx = -(j[1][1] * f[0] - j[0][1] * f[1]) / det;
        let dy = -(-j[1][0] * f[0] + j[0][0] * f[1]) / det;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            // negative offsets are reflected back; the step is damped regardless
            let (xn, yn) = ((x + t * dx).abs(), (y + t * dy).abs());
            let fn_ = equations(xn, yn, delta_y, inv_g);
            let rn = fn_[0].abs().max(fn_[1].abs());
            if rn.is_finite() && rn < r {
                x = xn;
                y = yn;
                f = fn_;
                r = rn;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if r < tol {
        Ok((x, y, r))
    } else {
        Err(Error::NoConvergence { iterations: 100, residual: r })
    }
}

/// Solves for `(Δ₊, Δ₋)` by damped Newton, continued in `1/g₊` from the
/// symmetric closed form. `g_plus = ∞` is allowed.
pub fn solve_delta(delta_y: f64, g_plus: f64) -> Result<DeltaPair> {
    if !(delta_y > 0.0) || !(g_plus > 0.0) || !delta_y.is_finite() {
        return Err(Error::InvalidParams(format!("need Δ_y > 0 and g+ > 0 (Δ_y = {delta_y}, g+ = {g_plus})")));
    }
    let inv_g = 1.0 / g_plus;
    // residuals scale like 1/Δ_y
    let tol = 1e-13 / delta_y.min(1.0);
    let d0 = symmetric_delta(delta_y);
    let (mut x, mut y) = (d0, d0);
    let mut cur = 0.0;
    let mut targets = vec![inv_g];
    let mut refinements = 0;
    let mut res = 0.0;
    while let Some(&t) = targets.last() {
        match newton(x, y, delta_y, t, tol) {
            Ok((xn, yn, r)) => {
                (x, y, res) = (xn, yn, r);
                cur = t;
                targets.pop();
            }
            Err(e) => {
                refinements += 1;
                if refinements > 30 {
                    return Err(e);
                }
                targets.push(0.5 * (cur + t));
            }
        }
    }
    Ok(DeltaPair { delta_plus: x, delta_minus: y, delta_y, g_plus, residual: res })
}

/// Re-evaluates the defining equations at a pair.
pub fn residuals(dp: &DeltaPair) -> [f64; 2] {
    equations(dp.delta_plus, dp.delta_minus, dp.delta_y, 1.0 / dp.g_plus)
}

/// Predicted real part of the string-state eigenvalue, `n(Δ₊ − Δ₋) ≤ 0`.
///
/// This closes the sum over `n/2` roots on each side and is only trusted
/// after comparison with finite-`n` Bethe solutions.
pub fn rate_prediction(dp: &DeltaPair, n: usize) -> f64 {
    n as f64 * (dp.delta_plus - dp.delta_minus)
}
