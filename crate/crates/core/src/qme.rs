//! Lindblad dynamics of `N` spin-1/2s and correlation-tensor extraction.
//!
//! Correlators are Pauli-normalized, `c_{a₁…a_N} = tr[ρ σ^{a₁} ⊗ … ⊗ σ^{a_N}]`,
//! so that `ρ = 2^{−N} Σ c σ^{a₁} ⊗ … ⊗ σ^{a_N}`. Any other normalization
//! rescales each fixed-rank block by a constant and leaves the Liouvillian
//! action unchanged.

use faer::{Mat, Scale};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::params::ModelParams;
use crate::spinalg::{self, AxisLabel, Basis, ComplexMatrix, ComplexVector, C64, I, ONE, ZERO};

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = 1e-8;
/// Largest supported number of spin-1/2s for dense density matrices.
pub const MAX_SPINS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
    n_spins: usize,
}

fn spins_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::DimensionMismatch { expected: "2^N".into(), found: dim.to_string() });
    }
    Ok(dim.trailing_zeros() as usize)
}

fn check_square(m: &ComplexMatrix, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: format!("{dim}x{dim}"),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    Ok(())
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// `max |A − A†|`.
pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    spinalg::max_abs(&(m - m.adjoint()))
}

fn symmetrize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * Scale(C64::new(0.5, 0.0))
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace, and positivity.
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        let n_spins = spins_for_dim(mat.nrows())?;
        check_square(&mat, mat.nrows())?;
        let h = hermiticity_defect(&mat);
        if h > HERMITIAN_TOL {
            return Err(Error::InvalidParams(format!("density matrix is not Hermitian (defect {h:.3e})")));
        }
        let tr = trace(&mat);
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::InvalidParams(format!("density matrix trace is {tr}, expected 1")));
        }
        let rho = Self { mat: symmetrize(&mat), n_spins };
        let lo = rho.min_eigenvalue()?;
        if lo < -POSITIVITY_TOL {
            return Err(Error::Positivity { min_eigenvalue: lo, time: 0.0 });
        }
        Ok(rho)
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let d = 1usize << n;
        Self { mat: Mat::<C64>::identity(d, d) * Scale(C64::new(1.0 / d as f64, 0.0)), n_spins: n }
    }

    /// `|ψ⟩⟨ψ|` for a state vector (normalized here).
    pub fn pure(psi: &ComplexVector) -> Result<Self> {
        let n_spins = spins_for_dim(psi.nrows())?;
        let norm = psi.norm_l2();
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        let mat = Mat::from_fn(psi.nrows(), psi.nrows(), |i, j| psi[i] * psi[j].conj() / (norm * norm));
        Ok(Self { mat, n_spins })
    }

    /// Product state with every spin up, `|↑…↑⟩`.
    pub fn all_up(n: usize) -> Self {
        let d = 1usize << n;
        Self { mat: Mat::from_fn(d, d, |i, j| if i == 0 && j == 0 { ONE } else { ZERO }), n_spins: n }
    }

    /// Two-qubit Werner state `(𝟙 + c Σ_a σ^a ⊗ σ^a)/4`, `c ∈ [−1, 1/3]`.
    pub fn werner(c: f64) -> Result<Self> {
        let mut m = Mat::<C64>::identity(4, 4);
        for a in AxisLabel::CARTESIAN {
            m = m + spinalg::kron(&spinalg::pauli(a), &spinalg::pauli(a)) * Scale(C64::new(c, 0.0));
        }
        Self::new(m * Scale(C64::new(0.25, 0.0)))
    }

    /// Two-qubit singlet `(|↑↓⟩ − |↓↑⟩)/√2`.
    pub fn singlet() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = ComplexVector::from_fn(4, |i| match i {
            1 => C64::new(h, 0.0),
            2 => C64::new(-h, 0.0),
            _ => ZERO,
        });
        Self::pure(&psi).expect("singlet is a valid state")
    }

    /// Random full-rank state `A A† / tr(A A†)` with Gaussian `A`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let d = 1usize << n;
        let a = Mat::from_fn(d, d, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        let m = &a * a.adjoint();
        let tr = trace(&m).re;
        Self { mat: symmetrize(&m) * Scale(C64::new(1.0 / tr, 0.0)), n_spins: n }
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn mat(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_inner(self) -> ComplexMatrix {
        self.mat
    }

    pub fn trace(&self) -> C64 {
        trace(&self.mat)
    }

    pub fn purity(&self) -> f64 {
        trace(&(&self.mat * &self.mat)).re
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(linalg::hermitian_eigenvalues(&self.mat)?[0])
    }

    /// Wraps a matrix that is already known to be a state, only re-symmetrizing.
    pub(crate) fn from_trusted(mat: ComplexMatrix) -> Self {
        let n_spins = mat.nrows().trailing_zeros() as usize;
        Self { mat: symmetrize(&mat), n_spins }
    }
}

/// Hamiltonian and jump operators of the master equation.
#[derive(Debug, Clone)]
pub struct QmeModel {
    pub h: ComplexMatrix,
    pub lindblads: Vec<ComplexMatrix>,
}

/// `Σ_j s_j^a` over `n` spins.
pub fn total_spin(a: AxisLabel, n: usize) -> Result<ComplexMatrix> {
    let s = spinalg::spin_half(a);
    let d = 1usize << n;
    let mut out = Mat::<C64>::zeros(d, d);
    for j in 0..n {
        out = out + spinalg::embed(&s, j, n, 2)?;
    }
    Ok(out)
}

/// `H = Σ_j (Ω + ω_j) s_j^z` and `L_α = sqrt(2 g_α) Σ_j s_j^α` with
/// `g_x = g_y = g₊`, `g_z = g₀`.
pub fn build_model(p: &ModelParams) -> Result<QmeModel> {
    p.validate()?;
    let n = p.n();
    if n > MAX_SPINS {
        return Err(Error::TooLarge { n, dim: 1 << n, max_n: MAX_SPINS });
    }
    let d = 1usize << n;
    let sz = spinalg::spin_half(AxisLabel::Z);
    let mut h = Mat::<C64>::zeros(d, d);
    for j in 0..n {
        h = h + spinalg::embed(&sz, j, n, 2)? * Scale(C64::new(p.precession(j), 0.0));
    }
    let rate = |g: f64| Scale(C64::new((2.0 * g).sqrt(), 0.0));
    let lindblads = vec![
        total_spin(AxisLabel::X, n)? * rate(p.g_plus),
        total_spin(AxisLabel::Y, n)? * rate(p.g_plus),
        total_spin(AxisLabel::Z, n)? * rate(p.g_zero),
    ];
    Ok(QmeModel { h, lindblads })
}

/// `−i[H, ρ] + Σ_α (L_α ρ L_α† − ½{L_α† L_α, ρ})`.
pub fn lindblad_rhs(rho: &ComplexMatrix, model: &QmeModel) -> Result<ComplexMatrix> {
    let d = model.h.nrows();
    check_square(rho, d)?;
    for l in &model.lindblads {
        check_square(l, d)?;
    }
    let mut out = (&model.h * rho - rho * &model.h) * Scale(-I);
    let half = Scale(C64::new(0.5, 0.0));
    for l in &model.lindblads {
        let ld = l.adjoint();
        let ldl = ld * l;
        out = out + l * rho * ld - (&ldl * rho + rho * &ldl) * half;
    }
    Ok(out)
}

/// One classical RK4 step. `dt` may be negative (used for central differences).
pub fn rk4_step(rho: &ComplexMatrix, model: &QmeModel, dt: f64) -> Result<ComplexMatrix> {
    let s = |x: f64| Scale(C64::new(x, 0.0));
    let k1 = lindblad_rhs(rho, model)?;
    let k2 = lindblad_rhs(&(rho + &k1 * s(dt / 2.0)), model)?;
    let k3 = lindblad_rhs(&(rho + &k2 * s(dt / 2.0)), model)?;
    let k4 = lindblad_rhs(&(rho + &k3 * s(dt)), model)?;
    Ok(rho + (k1 + k2 * s(2.0) + k3 * s(2.0) + k4) * s(dt / 6.0))
}

/// Fixed-step RK4 integration to `t_final`, re-symmetrizing every step and
/// aborting on non-finite values or positivity loss beyond `1e−8`.
pub fn evolve_rk4(rho0: &DensityMatrix, p: &ModelParams, t_final: f64, dt: f64) -> Result<DensityMatrix> {
    if !(dt > 0.0) || !(t_final >= 0.0) {
        return Err(Error::InvalidParams(format!("need dt > 0 and t_final >= 0 (dt = {dt}, t = {t_final})")));
    }
    if p.n() != rho0.n_spins() {
        return Err(Error::DimensionMismatch { expected: format!("{} spins", p.n()), found: rho0.n_spins().to_string() });
    }
    if dt * p.scale() > 0.1 {
        log::warn!("dt * rate scale = {:.3} exceeds 0.1; RK4 accuracy will suffer", dt * p.scale());
    }
    let model = build_model(p)?;
    let steps = (t_final / dt).round() as usize;
    let h = if steps == 0 { 0.0 } else { t_final / steps as f64 };
    let check_every = (steps / 50).max(1);
    let mut rho = rho0.mat.clone();
    for k in 1..=steps {
        rho = symmetrize(&rk4_step(&rho, &model, h)?);
        if !(0..rho.nrows()).all(|i| (0..rho.ncols()).all(|j| rho[(i, j)].re.is_finite() && rho[(i, j)].im.is_finite()))
        {
            return Err(Error::NonFinite(format!("density matrix at t = {}", k as f64 * h)));
        }
        if k % check_every == 0 || k == steps {
            let lo = linalg::hermitian_eigenvalues(&rho)?[0];
            if lo < -POSITIVITY_TOL {
                return Err(Error::Positivity { min_eigenvalue: lo, time: k as f64 * h });
            }
        }
    }
    let drift = (trace(&rho) - ONE).norm();
    if drift > 1e-8 {
        log::warn!("trace drifted by {drift:.3e} over the run");
    }
    Ok(DensityMatrix { mat: rho, n_spins: rho0.n_spins })
}

/// Column/row flip mask and per-basis-state phase of a Pauli string:
/// `(σ^{a₁} ⊗ …)|b⟩ = phase(b) |b ⊕ mask⟩`.
fn pauli_action(indices: &[AxisLabel], b: usize) -> (usize, C64) {
    let n = indices.len();
    let mut mask = 0usize;
    let mut phase = ONE;
    for (j, a) in indices.iter().enumerate() {
        let bit = n - 1 - j;
        let up = (b >> bit) & 1 == 0;
        match a {
            AxisLabel::Identity => {}
            AxisLabel::X => mask |= 1 << bit,
            AxisLabel::Y => {
                mask |= 1 << bit;
                // σ^y|↑⟩ = i|↓⟩, σ^y|↓⟩ = −i|↑⟩
                phase *= if up { I } else { -I };
            }
            AxisLabel::Z => {
                if !up {
                    phase = -phase;
                }
            }
        }
    }
    (mask, phase)
}

/// `tr[A σ^{a₁} ⊗ … ⊗ σ^{a_N}]` for an arbitrary operator `A`.
pub fn pauli_expectation(a: &ComplexMatrix, indices: &[AxisLabel]) -> Result<C64> {
    let d = 1usize << indices.len();
    check_square(a, d)?;
    let mut acc = ZERO;
    for b in 0..d {
        let (mask, phase) = pauli_action(indices, b);
        acc += a[(b, b ^ mask)] * phase;
    }
    Ok(acc)
}

pub fn correlator(rho: &DensityMatrix, indices: &[AxisLabel]) -> Result<f64> {
    if indices.len() != rho.n_spins {
        return Err(Error::DimensionMismatch { expected: rho.n_spins.to_string(), found: indices.len().to_string() });
    }
    Ok(pauli_expectation(&rho.mat, indices)?.re)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Convention {
    /// `c = tr[ρ σ ⊗ … ⊗ σ]`.
    PauliNormalized,
}

/// All `4^N` correlators, indexed by base-4 digits `(0, x, y, z) = (0..4)`
/// with site 0 most significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTensor {
    pub n_sites: usize,
    pub values: Vec<f64>,
    pub convention: Convention,
}

impl CorrelationTensor {
    /// Correlators of an arbitrary Hermitian operator (e.g. `dρ/dt`).
    pub fn from_operator(a: &ComplexMatrix) -> Result<Self> {
        let n = spins_for_dim(a.nrows())?;
        let values = (0..1usize << (2 * n))
            .map(|idx| {
                let labels = Self::labels(idx, n);
                pauli_expectation(a, &labels).map(|z| z.re)
            })
            .collect::<Result<_>>()?;
        Ok(Self { n_sites: n, values, convention: Convention::PauliNormalized })
    }

    fn labels(idx: usize, n: usize) -> Vec<AxisLabel> {
        spinalg::digits(idx, n, 4).into_iter().map(|d| AxisLabel::ALL[d]).collect()
    }

    pub fn get(&self, indices: &[AxisLabel]) -> f64 {
        self.values[indices.iter().fold(0, |acc, a| acc * 4 + a.index())]
    }

    /// `2^{−N} Σ c σ^{a₁} ⊗ … ⊗ σ^{a_N}`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.n_sites;
        let d = 1usize << n;
        let mut m = Mat::<C64>::zeros(d, d);
        for (idx, &c) in self.values.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let labels = Self::labels(idx, n);
            for b in 0..d {
                let (mask, phase) = pauli_action(&labels, b);
                m[(b ^ mask, b)] += phase * c;
            }
        }
        m * Scale(C64::new(1.0 / d as f64, 0.0))
    }
}

pub fn correlation_tensor(rho: &DensityMatrix) -> CorrelationTensor {
    CorrelationTensor::from_operator(&rho.mat).expect("density matrix dimension is 2^N")
}

/// The rank-`n` block: correlators with Cartesian indices on `sites`
/// (in the given order) and identity elsewhere, as a `3^n` vector in the
/// product basis of [`spinalg::embed`].
///
/// The block is returned in the Liouvillian frame: each `y` index carries a
/// sign (the reflection `diag(1, −1, 1)` per site), which flips the sense of
/// precession so that `dC/dt = ℒ C` with `ℒ` exactly as built by
/// [`crate::liouvillian::build`]. For [`Basis::Spherical`] the per-site
/// rotation [`spinalg::cartesian_to_spherical`] is applied afterwards.
pub fn rank_n_block(tensor: &CorrelationTensor, sites: &[usize], basis: Basis) -> Result<ComplexVector> {
    let n_sites = tensor.n_sites;
    let mut seen = vec![false; n_sites];
    for &s in sites {
        if s >= n_sites || std::mem::replace(&mut seen[s], true) {
            return Err(Error::InvalidParams(format!("sites {sites:?} must be distinct and < {n_sites}")));
        }
    }
    let n = sites.len();
    let dim = 3usize.pow(n as u32);
    let mut labels = vec![AxisLabel::Identity; n_sites];
    let mut v = ComplexVector::zeros(dim);
    for k in 0..dim {
        let digits = spinalg::digits(k, n, 3);
        let mut sign = 1.0;
        for (&site, &a) in sites.iter().zip(&digits) {
            labels[site] = AxisLabel::CARTESIAN[a];
            if a == 1 {
                sign = -sign;
            }
        }
        v[k] = C64::new(sign * tensor.get(&labels), 0.0);
    }
    Ok(match basis {
        Basis::Cartesian => v,
        Basis::Spherical => rotate_per_site(&v, n),
    })
}

/// Applies `U ⊗ … ⊗ U` to a `3^n` vector without forming the product.
pub fn rotate_per_site(v: &ComplexVector, n: usize) -> ComplexVector {
    let u = spinalg::cartesian_to_spherical();
    let mut cur: Vec<C64> = (0..v.nrows()).map(|i| v[i]).collect();
    for site in 0..n {
        let stride = 3usize.pow((n - site - 1) as u32);
        let mut next = vec![ZERO; cur.len()];
        for (idx, slot) in next.iter_mut().enumerate() {
            let digit = (idx / stride) % 3;
            let base = idx - digit * stride;
            *slot = (0..3).map(|b| u[(digit, b)] * cur[base + b * stride]).sum();
        }
        cur = next;
    }
    ComplexVector::from_fn(cur.len(), |i| cur[i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(omega_big: f64, omega: Vec<f64>, gp: f64, g0: f64) -> ModelParams {
        ModelParams::new(omega_big, omega, gp, g0).unwrap()
    }

    #[test]
    fn single_free_spin_model() {
        let m = build_model(&params(1.0, vec![0.0], 0.0, 0.0)).unwrap();
        assert!((m.h[(0, 0)] - C64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((m.h[(1, 1)] + C64::new(0.5, 0.0)).norm() < 1e-15);
        for l in &m.lindblads {
            assert_eq!(spinalg::max_abs(l), 0.0);
        }
    }

    #[test]
    fn hamiltonian_conserves_total_sz() {
        let m = build_model(&params(0.3, vec![1.0, -2.0], 0.7, 0.2)).unwrap();
        let sz = total_spin(AxisLabel::Z, 2).unwrap();
        assert!(spinalg::max_abs(&spinalg::commutator(&m.h, &sz)) < 1e-14);
    }

    #[test]
    fn lindblad_x_operator() {
        // sqrt(2 g) with g = 1/2 gives the bare Σ s^x
        let m = build_model(&params(0.0, vec![0.0, 0.0], 0.5, 0.0)).unwrap();
        let x = spinalg::spin_half(AxisLabel::X);
        let id = linalg::identity(2);
        let expect = spinalg::kron(&x, &id) + spinalg::kron(&id, &x);
        assert!(spinalg::max_abs(&(&m.lindblads[0] - expect)) < 1e-14);
    }

    #[test]
    fn maximally_mixed_is_stationary() {
        let p = params(0.4, vec![0.1, -0.3, 0.2], 1.3, 0.6);
        let m = build_model(&p).unwrap();
        let r = lindblad_rhs(DensityMatrix::maximally_mixed(3).mat(), &m).unwrap();
        assert!(spinalg::max_abs(&r) < 1e-14);
    }

    #[test]
    fn dephasing_coefficient() {
        // hand evaluation: L = a s^z gives dρ₀₁/dt = −(a²/2) ρ₀₁, and a² = 2 g₀
        let g0 = 0.8;
        let m = build_model(&params(0.0, vec![0.0], 0.0, g0)).unwrap();
        let psi = ComplexVector::from_fn(2, |_| C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
        let rho = DensityMatrix::pure(&psi).unwrap();
        let r = lindblad_rhs(rho.mat(), &m).unwrap();
        assert!((r[(0, 1)] - rho.mat()[(0, 1)] * (-g0)).norm() < 1e-14);
        assert!(r[(0, 0)].norm() < 1e-14);
        // z eigenstates are fixed
        let up = lindblad_rhs(DensityMatrix::all_up(1).mat(), &m).unwrap();
        assert!(spinalg::max_abs(&up) < 1e-15);
    }

    #[test]
    fn rhs_traceless_and_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = params(0.4, vec![0.1, -0.3, 0.2], 1.3, 0.6);
        let m = build_model(&p).unwrap();
        let rho = DensityMatrix::random(3, &mut rng);
        let r = lindblad_rhs(rho.mat(), &m).unwrap();
        assert!(trace(&r).norm() < 1e-12);
        assert!(hermiticity_defect(&r) < 1e-12);
    }

    #[test]
    fn precession_of_coherence() {
        let phi = 1.7;
        let p = params(1.0, vec![0.7], 0.0, 0.0);
        let psi = ComplexVector::from_fn(2, |_| C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
        let rho0 = DensityMatrix::pure(&psi).unwrap();
        let t = 2.0;
        let rho = evolve_rk4(&rho0, &p, t, 1e-3).unwrap();
        let expect = rho0.mat()[(0, 1)] * C64::from_polar(1.0, -phi * t);
        assert!((rho.mat()[(0, 1)] - expect).norm() < 1e-10);
    }

    #[test]
    fn werner_isotropy_is_stationary() {
        let p = params(0.0, vec![0.0, 0.0], 1.0, 0.0);
        let rho0 = DensityMatrix::werner(-0.6).unwrap();
        let rho = evolve_rk4(&rho0, &p, 10.0, 1e-2).unwrap();
        let t = correlation_tensor(&rho);
        for a in AxisLabel::CARTESIAN {
            assert!((t.get(&[a, a]) + 0.6).abs() < 1e-8);
        }
        assert!((rho.trace() - ONE).norm() < 1e-10);
    }

    #[test]
    fn evolution_preserves_state_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = params(0.5, vec![0.2, -0.4], 1.0, 0.5);
        let rho = evolve_rk4(&DensityMatrix::random(2, &mut rng), &p, 1.0, 1e-3).unwrap();
        assert!((rho.trace() - ONE).norm() < 1e-8);
        assert!(rho.min_eigenvalue().unwrap() > -1e-8);
        assert!(hermiticity_defect(rho.mat()) < 1e-14);
        assert!(evolve_rk4(&DensityMatrix::all_up(2), &p, 1.0, 0.0).is_err());
    }

    #[test]
    fn correlator_examples() {
        use AxisLabel::*;
        let rho = DensityMatrix::random(3, &mut ChaCha8Rng::seed_from_u64(1));
        assert!((correlator(&rho, &[Identity; 3]).unwrap() - 1.0).abs() < 1e-12);
        assert!((correlator(&DensityMatrix::all_up(2), &[Z, Z]).unwrap() - 1.0).abs() < 1e-15);
        for a in [X, Y, Z] {
            assert!((correlator(&DensityMatrix::singlet(), &[a, a]).unwrap() + 1.0).abs() < 1e-14);
        }
        assert!(correlator(&rho, &[X]).is_err());
    }

    #[test]
    fn pauli_expectation_matches_dense_product() {
        let rho = DensityMatrix::random(3, &mut ChaCha8Rng::seed_from_u64(2));
        for idx in 0..64 {
            let labels = CorrelationTensor::labels(idx, 3);
            let p = labels.iter().skip(1).fold(spinalg::pauli(labels[0]), |acc, &a| spinalg::kron(&acc, &spinalg::pauli(a)));
            let dense = trace(&(rho.mat() * &p));
            assert!((dense - pauli_expectation(rho.mat(), &labels).unwrap()).norm() < 1e-13);
        }
    }

    #[test]
    fn tensor_roundtrip_and_werner_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let rho = DensityMatrix::random(3, &mut rng);
            let t = correlation_tensor(&rho);
            assert!(spinalg::max_abs(&(t.reconstruct() - rho.mat())) < 1e-10);
            assert!(t.values.iter().all(|c| c.abs() <= 1.0 + 1e-12));
        }
        let t = correlation_tensor(&DensityMatrix::maximally_mixed(2));
        assert_eq!(t.values[0], 1.0);
        assert!(t.values[1..].iter().all(|c| c.abs() < 1e-15));
        let w = correlation_tensor(&DensityMatrix::werner(0.25).unwrap());
        for a in AxisLabel::CARTESIAN {
            for b in AxisLabel::CARTESIAN {
                let expect = if a == b { 0.25 } else { 0.0 };
                assert!((w.get(&[a, b]) - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rank_blocks() {
        let w = correlation_tensor(&DensityMatrix::werner(0.25).unwrap());
        let v = rank_n_block(&w, &[0, 1], Basis::Cartesian).unwrap();
        for k in 0..9 {
            let expect = if k % 4 == 0 { 0.25 } else { 0.0 };
            assert!((v[k] - C64::new(expect, 0.0)).norm() < 1e-14);
        }
        let up = ComplexVector::from_fn(8, |i| if i < 2 { C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0) } else { ZERO });
        // |↑⟩ ⊗ (|↑⟩ + |↓⟩)/√2 ⊗ |↑⟩ on site 0 has Bloch vector ẑ
        let t = correlation_tensor(&DensityMatrix::pure(&up).unwrap());
        let v = rank_n_block(&t, &[0], Basis::Cartesian).unwrap();
        assert!((v[2] - ONE).norm() < 1e-14 && v[0].norm() < 1e-14 && v[1].norm() < 1e-14);
        assert!(rank_n_block(&t, &[0, 0], Basis::Cartesian).is_err());
        assert!(rank_n_block(&t, &[3], Basis::Cartesian).is_err());
    }

    #[test]
    fn permuting_sites_permutes_slots() {
        let t = correlation_tensor(&DensityMatrix::random(3, &mut ChaCha8Rng::seed_from_u64(4)));
        let a = rank_n_block(&t, &[0, 2], Basis::Cartesian).unwrap();
        let b = rank_n_block(&t, &[2, 0], Basis::Cartesian).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(a[3 * i + j], b[3 * j + i]);
            }
        }
    }

    #[test]
    fn spherical_block_is_rotated_cartesian() {
        let t = correlation_tensor(&DensityMatrix::random(2, &mut ChaCha8Rng::seed_from_u64(6)));
        let c = rank_n_block(&t, &[0, 1], Basis::Cartesian).unwrap();
        let s = rank_n_block(&t, &[0, 1], Basis::Spherical).unwrap();
        let u = spinalg::cartesian_to_spherical();
        let uu = spinalg::kron(&u, &u);
        let expect = &uu * &c;
        for i in 0..9 {
            assert!((expect[i] - s[i]).norm() < 1e-14);
        }
    }
}
