//! Spin-1/2 and spin-1 operator algebra.
//!
//! Conventions used everywhere in the crate:
//!
//! * Site 0 is the leftmost tensor factor, so in a product basis of local
//!   dimension `d` the digit of site 0 is the most significant one.
//! * Cartesian spin-1 basis is ordered `(x, y, z)` with
//!   `(S^a)_{bc} = −i ε_{abc}`.
//! * Spherical spin-1 basis is ordered `m = (+1, 0, −1)`, using the
//!   Condon–Shortley vectors `e₊₁ = −(x̂ + iŷ)/√2`, `e₀ = ẑ`, `e₋₁ = (x̂ − iŷ)/√2`.

use faer::{Mat, Scale};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = Mat<C64>;
pub type ComplexVector = faer::Col<C64>;

pub const I: C64 = C64::new(0.0, 1.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AxisLabel {
    Identity,
    X,
    Y,
    Z,
}

impl AxisLabel {
    pub const CARTESIAN: [AxisLabel; 3] = [AxisLabel::X, AxisLabel::Y, AxisLabel::Z];
    pub const ALL: [AxisLabel; 4] = [AxisLabel::Identity, AxisLabel::X, AxisLabel::Y, AxisLabel::Z];

    /// Position in `(0, x, y, z)` ordering.
    pub fn index(self) -> usize {
        match self {
            AxisLabel::Identity => 0,
            AxisLabel::X => 1,
            AxisLabel::Y => 2,
            AxisLabel::Z => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Cartesian component `0, 1, 2` for `x, y, z`.
    pub fn cartesian(self) -> Result<usize> {
        match self {
            AxisLabel::Identity => Err(Error::InvalidAxis(self)),
            other => Ok(other.index() - 1),
        }
    }
}

/// Local basis of the spin-1 (correlator) sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    Cartesian,
    Spherical,
}

/// Pauli matrix `σ^a`, with `σ^0 = 𝟙`.
pub fn pauli(a: AxisLabel) -> ComplexMatrix {
    let r = |x: f64| C64::new(x, 0.0);
    let entries: [[C64; 2]; 2] = match a {
        AxisLabel::Identity => [[ONE, ZERO], [ZERO, ONE]],
        AxisLabel::X => [[ZERO, ONE], [ONE, ZERO]],
        AxisLabel::Y => [[ZERO, -I], [I, ZERO]],
        AxisLabel::Z => [[ONE, ZERO], [ZERO, r(-1.0)]],
    };
    Mat::from_fn(2, 2, |i, j| entries[i][j])
}

/// Spin-1/2 operator `s^a = σ^a / 2`; `s^0` is the identity.
pub fn spin_half(a: AxisLabel) -> ComplexMatrix {
    match a {
        AxisLabel::Identity => pauli(a),
        _ => pauli(a) * Scale(C64::new(0.5, 0.0)),
    }
}

fn levi_civita(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Spin-1 operators in the adjoint (Cartesian) representation,
/// `(S^a)_{bc} = −i ε_{abc}`.
pub fn spin_one_adjoint(a: AxisLabel) -> Result<ComplexMatrix> {
    let a = a.cartesian()?;
    Ok(Mat::from_fn(3, 3, |b, c| C64::new(0.0, -levi_civita(a, b, c))))
}

/// The unitary `U` with `U S^z_cart U† = diag(1, 0, −1)`.
///
/// Rows are the conjugated Condon–Shortley spherical vectors, so
/// `U (S^x + i S^y) U†` has the standard `√2` matrix elements.
pub fn cartesian_to_spherical() -> ComplexMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    // e_{+1} = −(x̂ + iŷ)/√2, e_0 = ẑ, e_{−1} = (x̂ − iŷ)/√2
    let vectors: [[C64; 3]; 3] = [
        [C64::new(-h, 0.0), C64::new(0.0, -h), ZERO],
        [ZERO, ZERO, ONE],
        [C64::new(h, 0.0), C64::new(0.0, -h), ZERO],
    ];
    Mat::from_fn(3, 3, |m, b| vectors[m][b].conj())
}

/// Spin-1 operator `S^a` in the requested local basis.
pub fn spin_one(a: AxisLabel, basis: Basis) -> Result<ComplexMatrix> {
    let cart = spin_one_adjoint(a)?;
    Ok(match basis {
        Basis::Cartesian => cart,
        Basis::Spherical => {
            let u = cartesian_to_spherical();
            &u * &cart * u.adjoint()
        }
    })
}

/// `𝟙 ⊗ … ⊗ op ⊗ … ⊗ 𝟙` with `op` at `site` (site 0 leftmost).
pub fn embed(op: &ComplexMatrix, site: usize, n: usize, local_dim: usize) -> Result<ComplexMatrix> {
    if op.nrows() != local_dim || op.ncols() != local_dim {
        return Err(Error::DimensionMismatch {
            expected: format!("{local_dim}x{local_dim}"),
            found: format!("{}x{}", op.nrows(), op.ncols()),
        });
    }
    if site >= n {
        return Err(Error::DimensionMismatch { expected: format!("site < {n}"), found: format!("site {site}") });
    }
    let left = local_dim.pow(site as u32);
    let right = local_dim.pow((n - site - 1) as u32);
    let dim = left * local_dim * right;
    let mut out = Mat::<C64>::zeros(dim, dim);
    for l in 0..left {
        for a in 0..local_dim {
            for b in 0..local_dim {
                let v = op[(a, b)];
                if v == ZERO {
                    continue;
                }
                for r in 0..right {
                    let row = (l * local_dim + a) * right + r;
                    let col = (l * local_dim + b) * right + r;
                    out[(row, col)] = v;
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

/// Largest entry modulus, `max |a_ij|`.
pub fn max_abs(a: &ComplexMatrix) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

/// Base-`d` digits of `index` over `n` sites, site 0 first.
pub fn digits(mut index: usize, n: usize, d: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = index % d;
        index /= d;
    }
    out
}

pub fn from_digits(digits: &[usize], d: usize) -> usize {
    digits.iter().fold(0, |acc, &x| acc * d + x)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-13;

    fn close(a: &ComplexMatrix, b: &ComplexMatrix) -> bool {
        max_abs(&(a - b)) < TOL
    }

    fn identity(d: usize) -> ComplexMatrix {
        Mat::identity(d, d)
    }

    #[test]
    fn spin_half_z_is_diagonal() {
        let z = spin_half(AxisLabel::Z);
        assert_eq!(z[(0, 0)], C64::new(0.5, 0.0));
        assert_eq!(z[(1, 1)], C64::new(-0.5, 0.0));
        assert_eq!(z[(0, 1)], ZERO);
    }

    #[test]
    fn su2_algebra_both_representations() {
        let reps: Vec<Box<dyn Fn(AxisLabel) -> ComplexMatrix>> = vec![
            Box::new(spin_half),
            Box::new(|a| spin_one_adjoint(a).unwrap()),
            Box::new(|a| spin_one(a, Basis::Spherical).unwrap()),
        ];
        for s in &reps {
            let (x, y, z) = (s(AxisLabel::X), s(AxisLabel::Y), s(AxisLabel::Z));
            assert!(close(&commutator(&x, &y), &(&z * Scale(I))));
            assert!(close(&commutator(&y, &z), &(&x * Scale(I))));
            assert!(close(&commutator(&z, &x), &(&y * Scale(I))));
        }
    }

    #[test]
    fn casimirs() {
        let c: ComplexMatrix = AxisLabel::CARTESIAN.iter().map(|&a| spin_half(a) * spin_half(a)).fold(
            Mat::zeros(2, 2),
            |acc, m| acc + m,
        );
        assert!(close(&c, &(identity(2) * Scale(C64::new(0.75, 0.0)))));
        for basis in [Basis::Cartesian, Basis::Spherical] {
            let mut c = Mat::<C64>::zeros(3, 3);
            for a in AxisLabel::CARTESIAN {
                let s = spin_one(a, basis).unwrap();
                c = c + &s * &s;
            }
            assert!(close(&c, &(identity(3) * Scale(C64::new(2.0, 0.0)))));
        }
    }

    #[test]
    fn adjoint_z_entries() {
        let z = spin_one_adjoint(AxisLabel::Z).unwrap();
        assert_eq!(z[(0, 1)], C64::new(0.0, -1.0));
        assert_eq!(z[(1, 0)], C64::new(0.0, 1.0));
        let nonzero = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).filter(|&(i, j)| z[(i, j)] != ZERO).count();
        assert_eq!(nonzero, 2);
        assert!(spin_one_adjoint(AxisLabel::Identity).is_err());
    }

    #[test]
    fn adjoint_is_imaginary_antisymmetric() {
        for a in AxisLabel::CARTESIAN {
            let s = spin_one_adjoint(a).unwrap();
            assert!(close(&s.transpose().to_owned(), &(&s * Scale(C64::new(-1.0, 0.0)))));
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(s[(i, j)].re, 0.0);
                }
            }
        }
    }

    #[test]
    fn spherical_rotation() {
        let u = cartesian_to_spherical();
        assert!(close(&(&u * u.adjoint()), &identity(3)));
        let sz = spin_one(AxisLabel::Z, Basis::Spherical).unwrap();
        let diag = Mat::from_fn(3, 3, |i, j| if i == j { C64::new(1.0 - i as f64, 0.0) } else { ZERO });
        assert!(close(&sz, &diag));
        // S^+ |m = −1> = √2 |m = 0>, hand-computed with the CS vectors above
        let sp = spin_one(AxisLabel::X, Basis::Spherical).unwrap()
            + spin_one(AxisLabel::Y, Basis::Spherical).unwrap() * Scale(I);
        let col: Vec<C64> = (0..3).map(|i| sp[(i, 2)]).collect();
        assert!((col[1] - C64::new(2f64.sqrt(), 0.0)).norm() < TOL);
        assert!(col[0].norm() < TOL && col[2].norm() < TOL);
        assert!((sp[(0, 1)] - C64::new(2f64.sqrt(), 0.0)).norm() < TOL);
    }

    #[test]
    fn embed_single_site_is_identity_map() {
        let z = spin_half(AxisLabel::Z);
        assert!(close(&embed(&z, 0, 1, 2).unwrap(), &z));
    }

    #[test]
    fn embed_total_sz() {
        let z = spin_half(AxisLabel::Z);
        let total = embed(&z, 0, 2, 2).unwrap() + embed(&z, 1, 2, 2).unwrap();
        // |↑↑> is basis index 0
        assert!((total[(0, 0)] - ONE).norm() < TOL);
        for i in 1..4 {
            assert!(total[(i, 0)].norm() < TOL);
        }
        assert!((total[(3, 3)] + ONE).norm() < TOL);
    }

    #[test]
    fn embed_site_ordering_matches_kron() {
        let x = spin_half(AxisLabel::X);
        let z = spin_half(AxisLabel::Z);
        let id = identity(2);
        let a = embed(&x, 0, 3, 2).unwrap() * embed(&z, 2, 3, 2).unwrap();
        let b = kron(&kron(&x, &id), &z);
        assert!(close(&a, &b));
    }

    #[test]
    fn embed_trace_factorizes() {
        let s = spin_one_adjoint(AxisLabel::X).unwrap() + identity(3) * Scale(C64::new(0.3, 0.2));
        let e = embed(&s, 1, 3, 3).unwrap();
        let tr = |m: &ComplexMatrix| (0..m.nrows()).map(|i| m[(i, i)]).sum::<C64>();
        assert!((tr(&e) - tr(&s) * 9.0).norm() < 1e-12);
    }

    #[test]
    fn embed_rejects_bad_dimensions() {
        let z = spin_half(AxisLabel::Z);
        assert!(embed(&z, 0, 2, 3).is_err());
        assert!(embed(&z, 2, 2, 2).is_err());
    }

    #[test]
    fn digits_roundtrip() {
        for i in 0..81 {
            assert_eq!(from_digits(&digits(i, 4, 3), 3), i);
        }
        assert_eq!(digits(5, 3, 3), vec![0, 1, 2]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn small_matrix(d: usize) -> impl Strategy<Value = ComplexMatrix> {
            proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d * d)
                .prop_map(move |v| Mat::from_fn(d, d, |i, j| C64::new(v[i * d + j].0, v[i * d + j].1)))
        }

        proptest! {
            #[test]
            fn embed_is_linear(a in small_matrix(3), b in small_matrix(3), site in 0usize..3) {
                let lhs = embed(&(&a + &b), site, 3, 3).unwrap();
                let rhs = embed(&a, site, 3, 3).unwrap() + embed(&b, site, 3, 3).unwrap();
                prop_assert!(max_abs(&(lhs - rhs)) < 1e-13);
            }
        }
    }
}
