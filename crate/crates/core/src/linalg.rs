//! Dense eigensolver wrappers and eigenvalue-multiset matching.

use faer::Mat;

use crate::error::{Error, Result};
use crate::spinalg::{ComplexMatrix, ComplexVector, C64};

/// All eigenvalues of a general complex matrix.
pub fn eigenvalues(m: &ComplexMatrix, block: &str) -> Result<Vec<C64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let ev = m.eigenvalues().map_err(|e| Error::Eigen { block: block.into(), reason: format!("{e:?}") })?;
    check_finite(&ev, block)?;
    Ok(ev)
}

/// Eigenvalues and right eigenvectors (columns).
pub fn eigen(m: &ComplexMatrix, block: &str) -> Result<(Vec<C64>, ComplexMatrix)> {
    let evd = m.eigen().map_err(|e| Error::Eigen { block: block.into(), reason: format!("{e:?}") })?;
    let s = evd.S();
    let values: Vec<C64> = (0..m.nrows()).map(|i| s[i]).collect();
    check_finite(&values, block)?;
    Ok((values, evd.U().to_owned()))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let evd = m
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Eigen { block: "hermitian".into(), reason: format!("{e:?}") })?;
    let s = evd.S();
    let mut out: Vec<f64> = (0..m.nrows()).map(|i| s[i].re).collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

fn check_finite(values: &[C64], block: &str) -> Result<()> {
    if values.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Eigen { block: block.into(), reason: "non-finite eigenvalue".into() })
    }
}

pub fn norm(v: &ComplexVector) -> f64 {
    v.norm_l2()
}

/// `‖A v − λ v‖₂ / ‖v‖₂`.
pub fn eigen_residual(a: &ComplexMatrix, v: &ComplexVector, lambda: C64) -> f64 {
    let av = a * v;
    let r = faer::Col::<C64>::from_fn(v.nrows(), |i| av[i] - lambda * v[i]);
    r.norm_l2() / v.norm_l2()
}

/// Sort by real part, then imaginary part.
pub fn sort_complex(v: &mut [C64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Minimum-cost perfect assignment on a square cost matrix (row `i` gets
/// column `result[i]`). Shortest augmenting path with potentials, `O(n³)`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays; index 0 is the virtual root
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut result = vec![0; n];
    for j in 1..=n {
        result[p[j] - 1] = j - 1;
    }
    result
}

/// Optimal one-to-one matching of two equal-size eigenvalue lists; returns the
/// assignment and the largest matched distance.
pub fn match_eigenvalues(a: &[C64], b: &[C64]) -> Result<(Vec<usize>, f64)> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len().to_string(), found: b.len().to_string() });
    }
    let cost: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| (x - y).norm()).collect()).collect();
    let assign = hungarian(&cost);
    let worst = assign.iter().enumerate().map(|(i, &j)| cost[i][j]).fold(0.0, f64::max);
    Ok((assign, worst))
}

/// Largest distance in the optimal matching of `values` against their
/// complex conjugates.
pub fn conjugation_defect(values: &[C64]) -> f64 {
    let conj: Vec<C64> = values.iter().map(|z| z.conj()).collect();
    match_eigenvalues(values, &conj).map(|(_, d)| d).unwrap_or(f64::INFINITY)
}

pub fn identity(d: usize) -> ComplexMatrix {
    Mat::identity(d, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(cost: &[Vec<f64>]) -> f64 {
        fn rec(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
            if row == cost.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..cost.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(cost[row][j] + rec(cost, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        rec(cost, 0, &mut vec![false; cost.len()])
    }

    #[test]
    fn hungarian_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=6 {
            for _ in 0..20 {
                let cost: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(0.0..10.0)).collect()).collect();
                let a = hungarian(&cost);
                let mut seen = a.clone();
                seen.sort();
                assert_eq!(seen, (0..n).collect::<Vec<_>>());
                let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
                assert!((total - brute_force(&cost)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn eigenvalues_of_triangular() {
        let m = Mat::from_fn(3, 3, |i, j| if j >= i { C64::new((i + 1) as f64, j as f64) } else { C64::new(0.0, 0.0) });
        let mut ev = eigenvalues(&m, "test").unwrap();
        sort_complex(&mut ev);
        for (k, z) in ev.iter().enumerate() {
            assert!((z - C64::new((k + 1) as f64, k as f64)).norm() < 1e-12);
        }
    }

    #[test]
    fn conjugation_defect_detects_unpaired() {
        let sym = [C64::new(-1.0, 2.0), C64::new(-1.0, -2.0), C64::new(-3.0, 0.0)];
        assert!(conjugation_defect(&sym) < 1e-15);
        let asym = [C64::new(-1.0, 2.0), C64::new(-1.0, -1.0)];
        assert!(conjugation_defect(&asym) > 0.5);
    }
}
