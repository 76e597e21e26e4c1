//! The non-Hermitian spin-1 Liouvillian
//!
//! ```text
//! ℒ = i Σ_j (Ω + ω_j) S^z_j − g₊ Σ_{j,k} (S^x_j S^x_k + S^y_j S^y_k) − g₀ Σ_{j,k} S^z_j S^z_k
//! ```
//!
//! with the `j = k` terms kept in both double sums. Matrices are assembled
//! from the action on product basis states, which serves the full space and
//! the `S^z_tot` sectors alike.

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics;
use crate::error::{Error, Result};
use crate::linalg;
use crate::params::ModelParams;
use crate::spinalg::{self, AxisLabel, Basis, ComplexMatrix, C64, I, ZERO};

/// Largest `n` for which the full `3^n` matrix is built densely.
pub const MAX_FULL_N: usize = 7;
/// Largest `n` for which a single `S^z_tot` sector is built densely.
pub const MAX_SECTOR_N: usize = 9;

#[derive(Debug, Clone)]
pub struct LiouvillianMatrix {
    pub n_sites: usize,
    pub basis: Basis,
    pub mat: ComplexMatrix,
    pub params: ModelParams,
}

/// One `S^z_tot = sz_tot` block in the spherical basis.
#[derive(Debug, Clone)]
pub struct SectorBlock {
    pub n_sites: usize,
    pub sz_tot: i32,
    /// Spherical product-basis indices spanning the block, ascending.
    pub indices: Vec<usize>,
    pub mat: ComplexMatrix,
    pub params: ModelParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub eigenvalues: Vec<C64>,
    /// `S^z_tot` label per eigenvalue, when computed blockwise.
    pub sectors: Option<Vec<i32>>,
    pub params: ModelParams,
    pub seed: Option<u64>,
}

impl SpectrumRecord {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn sector(&self, sz: i32) -> Vec<C64> {
        match &self.sectors {
            Some(s) => self.eigenvalues.iter().zip(s).filter(|(_, &l)| l == sz).map(|(z, _)| *z).collect(),
            None => Vec::new(),
        }
    }
}

/// Local one-site operator and two-site coupling in a given basis.
struct LocalTerms {
    /// `O_j = i φ_j S^z − g₊ (S^x² + S^y²) − g₀ S^z²`, one per site.
    one_site: Vec<ComplexMatrix>,
    /// `T = −2 Σ_a c_a S^a ⊗ S^a` for each unordered pair (the 2 counts `(j,k)` and `(k,j)`).
    pair: ComplexMatrix,
}

fn local_terms(p: &ModelParams, basis: Basis) -> Result<LocalTerms> {
    let s: Vec<ComplexMatrix> = AxisLabel::CARTESIAN.iter().map(|&a| spinalg::spin_one(a, basis)).collect::<Result<_>>()?;
    let c = [p.g_plus, p.g_plus, p.g_zero];
    let mut sq = Mat::<C64>::zeros(3, 3);
    for a in 0..3 {
        sq = sq + (&s[a] * &s[a]) * faer::Scale(C64::new(-c[a], 0.0));
    }
    let one_site: Vec<ComplexMatrix> = (0..p.n()).map(|j| &sq + &s[2] * faer::Scale(I * p.precession(j))).collect();
    let mut pair = Mat::<C64>::zeros(9, 9);
    for a in 0..3 {
        pair = pair + spinalg::kron(&s[a], &s[a]) * faer::Scale(C64::new(-2.0 * c[a], 0.0));
    }
    Ok(LocalTerms { one_site: one_site.into_iter().map(chop).collect(), pair: chop(pair) })
}

/// Zeroes rounding residue from the basis rotation so sector structure is exact.
fn chop(m: ComplexMatrix) -> ComplexMatrix {
    let tol = 1e-14 * spinalg::max_abs(&m).max(1.0);
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[(i, j)];
        C64::new(if z.re.abs() < tol { 0.0 } else { z.re }, if z.im.abs() < tol { 0.0 } else { z.im })
    })
}

/// Column of ℒ for product state `col` as `(row_index, value)` pairs, possibly repeated.
fn column(terms: &LocalTerms, n: usize, col: usize, out: &mut Vec<(usize, C64)>) {
    out.clear();
    let d = spinalg::digits(col, n, 3);
    let pow: Vec<usize> = (0..n).map(|j| 3usize.pow((n - j - 1) as u32)).collect();
    for j in 0..n {
        let o = &terms.one_site[j];
        for e in 0..3 {
            let v = o[(e, d[j])];
            if v != ZERO {
                out.push((col + e * pow[j] - d[j] * pow[j], v));
            }
        }
    }
    for j in 0..n {
        for k in j + 1..n {
            let src = 3 * d[j] + d[k];
            for e in 0..3 {
                for f in 0..3 {
                    let v = terms.pair[(3 * e + f, src)];
                    if v != ZERO {
                        let row = col + e * pow[j] + f * pow[k] - d[j] * pow[j] - d[k] * pow[k];
                        out.push((row, v));
                    }
                }
            }
        }
    }
}

/// The full `3^n` Liouvillian in the requested local basis.
pub fn build(p: &ModelParams, basis: Basis) -> Result<LiouvillianMatrix> {
    p.validate()?;
    let n = p.n();
    if n > MAX_FULL_N {
        return Err(Error::TooLarge { n, dim: 3usize.pow(n as u32), max_n: MAX_FULL_N });
    }
    let dim = 3usize.pow(n as u32);
    let terms = local_terms(p, basis)?;
    let mut mat = Mat::<C64>::zeros(dim, dim);
    let mut buf = Vec::new();
    for col in 0..dim {
        column(&terms, n, col, &mut buf);
        for &(row, v) in &buf {
            mat[(row, col)] += v;
        }
    }
    Ok(LiouvillianMatrix { n_sites: n, basis, mat, params: p.clone() })
}

/// `m` quantum number of a spherical local index (`0, 1, 2` ↦ `+1, 0, −1`).
pub fn m_label(local: usize) -> i32 {
    1 - local as i32
}

/// Spherical product states whose `m` labels sum to `sz_tot`, ascending.
pub fn sector_indices(n: usize, sz_tot: i32) -> Result<Vec<usize>> {
    if sz_tot.unsigned_abs() as usize > n {
        return Err(Error::InvalidParams(format!("S^z_tot = {sz_tot} outside [-{n}, {n}]")));
    }
    if n > MAX_SECTOR_N {
        return Err(Error::TooLarge { n, dim: 3usize.pow(n as u32), max_n: MAX_SECTOR_N });
    }
    Ok((0..3usize.pow(n as u32))
        .filter(|&i| spinalg::digits(i, n, 3).into_iter().map(m_label).sum::<i32>() == sz_tot)
        .collect())
}

pub fn build_sector(p: &ModelParams, sz_tot: i32) -> Result<SectorBlock> {
    p.validate()?;
    let n = p.n();
    let indices = sector_indices(n, sz_tot)?;
    let mut position = vec![usize::MAX; 3usize.pow(n as u32)];
    for (k, &i) in indices.iter().enumerate() {
        position[i] = k;
    }
    let terms = local_terms(p, Basis::Spherical)?;
    let dim = indices.len();
    let mut mat = Mat::<C64>::zeros(dim, dim);
    let mut buf = Vec::new();
    for (c, &col) in indices.iter().enumerate() {
        column(&terms, n, col, &mut buf);
        for &(row, v) in &buf {
            let r = position[row];
            debug_assert!(r != usize::MAX, "ℒ leaves the S^z_tot sector");
            mat[(r, c)] += v;
        }
    }
    Ok(SectorBlock { n_sites: n, sz_tot, indices, mat, params: p.clone() })
}

/// Dense eigendecomposition of the full matrix.
pub fn spectrum(l: &LiouvillianMatrix, want_vectors: bool) -> Result<(SpectrumRecord, Option<ComplexMatrix>)> {
    let block = format!("full n={}", l.n_sites);
    let (eigenvalues, vectors) = if want_vectors {
        let (v, u) = linalg::eigen(&l.mat, &block)?;
        (v, Some(u))
    } else {
        (linalg::eigenvalues(&l.mat, &block)?, None)
    };
    Ok((SpectrumRecord { eigenvalues, sectors: None, params: l.params.clone(), seed: None }, vectors))
}

pub fn sector_spectrum(p: &ModelParams, sz_tot: i32) -> Result<Vec<C64>> {
    let b = build_sector(p, sz_tot)?;
    linalg::eigenvalues(&b.mat, &format!("S^z_tot={sz_tot} n={}", p.n()))
}

/// All `3^n` eigenvalues, diagonalizing the sectors in parallel and
/// concatenating them in ascending `S^z_tot` order.
pub fn full_spectrum_by_sectors(p: &ModelParams) -> Result<SpectrumRecord> {
    let n = p.n() as i32;
    let parts: Vec<Result<Vec<C64>>> = (-n..=n).into_par_iter().map(|sz| sector_spectrum(p, sz)).collect();
    let mut eigenvalues = Vec::new();
    let mut sectors = Vec::new();
    for (sz, part) in (-n..=n).zip(parts) {
        let part = part?;
        sectors.extend(std::iter::repeat(sz).take(part.len()));
        eigenvalues.extend(part);
    }
    Ok(SpectrumRecord { eigenvalues, sectors: Some(sectors), params: p.clone(), seed: None })
}

/// One `(S, M)` multiplet line of the `ω = 0` spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multiplet {
    pub s: usize,
    pub m: i32,
    pub eigenvalue: C64,
    pub multiplicity: u128,
}

/// At `ω = 0`, `ℒ = iΩ S^z_tot − g₊ [S²_tot − (S^z_tot)²]`, so each total
/// spin `S` contributes `iΩM − g₊[S(S+1) − M²]` for `M = −S..=S`.
pub fn omega_zero_spectrum(n: usize, omega_big: f64, g_plus: f64) -> Result<Vec<Multiplet>> {
    let table = combinatorics::spin1_multiplicities(n)?;
    let mut out = Vec::new();
    for s in 0..=n {
        let mult = table.get(s);
        if mult == 0 {
            continue;
        }
        for m in -(s as i32)..=(s as i32) {
            let ss = (s * (s + 1)) as f64;
            let eigenvalue = C64::new(-g_plus * (ss - (m * m) as f64), omega_big * m as f64);
            out.push(Multiplet { s, m, eigenvalue, multiplicity: mult });
        }
    }
    Ok(out)
}

/// The eigenvalue with the largest real part. With `exclude_zero_tol > 0`,
/// eigenvalues of modulus below it are dropped first. Ties (within `1e−12`
/// relative) go to the smallest `|Im|`, then to `Im ≥ 0`.
pub fn dominant_eigenvalue(eigs: &[C64], exclude_zero_tol: f64) -> Result<C64> {
    let kept: Vec<C64> = eigs.iter().copied().filter(|z| !(exclude_zero_tol > 0.0 && z.norm() < exclude_zero_tol)).collect();
    if kept.is_empty() {
        return Err(Error::Empty("no eigenvalues left after excluding zero modes".into()));
    }
    let scale = kept.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let top = kept.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * scale;
    let best = kept
        .into_iter()
        .filter(|z| z.re >= top - tol)
        .min_by(|a, b| {
            a.im.abs()
                .total_cmp(&b.im.abs())
                .then_with(|| (a.im < 0.0).cmp(&(b.im < 0.0)))
        })
        .expect("nonempty");
    Ok(best)
}

/// Number of eigenvalues with `|λ| < tol`.
pub fn zero_mode_count(eigs: &[C64], tol: f64) -> usize {
    eigs.iter().filter(|z| z.norm() < tol).count()
}

/// `(U ⊗ … ⊗ U)` for `n` sites; used to move full matrices between bases.
pub fn spherical_rotation(n: usize) -> ComplexMatrix {
    let u = spinalg::cartesian_to_spherical();
    (1..n).fold(u.clone(), |acc, _| spinalg::kron(&acc, &u))
}
