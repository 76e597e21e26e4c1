//! Exact counting: Catalan and Riordan numbers, spin-1 multiplicities.
//!
//! Everything is integer arithmetic with checked overflow; these values feed
//! exact equality assertions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of times total spin `S` occurs in the `n`-fold product of spin-1s.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiplicityTable {
    pub n: usize,
    /// `by_spin[S]` for `S = 0..=n`.
    pub by_spin: Vec<u128>,
}

impl MultiplicityTable {
    pub fn get(&self, s: usize) -> u128 {
        self.by_spin.get(s).copied().unwrap_or(0)
    }

    /// `Σ_S (2S + 1) mult(S)`, which must equal `3^n`.
    pub fn dimension(&self) -> u128 {
        self.by_spin.iter().enumerate().map(|(s, &m)| (2 * s as u128 + 1) * m).sum()
    }
}

pub fn binomial(n: u64, k: u64) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc
            .checked_mul((n - i) as u128)
            .ok_or_else(|| Error::Overflow(format!("binomial({n}, {k})")))?
            / (i as u128 + 1);
    }
    Ok(acc)
}

/// `C_N = binom(2N, N) / (N + 1)`.
pub fn catalan(n: u64) -> Result<u128> {
    let two_n = n.checked_mul(2).ok_or_else(|| Error::Overflow(format!("catalan({n})")))?;
    Ok(binomial(two_n, n)? / (n as u128 + 1))
}

/// `R_n = Σ_{m=0}^n (−1)^{n−m} binom(n, m) C_m`.
pub fn riordan(n: u64) -> Result<u128> {
    let overflow = || Error::Overflow(format!("riordan({n})"));
    let mut acc: i128 = 0;
    for m in 0..=n {
        let term = binomial(n, m)?.checked_mul(catalan(m)?).ok_or_else(overflow)?;
        let term = i128::try_from(term).map_err(|_| overflow())?;
        acc = if (n - m) % 2 == 0 { acc.checked_add(term) } else { acc.checked_sub(term) }.ok_or_else(overflow)?;
    }
    u128::try_from(acc).map_err(|_| overflow())
}

/// Total-spin multiplicities of `n` coupled spin-1s from the triangle rule
/// `mult_n(S) = mult_{n−1}(S−1) + mult_{n−1}(S) + mult_{n−1}(S+1)`, where the
/// middle term is absent for `S = 0` (`0 ⊗ 1` contains no spin 0).
pub fn spin1_multiplicities(n: usize) -> Result<MultiplicityTable> {
    if n == 0 {
        return Err(Error::InvalidParams("spin1_multiplicities needs n >= 1".into()));
    }
    let mut row = vec![0u128, 1];
    for k in 2..=n {
        let mut next = vec![0u128; k + 1];
        for (s, slot) in next.iter_mut().enumerate() {
            let get = |i: usize| row.get(i).copied().unwrap_or(0);
            let mut v = get(s + 1);
            if s > 0 {
                v = v.checked_add(get(s)).and_then(|v| v.checked_add(get(s - 1))).ok_or_else(|| {
                    Error::Overflow(format!("spin1_multiplicities({n})"))
                })?;
            }
            *slot = v;
        }
        row = next;
    }
    Ok(MultiplicityTable { n, by_spin: row })
}
