//! Exact and numerical solution of the noisy-spins master equation.
//!
//! `n` spin-1/2 particles share a common Gaussian white-noise field. Fixed-rank
//! blocks of their correlation tensor evolve under a non-Hermitian spin-1
//! Richardson–Gaudin Liouvillian, which this crate builds, diagonalizes, and
//! solves by Bethe ansatz. The pieces:
//!
//! * [`spinalg`] spin matrices, bases, tensor embedding
//! * [`qme`] Lindblad dynamics of the density matrix and correlator extraction
//! * [`trajectories`] the stochastic-unitary unraveling
//! * [`liouvillian`] the spin-1 Liouvillian, sectors, dense spectra
//! * [`combinatorics`] Catalan/Riordan numbers and spin-1 multiplicities
//! * [`bethe`] Bethe equations, Newton, continuation, Bethe vectors
//! * [`asymptotics`] the large-`n` string-state offsets
//! * [`spectra`] eigenvalue flows, level statistics, rate distributions
//! * [`validation`] the acceptance criteria, shared by tests and the CLI
//!
//! The guide under `book/` walks through the same material; its code blocks
//! are compiled as doc tests of this crate.

pub mod asymptotics;
pub mod bethe;
pub mod combinatorics;
pub mod error;
pub mod linalg;
pub mod liouvillian;
pub mod params;
pub mod qme;
pub mod spectra;
pub mod spinalg;
pub mod trajectories;
pub mod validation;

pub use error::{Error, Result};
pub use params::ModelParams;
pub use spinalg::{AxisLabel, Basis, ComplexMatrix, ComplexVector, C64};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/conventions.md")]
    mod conventions {}
    #[doc = include_str!("../../../book/src/liouvillian.md")]
    mod liouvillian {}
    #[doc = include_str!("../../../book/src/bethe.md")]
    mod bethe {}
    #[doc = include_str!("../../../book/src/asymptotics.md")]
    mod asymptotics {}
    #[doc = include_str!("../../../book/src/trajectories.md")]
    mod trajectories {}
    #[doc = include_str!("../../../book/src/statistics.md")]
    mod statistics {}
}
