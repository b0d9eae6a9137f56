//! Entanglement witnesses built from displaced photon-number correlations.
//!
//! The library constructs test operators of the form
//! `L = Σ_k λ_k N^(1)(α_k) ⊗ ... ⊗ N^(K)(α_k)`, where each factor is a
//! weighted sum of displaced photon-number operators over one block of a mode
//! partition. The minimal expectation value of `L` over states separable with
//! respect to that partition, the separability bound `g_min`, is computed by
//! solving the associated separability eigenvalue problem; measuring
//! `<L> < g_min` certifies entanglement.
//!
//! The crate splits into:
//!
//! * [`fock`]: a truncated Fock-space oracle (dense matrices, brute force)
//!   that every closed form is checked against;
//! * [`states`]: analytic state families with exact correlation formulas;
//! * [`witness`]: witness construction, the separability-bound solvers, the
//!   loss transform and the evaluation report;
//! * [`optimizer`]: genetic witness optimization, parameter sweeps and
//!   bisection for critical parameters;
//! * [`measurement`]: shot-level simulation of the randomized-displacement
//!   correlation measurement;
//! * [`baselines`]: the covariance-matrix criteria used for comparison;
//! * [`configs`]: bundled reference configurations with known target values;
//! * [`cli`]: the `witness-forge` command-line front end.
//!
//! A guided tour with runnable examples lives in the `book/` directory; its
//! code snippets are compiled as doc-tests of this crate.

// index loops in the numeric kernels deliberately mirror the formulas
#![allow(clippy::needless_range_loop)]

pub mod baselines;
pub mod cli;
pub mod configs;
pub mod error;
pub mod fock;
pub mod measurement;
pub mod optimizer;
mod serde_complex;
pub mod states;
pub mod witness;

pub use error::{Error, Result};

// Keep the book chapters honest: every fenced Rust block in them is compiled
// and run by `cargo test --doc`.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/fock-space.md")]
    mod fock_space {}
    #[doc = include_str!("../../../book/src/states.md")]
    mod states {}
    #[doc = include_str!("../../../book/src/witnesses.md")]
    mod witnesses {}
    #[doc = include_str!("../../../book/src/loss.md")]
    mod loss {}
    #[doc = include_str!("../../../book/src/optimization.md")]
    mod optimization {}
    #[doc = include_str!("../../../book/src/measurement.md")]
    mod measurement {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
