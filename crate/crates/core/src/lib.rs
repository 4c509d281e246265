//! Solvers and analysis tools for smooth two-player zero-sum games
//! `min_x max_y f(x, y)`.
//!
//! The crate is organised in four layers:
//!
//! * [`problems`]: the oracle interface, benchmark game families and a
//!   finite-difference wrapper for black-box objectives.
//! * [`competitive`]: the competitive gradient `g_alpha`, computed either by a
//!   dense SPD factorisation or matrix-free conjugate gradient, plus the
//!   Bregman / proximal primitives used by optimistic methods.
//! * [`solvers`]: GDA, CGD, CGO, OMDA and optimistic CGO steppers, the
//!   iteration driver and the continuous-time flow integrator.
//! * [`analysis`]: spectral summaries, convergence-rate formulas, parameter
//!   bounds for optimistic CGO, coherence probes and exact linear step maps
//!   for constant-Hessian problems.
//!
//! Every step follows the convention `z_next = z - eta * g`, where
//! `g = (g_x, g_y)` and at `alpha = 0` `g = (grad_x f, -grad_y f)`.

// `!(x > 0.0)` is used on purpose so that NaN parameters are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod competitive;
pub mod error;
pub mod problems;
pub mod solvers;

pub use error::{CompGradError, Result};
pub use problems::{DomainBox, IteratePoint, LipschitzConstants, ProblemOracle};
