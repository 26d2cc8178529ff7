//! Variable-metric over-relaxed hybrid proximal extra-gradient (HPE) methods.
//!
//! [`linops`] holds the vector and metric plumbing, [`hpe`] the generic
//! kernel and its instrumentation, [`splitters`] the step oracles for
//! forward-backward-half-forward, projective proximal gradient, Condat-Vu and
//! asymmetric forward-backward-adjoint primal-dual splitting, [`padmm`] the
//! multi-block proximal ADMM with Barzilai-Borwein metrics, and [`prox`] the
//! proximal maps and instance generators.

// NaN must fail parameter checks, so `!(x > 0.0)` is deliberate
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::rc_clone_in_vec_init)]

pub mod linops;
pub mod par;
pub mod rng;
pub mod hpe;
pub mod padmm;
pub mod prox;
pub mod splitters;
