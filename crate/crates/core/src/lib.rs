//! Approximate fixed point sequences for continuous self-maps of compact
//! convex sets, built from admissible seminorms, rho-ball epsilon-nets,
//! Schauder projections and a finite-dimensional fixed point solver. The
//! [`ode`] module applies the same idea to integral equations
//! `u(t) = u0 + int_0^t f(s, u(s)) ds` under an a priori growth bound.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail range checks.

pub mod afp;
pub mod audit;
pub mod brouwer;
pub mod error;
pub mod linalg;
pub mod ode;
pub mod registry;
pub mod schauder;
pub mod seminorms;
pub mod sets;

pub use error::{Error, Result};
