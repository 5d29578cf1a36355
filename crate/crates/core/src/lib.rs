//! Generalized fractional integrals with analytic kernels, and numerical
//! checks of reverse Minkowski-type inequalities built on them.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod funclang;
pub mod harness;
pub mod inequalities;
pub mod kernels;
pub mod operators;
pub mod quadrature;
pub mod series;
pub mod special;

pub use error::{Error, Result};
pub use kernels::{
    kernel_eval, kernel_transform_eval, make_constant_kernel, make_prabhakar_kernel, make_proportional_kernel,
    make_rl_kernel, make_series_kernel, validate_kernel, AnalyticKernel, FractionalOrder, Interval, Radius, SignStatus,
};
pub use quadrature::QuadratureSpec;
