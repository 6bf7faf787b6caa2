// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod experiment;
pub mod metrics;
pub mod moments;
pub mod ncpart;
pub mod ncsymb;
pub mod quadrature;
pub mod stein;
