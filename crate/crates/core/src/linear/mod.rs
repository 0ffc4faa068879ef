//! Closed-form regressors: linear ridge regression and RBF kernel ridge
//! regression.

mod krr;
mod lrr;

pub use krr::{gram_matrix, krr_fit, krr_predict, rbf_kernel, KrrConfig, KrrModel};
pub use lrr::{lrr_fit, lrr_predict, LrrModel, NormalEquations};
