//! Special functions, binomial GLMs and linear-model inference.

pub mod glm;
pub mod regression;
pub mod special;

pub use glm::{glm_binomial, GlmFit, LinkKind};
pub use regression::{f_test, ols, FTest};
pub use special::{norm_cdf, norm_pdf, norm_quantile, norm_sf};
