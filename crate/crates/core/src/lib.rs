//! Denoisers as building blocks: ideal-denoiser property checks, closed-form
//! scalar Bayesian denoisers, kernel (pseudo-linear) denoisers with
//! symmetrization, multiscale decomposition, score-based probability-flow
//! sampling, and denoiser-regularized linear inverse problems.
//!
//! ```
//! use denoise_core::denoiser::{Denoiser, ScalarDenoiser};
//! use denoise_core::Signal;
//!
//! let x = Signal::from_vec(vec![-2.0, 0.5, 3.0]).unwrap();
//! let y = ScalarDenoiser::SoftThreshold.denoise(&x, 1.0).unwrap();
//! assert_eq!(y.as_slice(), &[-1.0, 0.0, 2.0]);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decomposition;
pub mod denoiser;
pub mod error;
pub mod flow;
pub mod inverse;
pub mod io;
pub mod kernel;
pub mod metrics;
pub mod noise;
pub mod properties;
pub mod scalar;
pub mod signal;
pub mod special;

pub use error::{Error, Result};
pub use signal::{Domain, Shape, Signal};
