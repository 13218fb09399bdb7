//! Reduced-rank multinomial models for response profiles.
//!
//! The model here predicts a categorical outcome with `K` categories — often
//! the `K = 2^R` joint profiles of `R` binary response variables — from a set
//! of numeric predictors. The log-scale predictor for observation `i` and
//! category `k` is
//!
//! ```text
//! θ_ik = w_k'·b_w + x_i'·B_x·B_z'·z_k
//! ```
//!
//! where `W` and `Z` are known category design matrices (for binary profiles,
//! built from ±½ main-effect and association codings), and `b_w`, `B_x`
//! (`P×S`), `B_z` (`Q×S`) are estimated. The rank `S` of the bilinear term
//! controls how many latent dimensions connect predictors to responses;
//! `S = min(P, Q)` recovers a (structured) multinomial logistic regression,
//! while smaller `S` gives a parsimonious reduced-rank fit.
//!
//! The pieces:
//!
//! * [`design`] — ±½ profile codings, term sets ("1", "1:2", …), design-matrix
//!   construction, predictor encoding, and the [`design::DesignSet`] bundle.
//! * [`model`] — parameters, indicator observations, probabilities, deviance,
//!   and the identification step that picks one representative from each
//!   equivalence class of parameters.
//! * [`fitter`] — the monotone MM algorithm with three interchangeable
//!   bilinear update schemes and optional zero-masks on coefficients.
//! * [`interpret`] — implied coefficients `B_x·B_z'`, log-odds and
//!   log-odds-ratio effects, intercept associations, and prediction.
//! * [`select`] — AIC, four-step stepwise structure search, and case-bootstrap
//!   percentile confidence intervals.
//! * [`linalg`] — the small dense kernel (SVD, symmetric inverse square root)
//!   the rest is built on.

pub mod design;
pub mod error;
pub mod fitter;
pub mod interpret;
pub mod linalg;
pub mod model;
pub mod select;

pub use ndarray;

pub use design::{DesignSet, Encoding, ProfileCoding, Term, TermSet};
pub use error::{Error, Result};
pub use fitter::{fit, fit_dimensionwise, FitOptions, FitResult, Masks, UpdateScheme};
pub use model::{identify, Observations, Parameters};
pub use select::{bootstrap, stepwise, BootstrapOptions, ModelSpec, StepwiseOptions};
