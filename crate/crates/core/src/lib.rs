//! Estimation of trust opinions `(alpha, beta, gamma | a)` from matrices of
//! ordinal trust ratings.
//!
//! Each rating is modelled as the end of a chain: a trustee's behavior emits
//! multinomial evidence counts, the trustor turns them into an expected
//! belief using a personal bias, and an ordered logit maps the belief to a
//! rating level. [`inference`] runs Gibbs sampling over all latents,
//! [`generative`] simulates the chain forward, and [`oracle`] computes exact
//! posteriors on tiny discretized instances for validation.

pub mod diagnostics;
pub mod error;
pub mod generative;
pub mod inference;
pub mod io;
pub mod model;
pub mod oracle;
pub mod sampling;

pub use error::{Error, Result};
pub use model::{
    dirichlet_log_pdf, enumerate_compositions, expected_belief, multinomial_log_pmf,
    ordered_logit_pmf, Behavior, Bias, GibbsState, LogitParams, Opinion, Rating, RatingMatrix,
};
