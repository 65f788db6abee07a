//! Gibbs sampling over `(B, O, a, lambda, theta, epsilon)` given a rating
//! matrix.
//!
//! Priors are flat: Dirichlet(1, 1, 1) on each behavior, uniform on the bias
//! grid, uniform on `1..=lambda_max`, uniform on the epsilon grid, and uniform
//! over strictly decreasing cutpoint tuples on the theta grid. The continuous
//! conditionals (bias, epsilon, theta) are discretized on cell-midpoint grids,
//! so those latents always live on grid points once they have been updated.

mod conditionals;
mod summary;
mod sweep;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GibbsState;
use crate::sampling::Grid;

pub use conditionals::{
    behavior_conditional_concentration, bias_conditional_pmf, epsilon_conditional_pmf,
    lambda_conditional_pmf, lambda_literal_pmf, opinion_conditional_pmf,
    sample_behavior_conditional, sample_bias_conditional, sample_epsilon_conditional,
    sample_lambda_conditional, sample_opinion_conditional, sample_theta_conditional,
    theta_conditional_pmf, theta_window, GridPmf,
};
pub use summary::{summarize_posterior, EdgeSummary, PosteriorSummary};
pub use sweep::{
    gibbs_run, gibbs_run_from, gibbs_step, gibbs_step_with, initial_state, Stage, StepOptions,
    UpdateEvent,
};

/// How the evidence count of each edge is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMode {
    /// Evidence counts never move from their initial values.
    Fixed,
    /// `(lambda, omega)` resampled together as one block.
    #[default]
    BlockedJoint,
    /// Single-site update of lambda with omega's counts held fixed. Since
    /// `lambda = alpha + beta + gamma`, it always returns the current value.
    PaperLiteral,
}

impl std::str::FromStr for LambdaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(Self::Fixed),
            "blocked-joint" | "blocked_joint" => Ok(Self::BlockedJoint),
            "paper-literal" | "paper_literal" => Ok(Self::PaperLiteral),
            other => Err(Error::Config(format!("unknown lambda mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub iterations: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
    pub lambda_max: u32,
    pub bias_grid: usize,
    pub epsilon_bounds: [f64; 2],
    pub epsilon_grid: usize,
    pub theta_bounds: [f64; 2],
    pub theta_grid: usize,
    pub lambda_mode: LambdaMode,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            iterations: 2000,
            burn_in: 500,
            thin: 1,
            seed: 0,
            lambda_max: 30,
            bias_grid: 101,
            epsilon_bounds: [-20.0, 20.0],
            epsilon_grid: 201,
            theta_bounds: [-20.0, 20.0],
            theta_grid: 201,
            lambda_mode: LambdaMode::BlockedJoint,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.iterations == 0 {
            return fail("iterations must be positive".into());
        }
        if self.burn_in >= self.iterations {
            return fail(format!(
                "burn_in {} must be below iterations {}",
                self.burn_in, self.iterations
            ));
        }
        if self.thin == 0 || self.thin > self.iterations - self.burn_in {
            return fail(format!(
                "thin must lie in 1..={}, got {}",
                self.iterations - self.burn_in,
                self.thin
            ));
        }
        if self.lambda_max == 0 {
            return fail("lambda_max must be positive".into());
        }
        for (name, g) in [
            ("bias_grid", self.bias_grid),
            ("epsilon_grid", self.epsilon_grid),
            ("theta_grid", self.theta_grid),
        ] {
            if g < 2 {
                return fail(format!("{name} must be at least 2, got {g}"));
            }
        }
        self.epsilon_grid()?;
        self.theta_grid()?;
        Ok(())
    }

    pub fn bias_grid(&self) -> Grid {
        Grid {
            lo: 0.0,
            hi: 1.0,
            cells: self.bias_grid,
        }
    }

    pub fn epsilon_grid(&self) -> Result<Grid> {
        Grid::new(
            self.epsilon_bounds[0],
            self.epsilon_bounds[1],
            self.epsilon_grid,
        )
    }

    pub fn theta_grid(&self) -> Result<Grid> {
        Grid::new(self.theta_bounds[0], self.theta_bounds[1], self.theta_grid)
    }

    /// Number of states the trace will hold.
    pub fn retained(&self) -> usize {
        ((self.iterations - self.burn_in) / self.thin) as usize
    }

    pub(crate) fn keeps(&self, iteration: u64) -> bool {
        iteration > self.burn_in && (iteration - self.burn_in).is_multiple_of(self.thin)
    }
}

/// Post burn-in, thinned states of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub samples: Vec<GibbsState>,
    pub config: SamplerConfig,
}
