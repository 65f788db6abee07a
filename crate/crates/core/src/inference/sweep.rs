//! One Gibbs sweep and the chain driver.
//!
//! Sweep order: every behavior, every opinion (fixed count), every bias, the
//! evidence counts according to the lambda mode, each cutpoint in turn, then
//! the slope. Each entity draws from its own stream keyed by
//! `(seed, iteration, stage, entity)`; within a stage the entity updates are
//! conditionally independent, so serial and parallel schedules produce the
//! same bits.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{enumerate_compositions, Bias, GibbsState, LogitParams, Opinion, RatingMatrix};
use crate::sampling::{draw_categorical, draw_dirichlet, normalize_log_weights, stream};

use super::conditionals::{
    opinion_log_weights, sample_behavior_conditional, sample_bias_conditional,
    sample_epsilon_conditional, sample_lambda_conditional, sample_theta_conditional,
};
use super::{LambdaMode, SamplerConfig, Trace};

/// Sweep stages, also used as the stage counter of the random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stage {
    Init = 0,
    Behavior = 1,
    Opinion = 2,
    Bias = 3,
    Lambda = 4,
    Theta = 5,
    Epsilon = 6,
}

/// One entry of the instrumented update log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateEvent {
    Behavior(usize),
    Opinion(usize),
    Bias(usize),
    Lambda(usize),
    Theta(usize),
    Epsilon,
}

impl UpdateEvent {
    pub fn stage(&self) -> Stage {
        match self {
            UpdateEvent::Behavior(_) => Stage::Behavior,
            UpdateEvent::Opinion(_) => Stage::Opinion,
            UpdateEvent::Bias(_) => Stage::Bias,
            UpdateEvent::Lambda(_) => Stage::Lambda,
            UpdateEvent::Theta(_) => Stage::Theta,
            UpdateEvent::Epsilon => Stage::Epsilon,
        }
    }
}

/// Extra controls for [`gibbs_step_with`].
#[derive(Debug, Default)]
pub struct StepOptions<'a> {
    /// Receives one event per latent update, in sweep order.
    pub log: Option<&'a mut Vec<UpdateEvent>>,
    /// Negative control for correctness tests: every composition takes the
    /// weight of the next one in enumeration order.
    pub shift_composition_weights: bool,
}

fn entity_rng(
    config: &SamplerConfig,
    iteration: u64,
    stage: Stage,
    entity: usize,
) -> rand_chacha::ChaCha8Rng {
    stream(config.seed, [iteration, stage as u64, entity as u64])
}

/// Maps `f` over `0..n`, in parallel when the feature is on. Output order is
/// index order either way.
fn map_entities<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if n >= 32 {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

fn draw_block<R: Rng + ?Sized>(
    edge: usize,
    state: &GibbsState,
    ratings: &RatingMatrix,
    lambdas: std::ops::RangeInclusive<u32>,
    shift: bool,
    rng: &mut R,
) -> Result<Opinion> {
    let (support, lw) = opinion_log_weights(edge, state, ratings, lambdas, shift);
    let probs = normalize_log_weights(&lw, &format!("opinion of edge {edge}"))?;
    Ok(support[draw_categorical(&probs, rng)])
}

/// One full sweep with the default options.
pub fn gibbs_step(
    state: &GibbsState,
    ratings: &RatingMatrix,
    config: &SamplerConfig,
) -> Result<GibbsState> {
    gibbs_step_with(state, ratings, config, StepOptions::default())
}

pub fn gibbs_step_with(
    state: &GibbsState,
    ratings: &RatingMatrix,
    config: &SamplerConfig,
    mut options: StepOptions<'_>,
) -> Result<GibbsState> {
    let t = state.iteration + 1;
    let mut next = state.clone();
    next.iteration = t;
    if ratings.is_empty() {
        return Ok(next);
    }
    let shift = options.shift_composition_weights;
    let mut log = |events: &mut dyn Iterator<Item = UpdateEvent>| {
        if let Some(l) = options.log.as_deref_mut() {
            l.extend(events);
        }
    };

    next.behaviors = map_entities(ratings.num_trustees(), |j| {
        let mut rng = entity_rng(config, t, Stage::Behavior, j);
        if ratings.edges_into(j).is_empty() {
            draw_dirichlet([1.0; 3], &mut rng)
        } else {
            sample_behavior_conditional(j, &next, ratings, &mut rng)
        }
    })?;
    log(&mut (0..ratings.num_trustees()).map(UpdateEvent::Behavior));

    next.opinions = map_entities(ratings.len(), |e| {
        let mut rng = entity_rng(config, t, Stage::Opinion, e);
        let lambda = next.opinions[e].lambda();
        draw_block(e, &next, ratings, lambda..=lambda, shift, &mut rng)
    })?;
    log(&mut (0..ratings.len()).map(UpdateEvent::Opinion));

    let bias_grid = config.bias_grid();
    next.biases = map_entities(ratings.num_trustors(), |i| {
        let mut rng = entity_rng(config, t, Stage::Bias, i);
        if ratings.edges_from(i).is_empty() {
            Bias::new(bias_grid.uniform_point(&mut rng))
        } else {
            sample_bias_conditional(i, &next, ratings, bias_grid, &mut rng)
        }
    })?;
    log(&mut (0..ratings.num_trustors()).map(UpdateEvent::Bias));

    match config.lambda_mode {
        LambdaMode::Fixed => {}
        LambdaMode::BlockedJoint => {
            next.opinions = map_entities(ratings.len(), |e| {
                let mut rng = entity_rng(config, t, Stage::Lambda, e);
                draw_block(e, &next, ratings, 1..=config.lambda_max, shift, &mut rng)
            })?;
            log(&mut (0..ratings.len()).map(UpdateEvent::Lambda));
        }
        LambdaMode::PaperLiteral => {
            next.opinions = map_entities(ratings.len(), |e| {
                let mut rng = entity_rng(config, t, Stage::Lambda, e);
                let (_, op) = sample_lambda_conditional(
                    e,
                    &next,
                    ratings,
                    config.lambda_max,
                    LambdaMode::PaperLiteral,
                    &mut rng,
                )?;
                Ok(op)
            })?;
            log(&mut (0..ratings.len()).map(UpdateEvent::Lambda));
        }
    }

    let theta_grid = config.theta_grid()?;
    for l in 1..ratings.levels() as usize {
        let mut rng = entity_rng(config, t, Stage::Theta, l);
        let value = sample_theta_conditional(l, &next, ratings, theta_grid, &mut rng)?;
        next.logit.set_theta(l, value)?;
        log(&mut std::iter::once(UpdateEvent::Theta(l)));
    }

    let mut rng = entity_rng(config, t, Stage::Epsilon, 0);
    let eps = sample_epsilon_conditional(&next, ratings, config.epsilon_grid()?, &mut rng)?;
    next.logit.set_epsilon(eps)?;
    log(&mut std::iter::once(UpdateEvent::Epsilon));

    Ok(next)
}

/// Random starting point: behaviors from Dirichlet(1, 1, 1), biases and the
/// slope uniform on their grids, evidence counts uniform on `1..=lambda_max`,
/// opinions uniform over the compositions of their count, and cutpoints as
/// distinct grid points sorted in decreasing order.
pub fn initial_state(ratings: &RatingMatrix, config: &SamplerConfig) -> Result<GibbsState> {
    config.validate()?;
    let levels = ratings.levels() as usize;
    let theta_grid = config.theta_grid()?;
    if theta_grid.cells < levels - 1 {
        return Err(Error::Config(format!(
            "theta grid has {} points for {} cutpoints",
            theta_grid.cells,
            levels - 1
        )));
    }
    let behaviors = (0..ratings.num_trustees())
        .map(|j| draw_dirichlet([1.0; 3], &mut entity_rng(config, 0, Stage::Behavior, j)))
        .collect::<Result<Vec<_>>>()?;
    let bias_grid = config.bias_grid();
    let biases = (0..ratings.num_trustors())
        .map(|i| Bias::new(bias_grid.uniform_point(&mut entity_rng(config, 0, Stage::Bias, i))))
        .collect::<Result<Vec<_>>>()?;
    let opinions = (0..ratings.len())
        .map(|e| {
            let mut rng = entity_rng(config, 0, Stage::Opinion, e);
            let lambda = rng.random_range(1..=config.lambda_max);
            let comps = enumerate_compositions(lambda);
            comps[rng.random_range(0..comps.len())]
        })
        .collect();
    let mut rng = entity_rng(config, 0, Stage::Init, 0);
    let epsilon = config.epsilon_grid()?.uniform_point(&mut rng);
    let mut idx = sample_indices(&mut rng, theta_grid.cells, levels - 1).into_vec();
    idx.sort_unstable_by(|a, b| b.cmp(a));
    let theta = idx.into_iter().map(|k| theta_grid.point(k)).collect();
    Ok(GibbsState {
        opinions,
        behaviors,
        biases,
        logit: LogitParams::new(epsilon, theta)?,
        iteration: 0,
    })
}

/// Runs `config.iterations` sweeps from a random initial state.
pub fn gibbs_run(ratings: &RatingMatrix, config: &SamplerConfig) -> Result<Trace> {
    if ratings.is_empty() {
        return Err(Error::Precondition("rating matrix has no entries".into()));
    }
    let init = initial_state(ratings, config)?;
    gibbs_run_from(init, ratings, config)
}

/// Runs `config.iterations` sweeps starting from `state`.
pub fn gibbs_run_from(
    mut state: GibbsState,
    ratings: &RatingMatrix,
    config: &SamplerConfig,
) -> Result<Trace> {
    config.validate()?;
    if ratings.is_empty() {
        return Err(Error::Precondition("rating matrix has no entries".into()));
    }
    state.validate(ratings, config.lambda_max)?;
    let start = state.iteration;
    let mut samples = Vec::with_capacity(config.retained());
    for sweep in 1..=config.iterations {
        state = gibbs_step(&state, ratings, config)?;
        if config.keeps(sweep) {
            samples.push(state.clone());
        }
    }
    debug_assert_eq!(state.iteration, start + config.iterations);
    Ok(Trace {
        samples,
        config: config.clone(),
    })
}
