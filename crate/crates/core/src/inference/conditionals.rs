//! Full conditionals of the six latent blocks.
//!
//! Each discrete conditional is exposed twice: a `*_pmf` function returning
//! the normalized distribution over its support, and a `sample_*` function
//! drawing from exactly that distribution. Behaviors have a closed-form
//! Dirichlet conditional and are drawn continuously.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use statrs::function::factorial::ln_factorial;

use crate::model::{
    composition_count, expected_belief_raw, level_log_prob, middle_log_prob, multinomial_log_pmf,
    Behavior, Bias, GibbsState, Opinion, RatingMatrix,
};
use crate::sampling::{draw_categorical, draw_dirichlet, normalize_log_weights, Grid};

use super::LambdaMode;

/// A normalized distribution over grid points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPmf {
    pub points: Vec<f64>,
    pub probs: Vec<f64>,
}

impl GridPmf {
    fn from_log_weights(points: Vec<f64>, log_weights: &[f64], what: &str) -> Result<Self> {
        let probs = normalize_log_weights(log_weights, what)?;
        Ok(Self { points, probs })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.points[draw_categorical(&self.probs, rng)]
    }

    pub fn mean(&self) -> f64 {
        self.points
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| x * p)
            .sum()
    }
}

fn check_edge(edge: usize, state: &GibbsState, ratings: &RatingMatrix) -> Result<()> {
    if edge >= ratings.len() || edge >= state.opinions.len() {
        return Err(Error::Precondition(format!(
            "edge index {edge} out of range"
        )));
    }
    Ok(())
}

/// Support and log weights of the opinion conditional of `edge` over every
/// composition of every count in `lambdas`: multinomial term plus rating
/// likelihood at the composition's expected belief.
///
/// This is the sampler's inner loop, so the per-edge constants (category
/// logs, factorials, the cutpoint gap of a middle level) are hoisted. The
/// multinomial term is summed in the same order as [`multinomial_log_pmf`].
pub(crate) fn opinion_log_weights(
    edge: usize,
    state: &GibbsState,
    ratings: &RatingMatrix,
    lambdas: std::ops::RangeInclusive<u32>,
    shift_fault: bool,
) -> (Vec<Opinion>, Vec<f64>) {
    let r = ratings.entries()[edge];
    let ln_p = state.behaviors[r.trustee].as_array().map(f64::ln);
    let a = state.biases[r.trustor].value();
    let eps = state.logit.epsilon();
    let theta = state.logit.theta();
    let top = theta.len() as u32 + 1;
    let middle = r.level > 1 && r.level < top;
    let (upper, lower) = if middle {
        (theta[r.level as usize - 2], theta[r.level as usize - 1])
    } else {
        (0.0, 0.0)
    };
    let gap = (-(lower - upper).exp_m1()).ln();
    let rating_term = |x: f64| -> f64 {
        let eta = eps * x;
        if !middle {
            level_log_prob(eta, theta, r.level)
        } else if upper <= lower {
            f64::NEG_INFINITY
        } else {
            middle_log_prob(eta + upper, eta + lower, gap)
        }
    };
    let term = |count: u32, lp: f64| if count == 0 { 0.0 } else { count as f64 * lp };
    let lnf: Vec<f64> = (0..=*lambdas.end() as u64).map(ln_factorial).collect();

    let total: usize = lambdas.clone().map(composition_count).sum();
    let mut support = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    for lambda in lambdas {
        let start = weights.len();
        for alpha in (0..=lambda).rev() {
            for beta in (0..=lambda - alpha).rev() {
                let op = Opinion::new(alpha, beta, lambda - alpha - beta);
                let t = term(op.alpha, ln_p[0]) + term(op.beta, ln_p[1]) + term(op.gamma, ln_p[2]);
                let w = if t == f64::NEG_INFINITY {
                    t
                } else {
                    let coef = lnf[lambda as usize]
                        - lnf[op.alpha as usize]
                        - lnf[op.beta as usize]
                        - lnf[op.gamma as usize];
                    coef + t + rating_term(expected_belief_raw(op, a))
                };
                support.push(op);
                weights.push(w);
            }
        }
        if shift_fault {
            // negative control: each composition takes its neighbour's weight
            weights[start..].rotate_left(1);
        }
    }
    (support, weights)
}

/// Conditional of `omega_ij` with its evidence count held at the current value.
pub fn opinion_conditional_pmf(
    edge: usize,
    state: &GibbsState,
    ratings: &RatingMatrix,
) -> Result<Vec<(Opinion, f64)>> {
    check_edge(edge, state, ratings)?;
    let lambda = state.opinions[edge].lambda();
    if lambda == 0 {
        return Err(Error::DegenerateOpinion);
    }
    let (support, lw) = opinion_log_weights(edge, state, ratings, lambda..=lambda, false);
    let probs = normalize_log_weights(&lw, &format!("opinion of edge {edge}"))?;
    Ok(support.into_iter().zip(probs).collect())
}

pub fn sample_opinion_conditional<R: Rng + ?Sized>(
    edge: usize,
    state: &GibbsState,
    ratings: &RatingMatrix,
    rng: &mut R,
) -> Result<Opinion> {
    let pmf = opinion_conditional_pmf(edge, state, ratings)?;
    let probs: Vec<f64> = pmf.iter().map(|(_, p)| *p).collect();
    Ok(pmf[draw_categorical(&probs, rng)].0)
}

/// Joint conditional of `(lambda_ij, omega_ij)` under the uniform prior on
/// `1..=lambda_max`. The support lists every composition of every count.
pub fn lambda_conditional_pmf(
    edge: usize,
    state: &GibbsState,
    ratings: &RatingMatrix,
    lambda_max: u32,
) -> Result<Vec<(Opinion, f64)>> {
    check_edge(edge, state, ratings)?;
    if lambda_max == 0 {
        return Err(Error::Config("lambda_max must be positive".into()));
    }
    let (support, lw) = opinion_log_weights(edge, state, ratings, 1..=lambda_max, false);
    let probs = normalize_log_weights(&lw, &format!("evidence block of edge {edge}"))?;
    Ok(support.into_iter().zip(probs).collect())
}

/// Single-site conditional of `lambda_ij` with the counts of `omega_ij` held
/// fixed: weights `Mul(omega | B_j, lambda)` for `lambda` in `1..=lambda_max`.
/// The multinomial has no mass unless `lambda` equals the counts' total, so
/// the result is a point mass on the current value.
pub fn lambda_literal_pmf(
    edge: usize,
    state: &GibbsState,
    ratings: &RatingMatrix,
    lambda_max: u32,
) -> Result<Vec<(u32, f64)>> {
    check_edge(edge, state, ratings)?;
    let op = state.opinions[edge];
    let behavior = state.behaviors[ratings.entries()[edge].trustee];
    let lw: Vec<f64> = (1..=lambda_max)
        .map(|lambda| {
            if lambda == op.lambda() {
                multinomial_log_pmf(op, behavior)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let probs = normalize_log_weights(&lw, &format!("evidence count of edge {edge}"))?;
    Ok((1..=lambda_max).zip(probs).collect())
}

/// Draws a new `(lambda, omega)` for `edge` according to `mode`.
pub fn sample_lambda_conditional<R: Rng + ?Sized>(
    edge: usize,
    state: &GibbsState,
    ratings: &RatingMatrix,
    lambda_max: u32,
    mode: LambdaMode,
    rng: &mut R,
) -> Result<(u32, Opinion)> {
    match mode {
        LambdaMode::Fixed => Err(Error::Precondition(
            "evidence counts are not sampled in fixed mode".into(),
        )),
        LambdaMode::BlockedJoint => {
            let pmf = lambda_conditional_pmf(edge, state, ratings, lambda_max)?;
            let probs: Vec<f64> = pmf.iter().map(|(_, p)| *p).collect();
            let op = pmf[draw_categorical(&probs, rng)].0;
            Ok((op.lambda(), op))
        }
        LambdaMode::PaperLiteral => {
            let pmf = lambda_literal_pmf(edge, state, ratings, lambda_max)?;
            let probs: Vec<f64> = pmf.iter().map(|(_, p)| *p).collect();
            let lambda = pmf[draw_categorical(&probs, rng)].0;
            Ok((lambda, state.opinions[edge]))
        }
    }
}

/// Dirichlet concentration of trustee `j`'s behavior conditional:
/// `1 + column sums` of the opinions on its incoming edges.
pub fn behavior_conditional_concentration(
    trustee: usize,
    state: &GibbsState,
    ratings: &RatingMatrix,
) -> Result<[f64; 3]> {
    if trustee >= ratings.num_trustees() {
        return Err(Error::Precondition(format!(
            "trustee {trustee} out of range"
        )));
    }
    let edges = ratings.edges_into(trustee);
    if edges.is_empty() {
        return Err(Error::Precondition(format!(
            "trustee {trustee} has no observed incoming edge"
        )));
    }
    let mut conc = [1.0; 3];
    for &e in edges {
        for (c, n) in conc.iter_mut().zip(state.opinions[e].counts()) {
            *c += n as f64;
        }
    }
    Ok(conc)
}

pub fn sample_behavior_conditional<R: Rng + ?Sized>(
    trustee: usize,
    state: &GibbsState,
    ratings: &RatingMatrix,
    rng: &mut R,
) -> Result<Behavior> {
    let conc = behavior_conditional_concentration(trustee, state, ratings)?;
    draw_dirichlet(conc, rng)
}

/// Grid conditional of trustor `i`'s bias: product of the rating likelihoods
/// of `i`'s edges, evaluated at each grid point.
pub fn bias_conditional_pmf(
    trustor: usize,
    state: &GibbsState,
    ratings: &RatingMatrix,
    grid: Grid,
) -> Result<GridPmf> {
    if trustor >= ratings.num_trustors() {
        return Err(Error::Precondition(format!(
            "trustor {trustor} out of range"
        )));
    }
    let edges = ratings.edges_from(trustor);
    if edges.is_empty() {
        return Err(Error::Precondition(format!(
            "trustor {trustor} has no observed outgoing edge"
        )));
    }
    let eps = state.logit.epsilon();
    let theta = state.logit.theta();
    let points = grid.points();
    let lw: Vec<f64> = points
        .iter()
        .map(|&a| {
            edges
                .iter()
                .map(|&e| {
                    let x = expected_belief_raw(state.opinions[e], a);
                    level_log_prob(eps * x, theta, ratings.entries()[e].level)
                })
                .sum()
        })
        .collect();
    GridPmf::from_log_weights(points, &lw, &format!("bias of trustor {trustor}"))
}

pub fn sample_bias_conditional<R: Rng + ?Sized>(
    trustor: usize,
    state: &GibbsState,
    ratings: &RatingMatrix,
    grid: Grid,
    rng: &mut R,
) -> Result<Bias> {
    Bias::new(bias_conditional_pmf(trustor, state, ratings, grid)?.draw(rng))
}

fn expected_beliefs(state: &GibbsState, ratings: &RatingMatrix) -> Vec<f64> {
    (0..ratings.len())
        .map(|e| state.expected_belief(ratings, e))
        .collect()
}

/// Grid conditional of the logit slope over every observed edge.
pub fn epsilon_conditional_pmf(
    state: &GibbsState,
    ratings: &RatingMatrix,
    grid: Grid,
) -> Result<GridPmf> {
    if ratings.is_empty() {
        return Err(Error::Precondition("no observed edges".into()));
    }
    let xs = expected_beliefs(state, ratings);
    let theta = state.logit.theta();
    let points = grid.points();
    let lw: Vec<f64> = points
        .iter()
        .map(|&eps| {
            xs.iter()
                .zip(ratings.entries())
                .map(|(x, r)| level_log_prob(eps * x, theta, r.level))
                .sum()
        })
        .collect();
    GridPmf::from_log_weights(points, &lw, "epsilon")
}

pub fn sample_epsilon_conditional<R: Rng + ?Sized>(
    state: &GibbsState,
    ratings: &RatingMatrix,
    grid: Grid,
    rng: &mut R,
) -> Result<f64> {
    Ok(epsilon_conditional_pmf(state, ratings, grid)?.draw(rng))
}

/// Open interval `(theta_{l+1}, theta_{l-1})` cutpoint `l` (1-based) must stay
/// inside, with the grid bounds standing in for the missing neighbours.
pub fn theta_window(l: usize, theta: &[f64], grid: Grid) -> Result<(f64, f64)> {
    if l == 0 || l > theta.len() {
        return Err(Error::Precondition(format!(
            "cutpoint index {l} outside 1..={}",
            theta.len()
        )));
    }
    let upper = if l == 1 { grid.hi } else { theta[l - 2] };
    let lower = if l == theta.len() { grid.lo } else { theta[l] };
    Ok((lower, upper))
}

/// Grid conditional of cutpoint `l` (1-based), restricted to grid points
/// strictly between its neighbours. Only ratings at levels `l` and `l + 1`
/// depend on `theta_l`; the others contribute a constant factor.
pub fn theta_conditional_pmf(
    l: usize,
    state: &GibbsState,
    ratings: &RatingMatrix,
    grid: Grid,
) -> Result<GridPmf> {
    let (lower, upper) = theta_window(l, state.logit.theta(), grid)?;
    let idx = grid.indices_between(lower, upper);
    if idx.is_empty() {
        return Err(Error::EmptySupport(format!(
            "cutpoint {l}: no grid point inside ({lower}, {upper})"
        )));
    }
    let eps = state.logit.epsilon();
    let involved: Vec<(f64, u32)> = ratings
        .entries()
        .iter()
        .enumerate()
        .filter(|(_, r)| r.level as usize == l || r.level as usize == l + 1)
        .map(|(e, r)| (eps * state.expected_belief(ratings, e), r.level))
        .collect();
    let mut theta = state.logit.theta().to_vec();
    let points: Vec<f64> = idx.map(|k| grid.point(k)).collect();
    let lw: Vec<f64> = points
        .iter()
        .map(|&t| {
            theta[l - 1] = t;
            involved
                .iter()
                .map(|(eta, level)| level_log_prob(*eta, &theta, *level))
                .sum()
        })
        .collect();
    GridPmf::from_log_weights(points, &lw, &format!("cutpoint {l}"))
}

pub fn sample_theta_conditional<R: Rng + ?Sized>(
    l: usize,
    state: &GibbsState,
    ratings: &RatingMatrix,
    grid: Grid,
    rng: &mut R,
) -> Result<f64> {
    Ok(theta_conditional_pmf(l, state, ratings, grid)?.draw(rng))
}
