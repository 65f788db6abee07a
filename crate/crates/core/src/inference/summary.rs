use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{enumerate_compositions, Opinion, RatingMatrix};

use super::Trace;

/// Posterior summary of one edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSummary {
    pub trustor: usize,
    pub trustee: usize,
    pub alpha_mean: f64,
    pub beta_mean: f64,
    pub gamma_mean: f64,
    pub lambda_mean: f64,
    /// Integer opinion for export: the composition of the rounded mean count
    /// closest to the mean counts.
    pub rounded: Opinion,
    pub bias_mean: f64,
    pub expected_belief_mean: f64,
    pub expected_belief_ci90: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub edges: Vec<EdgeSummary>,
    pub behaviors: Vec<[f64; 3]>,
    pub biases: Vec<f64>,
    pub epsilon_mean: f64,
    pub theta_means: Vec<f64>,
    pub samples: usize,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn round_opinion(means: [f64; 3], lambda_mean: f64) -> Opinion {
    let lambda = (lambda_mean.round() as u32).max(1);
    let scale = lambda as f64 / means.iter().sum::<f64>();
    let target = means.map(|m| m * scale);
    let dist = |op: &Opinion| {
        op.counts()
            .iter()
            .zip(target)
            .map(|(c, t)| (*c as f64 - t).powi(2))
            .sum::<f64>()
    };
    // first minimum in enumeration order wins ties
    enumerate_compositions(lambda)
        .into_iter()
        .fold(None::<(Opinion, f64)>, |best, op| {
            let d = dist(&op);
            match best {
                Some((_, bd)) if bd <= d => best,
                _ => Some((op, d)),
            }
        })
        .map(|(op, _)| op)
        .expect("at least one composition")
}

/// Posterior means and 90% credible intervals from a trace.
pub fn summarize_posterior(trace: &Trace, ratings: &RatingMatrix) -> Result<PosteriorSummary> {
    let samples = &trace.samples;
    if samples.is_empty() {
        return Err(Error::Precondition("trace is empty".into()));
    }
    for s in samples {
        if s.opinions.len() != ratings.len() {
            return Err(Error::KeyMismatch(format!(
                "trace state has {} opinions, ratings have {} edges",
                s.opinions.len(),
                ratings.len()
            )));
        }
    }
    let edges = ratings
        .entries()
        .iter()
        .enumerate()
        .map(|(e, r)| {
            let counts = |k: usize| mean(samples.iter().map(|s| s.opinions[e].counts()[k] as f64));
            let means = [counts(0), counts(1), counts(2)];
            let lambda_mean = mean(samples.iter().map(|s| s.opinions[e].lambda() as f64));
            let mut beliefs: Vec<f64> = samples
                .iter()
                .map(|s| s.expected_belief(ratings, e))
                .collect();
            let eb_mean = mean(beliefs.iter().copied());
            beliefs.sort_by(f64::total_cmp);
            EdgeSummary {
                trustor: r.trustor,
                trustee: r.trustee,
                alpha_mean: means[0],
                beta_mean: means[1],
                gamma_mean: means[2],
                lambda_mean,
                rounded: round_opinion(means, lambda_mean),
                bias_mean: mean(samples.iter().map(|s| s.biases[r.trustor].value())),
                expected_belief_mean: eb_mean,
                expected_belief_ci90: [quantile(&beliefs, 0.05), quantile(&beliefs, 0.95)],
            }
        })
        .collect();
    let behaviors = (0..ratings.num_trustees())
        .map(|j| {
            let c = |k: usize| mean(samples.iter().map(|s| s.behaviors[j].as_array()[k]));
            [c(0), c(1), c(2)]
        })
        .collect();
    let biases = (0..ratings.num_trustors())
        .map(|i| mean(samples.iter().map(|s| s.biases[i].value())))
        .collect();
    let theta_means = (0..ratings.levels() as usize - 1)
        .map(|l| mean(samples.iter().map(|s| s.logit.theta()[l])))
        .collect();
    Ok(PosteriorSummary {
        edges,
        behaviors,
        biases,
        epsilon_mean: mean(samples.iter().map(|s| s.logit.epsilon())),
        theta_means,
        samples: samples.len(),
    })
}
