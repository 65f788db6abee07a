//! Chain health checks, the joint-distribution correctness test and recovery
//! scoring.
//!
//! Every diagnostic works on a fixed list of scalar summaries of a state
//! rather than on the full latent vector; see [`TRACE_STATISTICS`] and
//! [`JOINT_STATISTICS`].

use std::collections::HashMap;
use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generative::{forward_sample_opinion, forward_sample_rating, GroundTruth};
use crate::inference::{gibbs_step_with, PosteriorSummary, SamplerConfig, StepOptions, Trace};
use crate::model::{expected_belief_raw, Bias, GibbsState, LogitParams, Opinion, RatingMatrix};
use crate::oracle::log_joint;
use crate::sampling::{draw_dirichlet, stream};

const TAG_MARGINAL: u64 = 0x6777_0000;
const TAG_SUCCESSIVE: u64 = 0x6777_0001;

/// Shortest series [`effective_sample_size`] accepts.
pub const MIN_SERIES: usize = 10;

/// Scalars monitored along a Gibbs trace.
pub const TRACE_STATISTICS: [&str; 8] = [
    "mean_expected_belief",
    "mean_b",
    "mean_d",
    "mean_bias",
    "epsilon",
    "mean_theta",
    "mean_lambda",
    "log_joint",
];

/// Scalars compared by the joint-distribution test. The data change between
/// rounds there, so the mean rating replaces the log joint.
pub const JOINT_STATISTICS: [&str; 8] = [
    "mean_expected_belief",
    "mean_b",
    "mean_d",
    "mean_bias",
    "epsilon",
    "mean_theta",
    "mean_lambda",
    "mean_rating",
];

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64
}

/// The seven latent summaries shared by both statistic lists.
fn latent_statistics(state: &GibbsState, ratings: &RatingMatrix) -> [f64; 7] {
    let edges = ratings.len().max(1) as f64;
    let beliefs: f64 = (0..ratings.len())
        .map(|e| state.expected_belief(ratings, e))
        .sum();
    let lambdas: f64 = state.opinions.iter().map(|o| o.lambda() as f64).sum();
    let nb = state.behaviors.len().max(1) as f64;
    let na = state.biases.len().max(1) as f64;
    let theta = state.logit.theta();
    [
        beliefs / edges,
        state.behaviors.iter().map(|b| b.b()).sum::<f64>() / nb,
        state.behaviors.iter().map(|b| b.d()).sum::<f64>() / nb,
        state.biases.iter().map(|a| a.value()).sum::<f64>() / na,
        state.logit.epsilon(),
        theta.iter().sum::<f64>() / theta.len() as f64,
        lambdas / edges,
    ]
}

pub fn trace_statistics(
    state: &GibbsState,
    ratings: &RatingMatrix,
    config: &SamplerConfig,
) -> [f64; 8] {
    let s = latent_statistics(state, ratings);
    [
        s[0],
        s[1],
        s[2],
        s[3],
        s[4],
        s[5],
        s[6],
        log_joint(state, ratings, config),
    ]
}

pub fn joint_statistics(state: &GibbsState, ratings: &RatingMatrix) -> [f64; 8] {
    let s = latent_statistics(state, ratings);
    let levels: f64 = ratings.entries().iter().map(|r| r.level as f64).sum();
    let rating = levels / ratings.len().max(1) as f64;
    [s[0], s[1], s[2], s[3], s[4], s[5], s[6], rating]
}

/// Initial-positive-sequence estimate of the effective sample size.
///
/// A constant series carries no autocorrelation information and is assigned
/// its own length. The estimate is capped at the series length.
pub fn effective_sample_size(series: &[f64]) -> Result<f64> {
    let n = series.len();
    if n < MIN_SERIES {
        return Err(Error::ShortSeries {
            len: n,
            min: MIN_SERIES,
        });
    }
    let m = mean(series);
    let c0 = series.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
    if c0 <= 0.0 || !c0.is_finite() {
        return Ok(n as f64);
    }
    let rho = |k: usize| -> f64 {
        let c: f64 = (0..n - k)
            .map(|t| (series[t] - m) * (series[t + k] - m))
            .sum();
        c / n as f64 / c0
    };
    // tau = -1 + 2 * sum of positive pair sums (rho_2k + rho_2k+1)
    let mut tau = -1.0;
    let mut k = 0;
    while k + 1 < n {
        let pair = rho(k) + rho(k + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        k += 2;
    }
    Ok((n as f64 / tau.max(f64::MIN_POSITIVE)).min(n as f64))
}

/// Difference of means of two series in units of its standard error, each
/// variance deflated by the series' effective sample size.
pub fn two_sample_z(a: &[f64], b: &[f64]) -> Result<f64> {
    let se2 = |x: &[f64]| -> Result<f64> { Ok(variance(x) / effective_sample_size(x)?) };
    let diff = mean(a) - mean(b);
    let se = (se2(a)? + se2(b)?).sqrt();
    if se == 0.0 {
        return Ok(if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        });
    }
    Ok(diff / se)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStats {
    pub statistics: Vec<String>,
    pub means: Vec<f64>,
    pub ess: Vec<f64>,
    pub geweke_z: Vec<f64>,
    pub length: usize,
    pub thin: u64,
}

/// Convergence z-score comparing the first 10% of a series with its last 50%.
pub fn geweke_convergence_z(series: &[f64]) -> Result<f64> {
    let n = series.len();
    let head = &series[..n / 10];
    let tail = &series[n - n / 2..];
    if head.len() < MIN_SERIES {
        return Err(Error::ShortSeries {
            len: n,
            min: 10 * MIN_SERIES,
        });
    }
    two_sample_z(head, tail)
}

fn columns(rows: &[[f64; 8]]) -> Vec<Vec<f64>> {
    (0..8)
        .map(|k| rows.iter().map(|r| r[k]).collect())
        .collect()
}

/// ESS and convergence z-scores of [`TRACE_STATISTICS`] along a trace.
pub fn chain_stats(trace: &Trace, ratings: &RatingMatrix) -> Result<ChainStats> {
    let rows: Vec<[f64; 8]> = trace
        .samples
        .iter()
        .map(|s| trace_statistics(s, ratings, &trace.config))
        .collect();
    let cols = columns(&rows);
    Ok(ChainStats {
        statistics: TRACE_STATISTICS.iter().map(|s| s.to_string()).collect(),
        means: cols.iter().map(|c| mean(c)).collect(),
        ess: cols
            .iter()
            .map(|c| effective_sample_size(c))
            .collect::<Result<_>>()?,
        geweke_z: cols
            .iter()
            .map(|c| geweke_convergence_z(c))
            .collect::<Result<_>>()?,
        length: rows.len(),
        thin: trace.config.thin,
    })
}

/// Plot-ready rows `(iteration, statistic, value)` for a trace.
pub fn write_plot_csv<W: Write>(writer: W, trace: &Trace, ratings: &RatingMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["iteration", "statistic", "value"])?;
    for s in &trace.samples {
        let stats = trace_statistics(s, ratings, &trace.config);
        for (name, v) in TRACE_STATISTICS.iter().zip(stats) {
            w.write_record([
                s.iteration.to_string(),
                name.to_string(),
                format!("{v:.16e}"),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Draw of all latents from the priors the sampler assumes: uniform
/// behaviors, grid-uniform bias and slope, cutpoints uniform over strictly
/// decreasing grid tuples, uniform evidence counts and multinomial evidence.
pub fn prior_state<R: Rng + ?Sized>(
    ratings: &RatingMatrix,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<GibbsState> {
    let behaviors = (0..ratings.num_trustees())
        .map(|_| draw_dirichlet([1.0; 3], rng))
        .collect::<Result<Vec<_>>>()?;
    let bias_grid = config.bias_grid();
    let biases = (0..ratings.num_trustors())
        .map(|_| Bias::new(bias_grid.uniform_point(rng)))
        .collect::<Result<Vec<_>>>()?;
    let epsilon = config.epsilon_grid()?.uniform_point(rng);
    let theta_grid = config.theta_grid()?;
    let cutpoints = ratings.levels() as usize - 1;
    if cutpoints > theta_grid.cells {
        return Err(Error::Config(format!(
            "theta grid of {} points cannot hold {cutpoints} distinct cutpoints",
            theta_grid.cells
        )));
    }
    let mut idx = rand::seq::index::sample(rng, theta_grid.cells, cutpoints).into_vec();
    idx.sort_unstable_by(|a, b| b.cmp(a));
    let logit = LogitParams::new(epsilon, idx.iter().map(|k| theta_grid.point(*k)).collect())?;
    let opinions = ratings
        .entries()
        .iter()
        .map(|r| {
            let lambda = rng.random_range(1..=config.lambda_max);
            forward_sample_opinion(behaviors[r.trustee], lambda, rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GibbsState {
        opinions,
        behaviors,
        biases,
        logit,
        iteration: 0,
    })
}

/// Fresh ratings for every edge of `template` given the latents of `state`.
pub fn redraw_ratings<R: Rng + ?Sized>(
    state: &GibbsState,
    template: &RatingMatrix,
    rng: &mut R,
) -> Result<RatingMatrix> {
    let levels = template
        .entries()
        .iter()
        .zip(&state.opinions)
        .map(|(r, op)| forward_sample_rating(*op, state.biases[r.trustor], &state.logit, rng))
        .collect::<Result<Vec<_>>>()?;
    template.with_levels(&levels)
}

/// Prior sampler signature accepted by [`geweke_joint_test`].
pub trait PriorSampler: Sync {
    fn draw(
        &self,
        ratings: &RatingMatrix,
        config: &SamplerConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<GibbsState>;
}

impl<F> PriorSampler for F
where
    F: Fn(&RatingMatrix, &SamplerConfig, &mut ChaCha8Rng) -> Result<GibbsState> + Sync,
{
    fn draw(
        &self,
        ratings: &RatingMatrix,
        config: &SamplerConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<GibbsState> {
        self(ratings, config, rng)
    }
}

/// Joint-distribution test of the Gibbs kernel.
///
/// The marginal-conditional simulator draws `(latents, ratings)` afresh from
/// the prior and the likelihood each round. The successive-conditional
/// simulator alternates one Gibbs sweep with a fresh draw of the ratings. Both
/// sample the same joint when the kernel leaves the posterior invariant, so
/// the z-scores of [`JOINT_STATISTICS`] should be standard normal.
///
/// `template` fixes the edge set and the number of levels; its ratings are
/// ignored. `shift_composition_weights` runs the sampler with the injected
/// fault of [`StepOptions`].
pub fn geweke_joint_test(
    config: &SamplerConfig,
    template: &RatingMatrix,
    prior: &impl PriorSampler,
    rounds: usize,
    shift_composition_weights: bool,
) -> Result<ChainStats> {
    if rounds < 1000 {
        return Err(Error::Precondition(format!(
            "joint-distribution test needs at least 1000 rounds, got {rounds}"
        )));
    }
    config.validate()?;
    let marginal = |r: usize| -> Result<[f64; 8]> {
        let mut rng = stream(config.seed, [TAG_MARGINAL, r as u64, 0]);
        let state = prior.draw(template, config, &mut rng)?;
        let ratings = redraw_ratings(&state, template, &mut rng)?;
        Ok(joint_statistics(&state, &ratings))
    };
    #[cfg(feature = "parallel")]
    let mc: Vec<[f64; 8]> = (0..rounds)
        .into_par_iter()
        .map(marginal)
        .collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let mc: Vec<[f64; 8]> = (0..rounds).map(marginal).collect::<Result<_>>()?;

    let mut rng = stream(config.seed, [TAG_SUCCESSIVE, 0, 0]);
    let mut state = prior.draw(template, config, &mut rng)?;
    let mut ratings = redraw_ratings(&state, template, &mut rng)?;
    let mut sc = Vec::with_capacity(rounds);
    for r in 0..rounds {
        let options = StepOptions {
            log: None,
            shift_composition_weights,
        };
        state = gibbs_step_with(&state, &ratings, config, options)?;
        let mut rng = stream(config.seed, [TAG_SUCCESSIVE, r as u64 + 1, 1]);
        ratings = redraw_ratings(&state, template, &mut rng)?;
        sc.push(joint_statistics(&state, &ratings));
    }

    let (mc, sc) = (columns(&mc), columns(&sc));
    let z = mc
        .iter()
        .zip(&sc)
        .map(|(a, b)| {
            // marginal draws are independent: no ESS deflation on that side
            let diff = mean(a) - mean(b);
            let se =
                (variance(a) / a.len() as f64 + variance(b) / effective_sample_size(b)?).sqrt();
            Ok(if se == 0.0 { 0.0 } else { diff / se })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ChainStats {
        statistics: JOINT_STATISTICS.iter().map(|s| s.to_string()).collect(),
        means: sc.iter().map(|c| mean(c)).collect(),
        ess: sc
            .iter()
            .map(|c| effective_sample_size(c))
            .collect::<Result<_>>()?,
        geweke_z: z,
        length: rounds,
        thin: 1,
    })
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|a, b| xs[*a].total_cmp(&xs[*b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        // ties share the average of their positions
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[order[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Precondition(format!(
            "rank correlation needs two equal-length series of length >= 2, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, my) = (mean(&rx), mean(&ry));
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let sy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if sx == 0.0 || sy == 0.0 {
        return Err(Error::Domain(
            "rank correlation of a constant series".into(),
        ));
    }
    Ok(cov / (sx * sy).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryScore {
    pub spearman: f64,
    pub epsilon_error: f64,
    pub theta_errors: Vec<f64>,
    pub behavior_errors: Vec<[f64; 3]>,
    pub bias_errors: Vec<f64>,
}

/// Compares a posterior summary with the truth that generated the data.
/// `latent` holds the true opinions in the summary's edge order.
pub fn recovery_score(
    truth: &GroundTruth,
    latent: &[Opinion],
    summary: &PosteriorSummary,
) -> Result<RecoveryScore> {
    let truth_keys: HashMap<(usize, usize), usize> = truth
        .lambdas
        .iter()
        .enumerate()
        .map(|(k, e)| ((e.trustor, e.trustee), k))
        .collect();
    if summary.edges.len() != truth_keys.len() || latent.len() != summary.edges.len() {
        return Err(Error::KeyMismatch(format!(
            "{} summary edges, {} true edges, {} latent opinions",
            summary.edges.len(),
            truth_keys.len(),
            latent.len()
        )));
    }
    if summary.behaviors.len() != truth.behaviors.len()
        || summary.biases.len() != truth.biases.len()
        || summary.theta_means.len() != truth.logit.theta().len()
    {
        return Err(Error::KeyMismatch(
            "summary and truth dimensions differ".into(),
        ));
    }
    let mut true_beliefs = Vec::with_capacity(latent.len());
    for (edge, op) in summary.edges.iter().zip(latent) {
        if !truth_keys.contains_key(&(edge.trustor, edge.trustee)) {
            return Err(Error::KeyMismatch(format!(
                "edge ({}, {}) not in truth",
                edge.trustor, edge.trustee
            )));
        }
        true_beliefs.push(expected_belief_raw(*op, truth.biases[edge.trustor].value()));
    }
    let estimated: Vec<f64> = summary
        .edges
        .iter()
        .map(|e| e.expected_belief_mean)
        .collect();
    Ok(RecoveryScore {
        spearman: spearman(&true_beliefs, &estimated)?,
        epsilon_error: (summary.epsilon_mean - truth.logit.epsilon()).abs(),
        theta_errors: summary
            .theta_means
            .iter()
            .zip(truth.logit.theta())
            .map(|(a, b)| (a - b).abs())
            .collect(),
        behavior_errors: summary
            .behaviors
            .iter()
            .zip(&truth.behaviors)
            .map(|(s, t)| {
                let t = t.as_array();
                [
                    (s[0] - t[0]).abs(),
                    (s[1] - t[1]).abs(),
                    (s[2] - t[2]).abs(),
                ]
            })
            .collect(),
        bias_errors: summary
            .biases
            .iter()
            .zip(&truth.biases)
            .map(|(s, t)| (s - t.value()).abs())
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generative::{complete_edges, forward_generate_network};
    use crate::inference::{summarize_posterior, EdgeSummary};
    use proptest::prelude::{prop, prop_assert, proptest};
    use rand::seq::SliceRandom;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn ess_short_and_constant() {
        assert!(matches!(
            effective_sample_size(&[1.0; 9]),
            Err(Error::ShortSeries { len: 9, .. })
        ));
        assert_eq!(effective_sample_size(&[2.5; 40]).unwrap(), 40.0);
    }

    #[test]
    fn ess_iid_uniform() {
        for seed in 0..5 {
            let mut rng = stream(seed, [0, 0, 0]);
            let xs: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
            let ess = effective_sample_size(&xs).unwrap();
            assert!((8_000.0..=12_000.0).contains(&ess), "ess {ess}");
        }
    }

    #[test]
    fn ess_ar1() {
        let mut rng = stream(3, [0, 0, 0]);
        let mut x = 0.0f64;
        let xs: Vec<f64> = (0..10_000)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                x = 0.9 * x + z;
                x
            })
            .collect();
        let ess = effective_sample_size(&xs).unwrap();
        let want = 10_000.0 * 0.1 / 1.9;
        assert!((ess - want).abs() <= 0.3 * want, "ess {ess}, want {want}");
    }

    #[test]
    fn spearman_basics() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(spearman(&x, &[10.0, 20.0, 30.0, 40.0]).unwrap(), 1.0);
        assert_eq!(spearman(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert_eq!(ranks(&[3.0, 1.0, 3.0]), vec![2.5, 1.0, 2.5]);
        assert!(spearman(&x, &[1.0; 4]).is_err());
        assert!(spearman(&x, &[1.0; 3]).is_err());
    }

    proptest! {
        #[test]
        fn spearman_monotone_invariance(xs in prop::collection::vec(-10.0f64..10.0, 3..40),
                                        ys in prop::collection::vec(-10.0f64..10.0, 40)) {
            let ys = &ys[..xs.len()];
            if let Ok(r) = spearman(&xs, ys) {
                let cubed: Vec<f64> = xs.iter().map(|x| x.powi(3)).collect();
                prop_assert!((spearman(&cubed, ys).unwrap() - r).abs() < 1e-12);
            }
        }
    }

    fn truth_and_summary(seed: u64) -> (GroundTruth, Vec<Opinion>, PosteriorSummary) {
        let logit = LogitParams::new(6.0, vec![1.5, -1.0, -3.5]).unwrap();
        let truth = GroundTruth::sample(6, 5, &complete_edges(6, 5), 10, logit, seed).unwrap();
        let (ratings, latent) = forward_generate_network(&truth, seed).unwrap();
        let state = GibbsState {
            opinions: latent.clone(),
            behaviors: truth.behaviors.clone(),
            biases: truth.biases.clone(),
            logit: truth.logit.clone(),
            iteration: 1,
        };
        let trace = Trace {
            samples: vec![state],
            config: SamplerConfig::default(),
        };
        let summary = summarize_posterior(&trace, &ratings).unwrap();
        (truth, latent, summary)
    }

    #[test]
    fn recovery_of_truth_is_perfect() {
        let (truth, latent, summary) = truth_and_summary(11);
        let score = recovery_score(&truth, &latent, &summary).unwrap();
        assert!((score.spearman - 1.0).abs() < 1e-12);
        assert_eq!(score.epsilon_error, 0.0);
        assert!(score.theta_errors.iter().all(|e| *e == 0.0));
        assert!(score.bias_errors.iter().all(|e| *e == 0.0));
        assert!(score.behavior_errors.iter().flatten().all(|e| *e == 0.0));
    }

    #[test]
    fn permuted_summary_scores_near_zero() {
        let mut total = 0.0;
        let trials = 200;
        for t in 0..trials {
            let (truth, latent, mut summary) = truth_and_summary(100 + t);
            let mut beliefs: Vec<f64> = summary
                .edges
                .iter()
                .map(|e| e.expected_belief_mean)
                .collect();
            beliefs.shuffle(&mut stream(t, [9, 9, 9]));
            for (e, b) in summary.edges.iter_mut().zip(beliefs) {
                e.expected_belief_mean = b;
            }
            total += recovery_score(&truth, &latent, &summary).unwrap().spearman;
        }
        // 30 edges: sd of one correlation ~0.19, of the mean ~0.013
        assert!((total / trials as f64).abs() < 0.06);
    }

    #[test]
    fn recovery_rejects_key_mismatch() {
        let (truth, latent, mut summary) = truth_and_summary(5);
        summary.edges[0] = EdgeSummary {
            trustee: 99,
            ..summary.edges[0].clone()
        };
        assert!(matches!(
            recovery_score(&truth, &latent, &summary),
            Err(Error::KeyMismatch(_))
        ));
        assert!(recovery_score(&truth, &latent[1..], &summary).is_err());
    }

    #[test]
    fn joint_test_needs_rounds() {
        let template = RatingMatrix::new(
            1,
            1,
            2,
            vec![crate::model::Rating {
                trustor: 0,
                trustee: 0,
                level: 1,
            }],
        )
        .unwrap();
        let r = geweke_joint_test(
            &SamplerConfig::default(),
            &template,
            &prior_state::<ChaCha8Rng>,
            0,
            false,
        );
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn prior_state_is_valid() {
        let template = RatingMatrix::new(
            2,
            2,
            3,
            complete_edges(2, 2)
                .into_iter()
                .map(|(i, j)| crate::model::Rating {
                    trustor: i,
                    trustee: j,
                    level: 1,
                })
                .collect(),
        )
        .unwrap();
        let config = SamplerConfig {
            lambda_max: 3,
            theta_grid: 5,
            ..SamplerConfig::default()
        };
        for s in 0..50 {
            let state = prior_state(&template, &config, &mut stream(s, [0, 0, 0])).unwrap();
            state.validate(&template, 3).unwrap();
            assert!(state.logit.theta()[0] > state.logit.theta()[1]);
        }
    }
}
