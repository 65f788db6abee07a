//! Forward simulation of the rating model: behavior -> evidence counts ->
//! expected belief -> ordinal rating.

use rand::Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Behavior, Bias, LogitParams, Opinion, Rating, RatingMatrix};
use crate::sampling::{draw_categorical, draw_dirichlet, draw_multinomial, stream};

/// Stream tags for the forward generator. Kept disjoint from the sampler's
/// stage tags.
const TAG_EDGE: u64 = 0x6765_6e00;
const TAG_PRIOR: u64 = 0x6765_6e01;
const TAG_SPARSITY: u64 = 0x6765_6e02;

/// Evidence count assigned to one edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeLambda {
    pub trustor: usize,
    pub trustee: usize,
    pub lambda: u32,
}

/// Generative parameters of a synthetic network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub behaviors: Vec<Behavior>,
    pub biases: Vec<Bias>,
    pub lambdas: Vec<EdgeLambda>,
    pub logit: LogitParams,
    pub lambda_max: u32,
}

impl GroundTruth {
    pub fn num_trustors(&self) -> usize {
        self.biases.len()
    }

    pub fn num_trustees(&self) -> usize {
        self.behaviors.len()
    }

    pub fn validate(&self) -> Result<()> {
        for e in &self.lambdas {
            if e.lambda == 0 || e.lambda > self.lambda_max {
                return Err(Error::Domain(format!(
                    "edge ({}, {}) has evidence count {} outside 1..={}",
                    e.trustor, e.trustee, e.lambda, self.lambda_max
                )));
            }
            if e.trustor >= self.num_trustors() || e.trustee >= self.num_trustees() {
                return Err(Error::Domain(format!(
                    "edge ({}, {}) outside {} x {}",
                    e.trustor,
                    e.trustee,
                    self.num_trustors(),
                    self.num_trustees()
                )));
            }
        }
        Ok(())
    }

    /// Random ground truth: behaviors from Dirichlet(1, 1, 1), biases uniform
    /// on [0, 1], evidence counts uniform on `1..=lambda_max` for every edge
    /// in `edges`. The logit link is supplied by the caller.
    pub fn sample(
        num_trustors: usize,
        num_trustees: usize,
        edges: &[(usize, usize)],
        lambda_max: u32,
        logit: LogitParams,
        seed: u64,
    ) -> Result<Self> {
        if lambda_max == 0 {
            return Err(Error::Config("lambda_max must be positive".into()));
        }
        let mut rng = stream(seed, [TAG_PRIOR, 0, 0]);
        let behaviors = (0..num_trustees)
            .map(|_| draw_dirichlet([1.0; 3], &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let biases = (0..num_trustors)
            .map(|_| Bias::new(rng.random::<f64>()))
            .collect::<Result<Vec<_>>>()?;
        let lambdas = edges
            .iter()
            .map(|&(trustor, trustee)| EdgeLambda {
                trustor,
                trustee,
                lambda: rng.random_range(1..=lambda_max),
            })
            .collect();
        let truth = Self {
            behaviors,
            biases,
            lambdas,
            logit,
            lambda_max,
        };
        truth.validate()?;
        Ok(truth)
    }
}

/// Every `(trustor, trustee)` pair.
pub fn complete_edges(num_trustors: usize, num_trustees: usize) -> Vec<(usize, usize)> {
    (0..num_trustors)
        .flat_map(|i| (0..num_trustees).map(move |j| (i, j)))
        .collect()
}

/// Each pair independently with probability `density`, in `(i, j)` order.
pub fn sample_edges(
    num_trustors: usize,
    num_trustees: usize,
    density: f64,
    seed: u64,
) -> Result<Vec<(usize, usize)>> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::Domain(format!(
            "edge density {density} outside [0, 1]"
        )));
    }
    Ok(complete_edges(num_trustors, num_trustees)
        .into_iter()
        .filter(|&(i, j)| {
            let u: f64 = stream(seed, [TAG_SPARSITY, i as u64, j as u64]).random();
            u < density
        })
        .collect())
}

/// Evidence counts for one edge, distributed `Mul(behavior, lambda)`.
pub fn forward_sample_opinion<R: Rng + ?Sized>(
    behavior: Behavior,
    lambda: u32,
    rng: &mut R,
) -> Result<Opinion> {
    if lambda == 0 {
        return Err(Error::Precondition(
            "evidence count must be at least 1".into(),
        ));
    }
    let [a, b, g] = draw_multinomial(behavior.as_array(), lambda, rng);
    Ok(Opinion::new(a, b, g))
}

/// Rating level drawn from the ordered logit at the opinion's expected belief.
pub fn forward_sample_rating<R: Rng + ?Sized>(
    op: Opinion,
    bias: Bias,
    logit: &LogitParams,
    rng: &mut R,
) -> Result<u32> {
    let x = op.expected_belief(bias)?;
    Ok(draw_categorical(&logit.pmf(x), rng) as u32 + 1)
}

/// Samples an opinion and then a rating for every edge of `truth`. Returns
/// the observed matrix and the latent opinions in the matrix's edge order.
///
/// Edge `(i, j)` draws from its own stream keyed by `(seed, i, j)`, so the
/// output does not depend on edge order or thread count.
pub fn forward_generate_network(
    truth: &GroundTruth,
    seed: u64,
) -> Result<(RatingMatrix, Vec<Opinion>)> {
    truth.validate()?;
    let draw = |e: &EdgeLambda| -> Result<(Rating, Opinion)> {
        let mut rng = stream(seed, [TAG_EDGE, e.trustor as u64, e.trustee as u64]);
        let op = forward_sample_opinion(truth.behaviors[e.trustee], e.lambda, &mut rng)?;
        let level = forward_sample_rating(op, truth.biases[e.trustor], &truth.logit, &mut rng)?;
        Ok((
            Rating {
                trustor: e.trustor,
                trustee: e.trustee,
                level,
            },
            op,
        ))
    };
    #[cfg(feature = "parallel")]
    let drawn: Vec<(Rating, Opinion)> =
        truth.lambdas.par_iter().map(draw).collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let drawn: Vec<(Rating, Opinion)> = truth.lambdas.iter().map(draw).collect::<Result<_>>()?;

    let matrix = RatingMatrix::new(
        truth.num_trustors(),
        truth.num_trustees(),
        truth.logit.levels(),
        drawn.iter().map(|(r, _)| *r).collect(),
    )?;
    let mut opinions = vec![Opinion::new(0, 0, 0); matrix.len()];
    for (r, op) in drawn {
        // edge_index exists: the matrix was built from these very entries
        let e = matrix
            .edge_index(r.trustor, r.trustee)
            .expect("edge present");
        opinions[e] = op;
    }
    Ok((matrix, opinions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn logit(eps: f64, theta: &[f64]) -> LogitParams {
        LogitParams::new(eps, theta.to_vec()).unwrap()
    }

    #[test]
    fn edge_density() {
        assert_eq!(sample_edges(4, 5, 1.0, 1).unwrap(), complete_edges(4, 5));
        assert!(sample_edges(4, 5, 0.0, 1).unwrap().is_empty());
        let half = sample_edges(100, 100, 0.5, 2).unwrap();
        assert!((half.len() as f64 - 5000.0).abs() < 200.0);
        assert_eq!(half, sample_edges(100, 100, 0.5, 2).unwrap());
        assert!(sample_edges(2, 2, 1.5, 0).is_err());
    }

    #[test]
    fn degenerate_behavior_is_deterministic() {
        let mut rng = stream(3, [0, 0, 0]);
        let b = Behavior::new(1.0, 0.0, 0.0).unwrap();
        for _ in 0..100 {
            assert_eq!(
                forward_sample_opinion(b, 5, &mut rng).unwrap(),
                Opinion::new(5, 0, 0)
            );
        }
        assert!(forward_sample_opinion(b, 0, &mut rng).is_err());
    }

    #[test]
    fn binary_frequency() {
        let mut rng = stream(11, [0, 0, 0]);
        let b = Behavior::new(0.5, 0.5, 0.0).unwrap();
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| forward_sample_opinion(b, 1, &mut rng).unwrap().alpha == 1)
            .count();
        assert_abs_diff_eq!(hits as f64 / n as f64, 0.5, epsilon = 0.002);
    }

    #[test]
    fn flat_two_level_rating() {
        let mut rng = stream(5, [0, 0, 0]);
        let p = logit(0.0, &[0.0]);
        let op = Opinion::new(2, 1, 1);
        let a = Bias::new(0.3).unwrap();
        let n = 100_000;
        let ones = (0..n)
            .filter(|_| forward_sample_rating(op, a, &p, &mut rng).unwrap() == 1)
            .count();
        assert_abs_diff_eq!(ones as f64 / n as f64, 0.5, epsilon = 0.005);
    }

    #[test]
    fn saturated_first_cutpoint_never_draws_level_one() {
        let mut rng = stream(6, [0, 0, 0]);
        let p = logit(1.0, &[50.0, 0.0, -1.0]);
        let a = Bias::new(0.5).unwrap();
        for _ in 0..10_000 {
            assert_ne!(
                forward_sample_rating(Opinion::new(0, 3, 0), a, &p, &mut rng).unwrap(),
                1
            );
        }
    }

    #[test]
    fn empty_network() {
        let truth = GroundTruth {
            behaviors: vec![Behavior::uniform()],
            biases: vec![Bias::new(0.5).unwrap()],
            lambdas: vec![],
            logit: logit(6.0, &[1.5, -1.0, -3.5]),
            lambda_max: 30,
        };
        let (m, ops) = forward_generate_network(&truth, 1).unwrap();
        assert!(m.is_empty());
        assert!(ops.is_empty());
    }

    #[test]
    fn complete_network_shape_and_determinism() {
        let edges = complete_edges(30, 20);
        let truth =
            GroundTruth::sample(30, 20, &edges, 30, logit(6.0, &[1.5, -1.0, -3.5]), 9).unwrap();
        let (m, ops) = forward_generate_network(&truth, 4).unwrap();
        assert_eq!(m.len(), 600);
        assert!(m.entries().iter().all(|r| (1..=4).contains(&r.level)));
        for (e, r) in m.entries().iter().enumerate() {
            let want = truth
                .lambdas
                .iter()
                .find(|l| (l.trustor, l.trustee) == (r.trustor, r.trustee))
                .unwrap()
                .lambda;
            assert_eq!(ops[e].lambda(), want);
        }
        let (m2, ops2) = forward_generate_network(&truth, 4).unwrap();
        assert_eq!(m, m2);
        assert_eq!(ops, ops2);
    }

    #[test]
    fn invalid_lambda_rejected() {
        let truth = GroundTruth {
            behaviors: vec![Behavior::uniform()],
            biases: vec![Bias::new(0.5).unwrap()],
            lambdas: vec![EdgeLambda {
                trustor: 0,
                trustee: 0,
                lambda: 31,
            }],
            logit: logit(1.0, &[0.0]),
            lambda_max: 30,
        };
        assert!(forward_generate_network(&truth, 0).is_err());
    }
}
