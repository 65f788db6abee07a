//! Exact posterior computation on tiny discretized instances.
//!
//! The oracle enumerates the whole discrete latent space (evidence blocks,
//! bias grid, slope grid, ordered cutpoint tuples) and evaluates the joint
//! with the same kernels the sampler uses. Behaviors are either integrated
//! out in closed form (Dirichlet-multinomial, which is exact for the
//! continuous-behavior model the sampler targets) or enumerated on a
//! barycentric lattice of the simplex.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::inference::{GridPmf, SamplerConfig};
use crate::model::{
    composition_count, enumerate_compositions, expected_belief_raw, level_log_prob,
    log_multinomial_coefficient, multinomial_log_pmf, Behavior, GibbsState, Opinion, RatingMatrix,
};
use crate::sampling::{normalize_log_weights, Grid};

/// Guard against accidental blowup of the enumeration.
pub const MAX_JOINT_STATES: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub lambda_max: u32,
    pub bias_grid: usize,
    pub epsilon_bounds: [f64; 2],
    pub epsilon_grid: usize,
    pub theta_bounds: [f64; 2],
    pub theta_grid: usize,
    /// `None` integrates behaviors out analytically; `Some(k)` enumerates the
    /// simplex lattice with `k` subdivisions per edge.
    pub behavior_grid: Option<u32>,
}

impl OracleConfig {
    /// Oracle over the same supports as `config`'s sampler.
    pub fn matching(config: &SamplerConfig) -> Self {
        Self {
            lambda_max: config.lambda_max,
            bias_grid: config.bias_grid,
            epsilon_bounds: config.epsilon_bounds,
            epsilon_grid: config.epsilon_grid,
            theta_bounds: config.theta_bounds,
            theta_grid: config.theta_grid,
            behavior_grid: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(1..=4).contains(&self.lambda_max) {
            return fail(format!(
                "oracle lambda_max must lie in 1..=4, got {}",
                self.lambda_max
            ));
        }
        for (name, g) in [
            ("bias_grid", self.bias_grid),
            ("epsilon_grid", self.epsilon_grid),
            ("theta_grid", self.theta_grid),
        ] {
            if !(1..=11).contains(&g) {
                return fail(format!("oracle {name} must lie in 1..=11, got {g}"));
            }
        }
        if let Some(k) = self.behavior_grid {
            if !(1..=10).contains(&k) {
                return fail(format!("oracle behavior_grid must lie in 1..=10, got {k}"));
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
}

/// Loop nesting of the enumeration. The results agree up to rounding; the
/// two orders exist so that agreement can be checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnumerationOrder {
    #[default]
    OpinionsOuter,
    OpinionsInner,
}

/// Points `(p, q, k - p - q) / k` of the simplex lattice, `p` descending then
/// `q` descending.
pub fn simplex_lattice(subdivisions: u32) -> Vec<Behavior> {
    enumerate_compositions(subdivisions)
        .into_iter()
        .map(|c| {
            Behavior::from_weights(c.counts().map(f64::from)).expect("lattice point on simplex")
        })
        .collect()
}

/// Strictly decreasing index tuples of length `len` over `0..cells`, in
/// lexicographic order.
fn decreasing_tuples(cells: usize, len: usize) -> Vec<Vec<usize>> {
    fn rec(cells: usize, len: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == len {
            out.push(prefix.clone());
            return;
        }
        let below = prefix.last().copied().unwrap_or(cells);
        for k in (0..below).rev() {
            prefix.push(k);
            rec(cells, len, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(cells, len, &mut Vec::new(), &mut out);
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Exact marginals for one edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeMarginal {
    pub trustor: usize,
    pub trustee: usize,
    /// Every `(lambda, omega)` block: compositions of 1, then of 2, and so on.
    pub support: Vec<Opinion>,
    pub probs: Vec<f64>,
    /// `P(lambda = k)` for `k = 1..=lambda_max`.
    pub lambda_probs: Vec<f64>,
    pub expected_belief_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactPosterior {
    pub edges: Vec<EdgeMarginal>,
    pub biases: Vec<GridPmf>,
    pub epsilon: GridPmf,
    /// One marginal per cutpoint, over the full theta grid.
    pub theta: Vec<GridPmf>,
    pub behavior_means: Vec<[f64; 3]>,
    /// Log of the unnormalized total mass, constant prior factors omitted.
    pub log_mass: f64,
    /// Total probability after normalization; 1 up to rounding.
    pub total_probability: f64,
    pub joint_states: f64,
}

struct Space<'a> {
    ratings: &'a RatingMatrix,
    blocks: Vec<Opinion>,
    bias_points: Vec<f64>,
    eps_points: Vec<f64>,
    theta_tuples: Vec<Vec<f64>>,
    theta_index_tuples: Vec<Vec<usize>>,
    lattice: Option<Vec<Behavior>>,
    /// Digit kinds in nesting order, outermost first.
    digits: Vec<Digit>,
}

#[derive(Debug, Clone, Copy)]
enum Digit {
    Edge(usize),
    Trustor(usize),
    Epsilon,
    Theta,
    Trustee(usize),
}

impl Space<'_> {
    fn radix(&self, d: Digit) -> usize {
        match d {
            Digit::Edge(_) => self.blocks.len(),
            Digit::Trustor(_) => self.bias_points.len(),
            Digit::Epsilon => self.eps_points.len(),
            Digit::Theta => self.theta_tuples.len(),
            Digit::Trustee(_) => self.lattice.as_ref().map_or(1, |l| l.len()),
        }
    }

    /// Log joint of one configuration, decoded from digit values.
    fn log_joint(&self, cfg: &Config) -> f64 {
        let r = self.ratings;
        let eps = self.eps_points[cfg.epsilon];
        let theta = &self.theta_tuples[cfg.theta];
        let mut lp = 0.0;
        for (e, rating) in r.entries().iter().enumerate() {
            let op = self.blocks[cfg.edges[e]];
            let x = expected_belief_raw(op, self.bias_points[cfg.trustors[rating.trustor]]);
            lp += level_log_prob(eps * x, theta, rating.level);
        }
        match &self.lattice {
            Some(points) => {
                for (e, rating) in r.entries().iter().enumerate() {
                    let b = points[cfg.trustees[rating.trustee]];
                    lp += multinomial_log_pmf(self.blocks[cfg.edges[e]], b);
                }
            }
            None => {
                for j in 0..r.num_trustees() {
                    let into = r.edges_into(j);
                    if into.is_empty() {
                        continue;
                    }
                    let mut sums = [0.0f64; 3];
                    for &e in into {
                        let op = self.blocks[cfg.edges[e]];
                        lp += log_multinomial_coefficient(op);
                        for (s, c) in sums.iter_mut().zip(op.counts()) {
                            *s += c as f64;
                        }
                    }
                    // Dirichlet(1,1,1) prior integrated against the counts
                    lp += ln_gamma(3.0) + sums.iter().map(|s| ln_gamma(1.0 + s)).sum::<f64>()
                        - ln_gamma(3.0 + sums.iter().sum::<f64>());
                }
            }
        }
        lp
    }
}

#[derive(Clone)]
struct Config {
    edges: Vec<usize>,
    trustors: Vec<usize>,
    trustees: Vec<usize>,
    epsilon: usize,
    theta: usize,
}

impl Config {
    fn set(&mut self, d: Digit, v: usize) {
        match d {
            Digit::Edge(e) => self.edges[e] = v,
            Digit::Trustor(i) => self.trustors[i] = v,
            Digit::Epsilon => self.epsilon = v,
            Digit::Theta => self.theta = v,
            Digit::Trustee(j) => self.trustees[j] = v,
        }
    }
}

/// Plain accumulators for one shard of the enumeration.
#[derive(Clone)]
struct Acc {
    total: f64,
    edges: Vec<Vec<f64>>,
    edge_belief: Vec<f64>,
    biases: Vec<Vec<f64>>,
    epsilon: Vec<f64>,
    theta: Vec<f64>,
    behaviors: Vec<[f64; 3]>,
}

impl Acc {
    fn new(space: &Space<'_>) -> Self {
        let r = space.ratings;
        Self {
            total: 0.0,
            edges: vec![vec![0.0; space.blocks.len()]; r.len()],
            edge_belief: vec![0.0; r.len()],
            biases: vec![vec![0.0; space.bias_points.len()]; r.num_trustors()],
            epsilon: vec![0.0; space.eps_points.len()],
            theta: vec![0.0; space.theta_tuples.len()],
            behaviors: vec![[0.0; 3]; r.num_trustees()],
        }
    }

    fn add(&mut self, space: &Space<'_>, cfg: &Config, w: f64) {
        let r = space.ratings;
        self.total += w;
        for (e, rating) in r.entries().iter().enumerate() {
            let op = space.blocks[cfg.edges[e]];
            self.edges[e][cfg.edges[e]] += w;
            self.edge_belief[e] +=
                w * expected_belief_raw(op, space.bias_points[cfg.trustors[rating.trustor]]);
        }
        for (i, acc) in self.biases.iter_mut().enumerate() {
            acc[cfg.trustors[i]] += w;
        }
        self.epsilon[cfg.epsilon] += w;
        self.theta[cfg.theta] += w;
        for j in 0..r.num_trustees() {
            let mean = match &space.lattice {
                Some(points) => points[cfg.trustees[j]].as_array(),
                None => {
                    // posterior mean of Dirichlet(1 + sums)
                    let mut conc = [1.0f64; 3];
                    for &e in r.edges_into(j) {
                        for (c, n) in conc.iter_mut().zip(space.blocks[cfg.edges[e]].counts()) {
                            *c += n as f64;
                        }
                    }
                    let t: f64 = conc.iter().sum();
                    conc.map(|c| c / t)
                }
            };
            for (a, m) in self.behaviors[j].iter_mut().zip(mean) {
                *a += w * m;
            }
        }
    }

    fn merge(&mut self, other: &Acc) {
        self.total += other.total;
        let add = |a: &mut [f64], b: &[f64]| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        for (a, b) in self.edges.iter_mut().zip(&other.edges) {
            add(a, b);
        }
        add(&mut self.edge_belief, &other.edge_belief);
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            add(a, b);
        }
        add(&mut self.epsilon, &other.epsilon);
        add(&mut self.theta, &other.theta);
        for (a, b) in self.behaviors.iter_mut().zip(&other.behaviors) {
            add(a, b);
        }
    }
}

/// Visits every configuration whose outermost digit equals `outer`.
fn visit_shard(space: &Space<'_>, outer: usize, mut f: impl FnMut(&Config)) {
    let r = space.ratings;
    let mut cfg = Config {
        edges: vec![0; r.len()],
        trustors: vec![0; r.num_trustors()],
        trustees: vec![0; r.num_trustees()],
        epsilon: 0,
        theta: 0,
    };
    let digits = &space.digits;
    cfg.set(digits[0], outer);
    let radices: Vec<usize> = digits.iter().map(|d| space.radix(*d)).collect();
    let mut values = vec![0usize; digits.len()];
    values[0] = outer;
    loop {
        f(&cfg);
        // odometer over digits[1..], last digit fastest
        let mut k = digits.len();
        loop {
            if k == 1 {
                return;
            }
            k -= 1;
            values[k] += 1;
            if values[k] < radices[k] {
                cfg.set(digits[k], values[k]);
                break;
            }
            values[k] = 0;
            cfg.set(digits[k], 0);
        }
    }
}

fn build_space<'a>(
    ratings: &'a RatingMatrix,
    config: &OracleConfig,
    order: EnumerationOrder,
) -> Result<Space<'a>> {
    config.validate()?;
    let cutpoints = ratings.levels() as usize - 1;
    let theta_grid = config.theta_grid()?;
    let theta_index_tuples = decreasing_tuples(theta_grid.cells, cutpoints);
    if theta_index_tuples.is_empty() {
        return Err(Error::Config(format!(
            "theta grid of {} points cannot hold {cutpoints} distinct cutpoints",
            theta_grid.cells
        )));
    }
    let theta_tuples = theta_index_tuples
        .iter()
        .map(|t| t.iter().map(|k| theta_grid.point(*k)).collect())
        .collect();
    let blocks: Vec<Opinion> = (1..=config.lambda_max)
        .flat_map(enumerate_compositions)
        .collect();
    let lattice = config.behavior_grid.map(simplex_lattice);
    let opinions = (0..ratings.len()).map(Digit::Edge);
    let trustors = (0..ratings.num_trustors()).map(Digit::Trustor);
    let trustees = (0..ratings.num_trustees()).map(Digit::Trustee);
    let mut digits: Vec<Digit> = match order {
        EnumerationOrder::OpinionsOuter => opinions
            .chain(trustors)
            .chain([Digit::Epsilon, Digit::Theta])
            .chain(trustees)
            .collect(),
        EnumerationOrder::OpinionsInner => [Digit::Epsilon, Digit::Theta]
            .into_iter()
            .chain(trustors)
            .chain(trustees)
            .chain(opinions)
            .collect(),
    };
    if lattice.is_none() {
        digits.retain(|d| !matches!(d, Digit::Trustee(_)));
    }
    Ok(Space {
        ratings,
        blocks,
        bias_points: config.bias_grid().points(),
        eps_points: config.epsilon_grid()?.points(),
        theta_tuples,
        theta_index_tuples,
        lattice,
        digits,
    })
}

/// Number of joint states `exact_posterior` would enumerate.
pub fn joint_state_count(ratings: &RatingMatrix, config: &OracleConfig) -> f64 {
    let blocks: usize = (1..=config.lambda_max).map(composition_count).sum();
    let mut n = (blocks as f64).powi(ratings.len() as i32)
        * (config.bias_grid as f64).powi(ratings.num_trustors() as i32)
        * config.epsilon_grid as f64
        * binomial(config.theta_grid, ratings.levels() as usize - 1);
    if let Some(k) = config.behavior_grid {
        n *= (composition_count(k) as f64).powi(ratings.num_trustees() as i32);
    }
    n
}

pub fn exact_posterior(ratings: &RatingMatrix, config: &OracleConfig) -> Result<ExactPosterior> {
    exact_posterior_with_order(ratings, config, EnumerationOrder::default())
}

pub fn exact_posterior_with_order(
    ratings: &RatingMatrix,
    config: &OracleConfig,
    order: EnumerationOrder,
) -> Result<ExactPosterior> {
    if ratings.is_empty() {
        return Err(Error::Precondition("rating matrix has no entries".into()));
    }
    let states = joint_state_count(ratings, config);
    if states > MAX_JOINT_STATES {
        return Err(Error::InstanceTooLarge {
            states,
            limit: MAX_JOINT_STATES,
        });
    }
    let space = build_space(ratings, config, order)?;
    let shards: Vec<usize> = (0..space.radix(space.digits[0])).collect();

    // pass 1: shard maxima, merged in shard order
    let shard_max = |s: &usize| {
        let mut m = f64::NEG_INFINITY;
        visit_shard(&space, *s, |cfg| m = m.max(space.log_joint(cfg)));
        m
    };
    #[cfg(feature = "parallel")]
    let maxima: Vec<f64> = shards.par_iter().map(shard_max).collect();
    #[cfg(not(feature = "parallel"))]
    let maxima: Vec<f64> = shards.iter().map(shard_max).collect();
    let max = maxima.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::ZeroNormalizer("exact joint".into()));
    }

    // pass 2: weights relative to the global maximum
    let shard_acc = |s: &usize| {
        let mut acc = Acc::new(&space);
        visit_shard(&space, *s, |cfg| {
            let w = (space.log_joint(cfg) - max).exp();
            if w > 0.0 {
                acc.add(&space, cfg, w);
            }
        });
        acc
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<Acc> = shards.par_iter().map(shard_acc).collect();
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Acc> = shards.iter().map(shard_acc).collect();
    let mut acc = Acc::new(&space);
    for p in &parts {
        acc.merge(p);
    }

    let z = acc.total;
    let norm = |v: &[f64]| v.iter().map(|x| x / z).collect::<Vec<f64>>();
    let edges = ratings
        .entries()
        .iter()
        .enumerate()
        .map(|(e, r)| {
            let probs = norm(&acc.edges[e]);
            let mut lambda_probs = vec![0.0; config.lambda_max as usize];
            for (op, p) in space.blocks.iter().zip(&probs) {
                lambda_probs[op.lambda() as usize - 1] += p;
            }
            EdgeMarginal {
                trustor: r.trustor,
                trustee: r.trustee,
                support: space.blocks.clone(),
                probs,
                lambda_probs,
                expected_belief_mean: acc.edge_belief[e] / z,
            }
        })
        .collect();
    let theta_grid = config.theta_grid()?;
    let theta_points = theta_grid.points();
    let theta = (0..ratings.levels() as usize - 1)
        .map(|l| {
            let mut probs = vec![0.0; theta_grid.cells];
            for (t, w) in space.theta_index_tuples.iter().zip(&acc.theta) {
                probs[t[l]] += w / z;
            }
            GridPmf {
                points: theta_points.clone(),
                probs,
            }
        })
        .collect();
    let total_probability = norm(&acc.epsilon).iter().sum();
    Ok(ExactPosterior {
        edges,
        biases: acc
            .biases
            .iter()
            .map(|b| GridPmf {
                points: space.bias_points.clone(),
                probs: norm(b),
            })
            .collect(),
        epsilon: GridPmf {
            points: space.eps_points.clone(),
            probs: norm(&acc.epsilon),
        },
        theta,
        behavior_means: acc.behaviors.iter().map(|b| b.map(|x| x / z)).collect(),
        log_mass: max + z.ln(),
        total_probability,
        joint_states: states,
    })
}

/// Log of the full joint `P(R, O, a, B, lambda, theta, epsilon)` at `state`
/// with explicit evidence counts `lambdas`, under the flat priors of `config`.
/// An opinion whose counts do not add up to its `lambda` has no mass.
pub fn log_joint_with_lambdas(
    state: &GibbsState,
    lambdas: &[u32],
    ratings: &RatingMatrix,
    config: &SamplerConfig,
) -> f64 {
    let mut lp = 0.0;
    for (e, r) in ratings.entries().iter().enumerate() {
        let op = state.opinions[e];
        let lambda = lambdas[e];
        if lambda == 0 || lambda > config.lambda_max {
            return f64::NEG_INFINITY;
        }
        lp -= (config.lambda_max as f64).ln();
        if op.lambda() != lambda {
            return f64::NEG_INFINITY;
        }
        lp += multinomial_log_pmf(op, state.behaviors[r.trustee]);
        let x = expected_belief_raw(op, state.biases[r.trustor].value());
        lp += state.logit.log_prob(x, r.level);
    }
    // Dirichlet(1,1,1) density is 2 everywhere on the simplex
    lp += state.behaviors.len() as f64 * 2f64.ln();
    let [lo, hi] = config.epsilon_bounds;
    let eps = state.logit.epsilon();
    if !(lo..=hi).contains(&eps) {
        return f64::NEG_INFINITY;
    }
    lp -= (hi - lo).ln();
    let [tlo, thi] = config.theta_bounds;
    let theta = state.logit.theta();
    if theta.iter().any(|t| !(tlo..=thi).contains(t)) || theta.windows(2).any(|w| w[0] <= w[1]) {
        return f64::NEG_INFINITY;
    }
    lp
}

pub fn log_joint(state: &GibbsState, ratings: &RatingMatrix, config: &SamplerConfig) -> f64 {
    let lambdas: Vec<u32> = state.opinions.iter().map(|o| o.lambda()).collect();
    log_joint_with_lambdas(state, &lambdas, ratings, config)
}

/// A latent block whose full conditional the oracle can tabulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Latent {
    /// `omega_e` at its current evidence count; support in composition order.
    Opinion(usize),
    /// `(lambda_e, omega_e)` jointly; support as [`EdgeMarginal::support`].
    EvidenceBlock(usize),
    /// `lambda_e` alone with `omega_e`'s counts held fixed; support `1..=lambda_max`.
    EvidenceCount(usize),
    /// Trustee behavior on the simplex lattice with `subdivisions`.
    Behavior {
        trustee: usize,
        subdivisions: u32,
    },
    Bias(usize),
    Epsilon,
    /// Cutpoint `l` (1-based) over the full theta grid.
    Theta(usize),
}

/// Full conditional of `target` obtained by evaluating the joint at every
/// support point with all other latents clamped, then normalizing.
pub fn conditional_pmf_oracle(
    target: Latent,
    state: &GibbsState,
    ratings: &RatingMatrix,
    config: &SamplerConfig,
) -> Result<Vec<f64>> {
    let mut s = state.clone();
    let lambdas: Vec<u32> = state.opinions.iter().map(|o| o.lambda()).collect();
    let eval = |s: &GibbsState| log_joint(s, ratings, config);
    let lw: Vec<f64> = match target {
        Latent::Opinion(e) => enumerate_compositions(lambdas[e])
            .into_iter()
            .map(|op| {
                s.opinions[e] = op;
                eval(&s)
            })
            .collect(),
        Latent::EvidenceBlock(e) => (1..=config.lambda_max)
            .flat_map(enumerate_compositions)
            .map(|op| {
                s.opinions[e] = op;
                eval(&s)
            })
            .collect(),
        Latent::EvidenceCount(e) => (1..=config.lambda_max)
            .map(|lambda| {
                let mut l = lambdas.clone();
                l[e] = lambda;
                log_joint_with_lambdas(&s, &l, ratings, config)
            })
            .collect(),
        Latent::Behavior {
            trustee,
            subdivisions,
        } => simplex_lattice(subdivisions)
            .into_iter()
            .map(|b| {
                s.behaviors[trustee] = b;
                eval(&s)
            })
            .collect(),
        Latent::Bias(i) => config
            .bias_grid()
            .points()
            .into_iter()
            .map(|a| {
                s.biases[i] = crate::model::Bias::new(a).expect("grid point in [0, 1]");
                eval(&s)
            })
            .collect(),
        Latent::Epsilon => config
            .epsilon_grid()?
            .points()
            .into_iter()
            .map(|eps| {
                s.logit.set_epsilon(eps).expect("finite grid point");
                eval(&s)
            })
            .collect(),
        Latent::Theta(l) => {
            if l == 0 || l >= ratings.levels() as usize {
                return Err(Error::Precondition(format!(
                    "cutpoint index {l} out of range"
                )));
            }
            let base = state.logit.theta().to_vec();
            config
                .theta_grid()?
                .points()
                .into_iter()
                .map(|t| {
                    let mut theta = base.clone();
                    theta[l - 1] = t;
                    // violating tuples are not valid parameters: no mass
                    if theta.windows(2).any(|w| w[0] <= w[1]) {
                        return f64::NEG_INFINITY;
                    }
                    s.logit = crate::model::LogitParams::new(state.logit.epsilon(), theta)
                        .expect("ordered cutpoints");
                    eval(&s)
                })
                .collect()
        }
    };
    normalize_log_weights(&lw, &format!("oracle conditional {target:?}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Rating;
    use approx::assert_abs_diff_eq;

    fn tiny(levels: u32, entries: &[(usize, usize, u32)]) -> RatingMatrix {
        let m = entries.iter().map(|e| e.0).max().unwrap() + 1;
        let n = entries.iter().map(|e| e.1).max().unwrap() + 1;
        RatingMatrix::new(
            m,
            n,
            levels,
            entries
                .iter()
                .map(|&(i, j, l)| Rating {
                    trustor: i,
                    trustee: j,
                    level: l,
                })
                .collect(),
        )
        .unwrap()
    }

    fn config(lambda_max: u32, g: usize) -> OracleConfig {
        OracleConfig {
            lambda_max,
            bias_grid: g,
            epsilon_bounds: [-3.0, 9.0],
            epsilon_grid: g,
            theta_bounds: [-6.0, 6.0],
            theta_grid: g,
            behavior_grid: None,
        }
    }

    #[test]
    fn tuples_and_lattice() {
        assert_eq!(decreasing_tuples(4, 2).len(), 6);
        assert_eq!(decreasing_tuples(4, 2)[0], vec![3, 2]);
        assert!(decreasing_tuples(4, 2).iter().all(|t| t[0] > t[1]));
        assert_eq!(decreasing_tuples(2, 3).len(), 0);
        assert_eq!(binomial(11, 3), 165.0);
        let l = simplex_lattice(10);
        assert_eq!(l.len(), 66);
        assert_eq!(l[0].as_array(), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn guards_large_instances() {
        let r = tiny(
            4,
            &[
                (0, 0, 1),
                (0, 1, 2),
                (1, 0, 3),
                (1, 1, 4),
                (2, 0, 1),
                (2, 1, 1),
            ],
        );
        let c = OracleConfig {
            behavior_grid: Some(10),
            ..config(4, 11)
        };
        assert!(matches!(
            exact_posterior(&r, &c),
            Err(Error::InstanceTooLarge { .. })
        ));
        assert!(exact_posterior(
            &r,
            &OracleConfig {
                lambda_max: 5,
                ..config(2, 3)
            }
        )
        .is_err());
    }

    #[test]
    fn flat_link_gives_prior_mixture() {
        // one edge, slope pinned at 0: ratings carry no information
        let r = tiny(2, &[(0, 0, 2)]);
        let c = OracleConfig {
            epsilon_bounds: [-1.0, 1.0],
            epsilon_grid: 1,
            ..config(2, 3)
        };
        let post = exact_posterior(&r, &c).unwrap();
        // P(lambda) uniform; given lambda, omega ~ Dirichlet-multinomial(1,1,1),
        // which is uniform over compositions.
        let e = &post.edges[0];
        for (op, p) in e.support.iter().zip(&e.probs) {
            let want = 0.5 / composition_count(op.lambda()) as f64;
            assert_abs_diff_eq!(*p, want, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(post.total_probability, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn loop_orders_agree() {
        let r = tiny(2, &[(0, 0, 2)]);
        let c = config(1, 3);
        let a = exact_posterior_with_order(&r, &c, EnumerationOrder::OpinionsOuter).unwrap();
        let b = exact_posterior_with_order(&r, &c, EnumerationOrder::OpinionsInner).unwrap();
        for (x, y) in a.edges[0].probs.iter().zip(&b.edges[0].probs) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-14);
        }
        for (x, y) in a.epsilon.probs.iter().zip(&b.epsilon.probs) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-14);
        }
        for (x, y) in a.biases[0].probs.iter().zip(&b.biases[0].probs) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-14);
        }
    }

    #[test]
    fn lattice_orders_agree_and_normalize() {
        let r = tiny(2, &[(0, 0, 2), (1, 0, 1)]);
        let c = OracleConfig {
            behavior_grid: Some(4),
            ..config(2, 3)
        };
        let a = exact_posterior_with_order(&r, &c, EnumerationOrder::OpinionsOuter).unwrap();
        let b = exact_posterior_with_order(&r, &c, EnumerationOrder::OpinionsInner).unwrap();
        assert_abs_diff_eq!(a.total_probability, 1.0, epsilon = 1e-9);
        for (x, y) in a.behavior_means[0].iter().zip(&b.behavior_means[0]) {
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-13);
        }
    }

    #[test]
    fn theta_marginals_respect_order() {
        let r = tiny(3, &[(0, 0, 1), (0, 1, 3)]);
        let post = exact_posterior(&r, &config(2, 5)).unwrap();
        // theta_1 > theta_2 strictly: theta_1 never on the lowest point,
        // theta_2 never on the highest
        assert_eq!(post.theta[0].probs[0], 0.0);
        assert_eq!(post.theta[1].probs[4], 0.0);
        for t in &post.theta {
            assert_abs_diff_eq!(t.probs.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }
}
