//! Domain types and exact probability kernels.
//!
//! Every kernel here works in log space. Counts are integers, so the
//! multinomial coefficients use log-factorials, which stay finite for any
//! evidence count the sampler can reach.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Tolerance on `b + d + n = 1`.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// Evidence counts `(alpha, beta, gamma)` observed on one trustor -> trustee
/// edge: belief, distrust and neutral events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Opinion {
    pub alpha: u32,
    pub beta: u32,
    pub gamma: u32,
}

impl Opinion {
    pub const fn new(alpha: u32, beta: u32, gamma: u32) -> Self {
        Self { alpha, beta, gamma }
    }

    /// Total evidence count.
    pub const fn lambda(&self) -> u32 {
        self.alpha + self.beta + self.gamma
    }

    pub fn counts(&self) -> [u32; 3] {
        [self.alpha, self.beta, self.gamma]
    }

    /// `(alpha + a * gamma) / lambda`.
    pub fn expected_belief(&self, bias: Bias) -> Result<f64> {
        expected_belief(*self, bias)
    }
}

/// A trustee's behavior: a point `(b, d, n)` on the probability simplex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Behavior {
    b: f64,
    d: f64,
    n: f64,
}

impl Behavior {
    pub fn new(b: f64, d: f64, n: f64) -> Result<Self> {
        let ok = |x: f64| (0.0..=1.0).contains(&x);
        if !(ok(b) && ok(d) && ok(n)) {
            return Err(Error::Domain(format!(
                "behavior components must lie in [0, 1], got ({b}, {d}, {n})"
            )));
        }
        if (b + d + n - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::Domain(format!(
                "behavior components must sum to 1, got {}",
                b + d + n
            )));
        }
        Ok(Self { b, d, n })
    }

    /// Builds a behavior from nonnegative weights by normalizing them.
    pub fn from_weights(weights: [f64; 3]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if total.is_nan() || total <= 0.0 || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::Domain(format!(
                "cannot normalize weights {weights:?}"
            )));
        }
        let b = weights[0] / total;
        let d = weights[1] / total;
        // n absorbs the rounding so the triple sums to one.
        let n = (1.0 - b - d).max(0.0);
        Self::new(b, d, n)
    }

    pub fn uniform() -> Self {
        Self {
            b: 1.0 / 3.0,
            d: 1.0 / 3.0,
            n: 1.0 / 3.0,
        }
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.b, self.d, self.n]
    }
}

impl TryFrom<[f64; 3]> for Behavior {
    type Error = Error;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        Behavior::new(v[0], v[1], v[2])
    }
}

impl From<Behavior> for [f64; 3] {
    fn from(b: Behavior) -> Self {
        b.as_array()
    }
}

/// Fraction of neutral evidence a trustor counts as belief.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Bias(f64);

impl Bias {
    pub fn new(a: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&a) {
            Ok(Self(a))
        } else {
            Err(Error::Domain(format!("bias must lie in [0, 1], got {a}")))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Bias {
    type Error = Error;

    fn try_from(a: f64) -> Result<Self> {
        Bias::new(a)
    }
}

impl From<Bias> for f64 {
    fn from(b: Bias) -> Self {
        b.0
    }
}

/// Ordered logit link: slope `epsilon` and non-increasing cutpoints `theta`,
/// one per boundary between consecutive rating levels.
///
/// `P(y > l) = logistic(epsilon * x + theta[l - 1])` for `l = 1..L-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLogitParams", into = "RawLogitParams")]
pub struct LogitParams {
    epsilon: f64,
    theta: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawLogitParams {
    epsilon: f64,
    theta: Vec<f64>,
}

impl TryFrom<RawLogitParams> for LogitParams {
    type Error = Error;

    fn try_from(raw: RawLogitParams) -> Result<Self> {
        LogitParams::new(raw.epsilon, raw.theta)
    }
}

impl From<LogitParams> for RawLogitParams {
    fn from(p: LogitParams) -> Self {
        RawLogitParams {
            epsilon: p.epsilon,
            theta: p.theta,
        }
    }
}

impl LogitParams {
    pub fn new(epsilon: f64, theta: Vec<f64>) -> Result<Self> {
        if !epsilon.is_finite() {
            return Err(Error::Domain(format!(
                "epsilon must be finite, got {epsilon}"
            )));
        }
        check_cutpoints(&theta)?;
        Ok(Self { epsilon, theta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Number of rating levels `L`.
    pub fn levels(&self) -> u32 {
        self.theta.len() as u32 + 1
    }

    pub fn set_epsilon(&mut self, epsilon: f64) -> Result<()> {
        if !epsilon.is_finite() {
            return Err(Error::Domain(format!(
                "epsilon must be finite, got {epsilon}"
            )));
        }
        self.epsilon = epsilon;
        Ok(())
    }

    /// Replaces cutpoint `l` (1-based); the ordering must still hold.
    pub fn set_theta(&mut self, l: usize, value: f64) -> Result<()> {
        if l == 0 || l > self.theta.len() {
            return Err(Error::Domain(format!(
                "cutpoint index {l} outside 1..={}",
                self.theta.len()
            )));
        }
        let mut theta = self.theta.clone();
        theta[l - 1] = value;
        check_cutpoints(&theta)?;
        self.theta = theta;
        Ok(())
    }

    /// Distribution over levels `1..=L` at covariate `x`.
    pub fn pmf(&self, x: f64) -> Vec<f64> {
        ordered_logit_pmf_unchecked(x, self)
    }

    /// `log P(y = level | x)`, `level` in `1..=L`.
    pub fn log_prob(&self, x: f64, level: u32) -> f64 {
        level_log_prob(self.epsilon * x, &self.theta, level)
    }
}

fn check_cutpoints(theta: &[f64]) -> Result<()> {
    if theta.is_empty() {
        return Err(Error::InvalidCutpoints(
            "need at least one cutpoint (L >= 2)".into(),
        ));
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidCutpoints(format!(
            "non-finite cutpoint in {theta:?}"
        )));
    }
    if theta.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidCutpoints(format!(
            "cutpoints must be non-increasing, got {theta:?}"
        )));
    }
    Ok(())
}

/// One observed rating on edge `(trustor, trustee)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rating {
    pub trustor: usize,
    pub trustee: usize,
    pub level: u32,
}

/// Sparse matrix of ordinal ratings. Entries are kept sorted by
/// `(trustor, trustee)`; an edge's position in that order is its edge index,
/// which every per-edge latent vector shares.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingMatrix {
    num_trustors: usize,
    num_trustees: usize,
    levels: u32,
    entries: Vec<Rating>,
    by_trustor: Vec<Vec<usize>>,
    by_trustee: Vec<Vec<usize>>,
}

impl RatingMatrix {
    pub fn new(
        num_trustors: usize,
        num_trustees: usize,
        levels: u32,
        mut entries: Vec<Rating>,
    ) -> Result<Self> {
        if levels < 2 {
            return Err(Error::Domain(format!(
                "need at least 2 rating levels, got {levels}"
            )));
        }
        for r in &entries {
            if r.trustor >= num_trustors || r.trustee >= num_trustees {
                return Err(Error::Domain(format!(
                    "edge ({}, {}) outside {num_trustors} x {num_trustees}",
                    r.trustor, r.trustee
                )));
            }
            if r.level == 0 || r.level > levels {
                return Err(Error::Domain(format!(
                    "rating {} on edge ({}, {}) outside 1..={levels}",
                    r.level, r.trustor, r.trustee
                )));
            }
        }
        entries.sort_by_key(|r| (r.trustor, r.trustee));
        if let Some(w) = entries
            .windows(2)
            .find(|w| (w[0].trustor, w[0].trustee) == (w[1].trustor, w[1].trustee))
        {
            return Err(Error::Domain(format!(
                "duplicate edge ({}, {})",
                w[0].trustor, w[0].trustee
            )));
        }
        let mut by_trustor = vec![Vec::new(); num_trustors];
        let mut by_trustee = vec![Vec::new(); num_trustees];
        for (e, r) in entries.iter().enumerate() {
            by_trustor[r.trustor].push(e);
            by_trustee[r.trustee].push(e);
        }
        Ok(Self {
            num_trustors,
            num_trustees,
            levels,
            entries,
            by_trustor,
            by_trustee,
        })
    }

    pub fn num_trustors(&self) -> usize {
        self.num_trustors
    }

    pub fn num_trustees(&self) -> usize {
        self.num_trustees
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn entries(&self) -> &[Rating] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Edge indices of trustor `i`'s ratings.
    pub fn edges_from(&self, trustor: usize) -> &[usize] {
        &self.by_trustor[trustor]
    }

    /// Edge indices of ratings received by trustee `j`.
    pub fn edges_into(&self, trustee: usize) -> &[usize] {
        &self.by_trustee[trustee]
    }

    pub fn edge_index(&self, trustor: usize, trustee: usize) -> Option<usize> {
        self.entries
            .binary_search_by_key(&(trustor, trustee), |r| (r.trustor, r.trustee))
            .ok()
    }

    pub fn get(&self, trustor: usize, trustee: usize) -> Option<u32> {
        self.edge_index(trustor, trustee)
            .map(|e| self.entries[e].level)
    }

    /// Same edge set with new levels, in edge-index order.
    pub fn with_levels(&self, levels: &[u32]) -> Result<Self> {
        if levels.len() != self.entries.len() {
            return Err(Error::Domain(format!(
                "expected {} levels, got {}",
                self.entries.len(),
                levels.len()
            )));
        }
        if let Some(l) = levels.iter().find(|l| **l == 0 || **l > self.levels) {
            return Err(Error::Domain(format!(
                "rating {l} outside 1..={}",
                self.levels
            )));
        }
        let mut out = self.clone();
        for (r, l) in out.entries.iter_mut().zip(levels) {
            r.level = *l;
        }
        Ok(out)
    }
}

/// One full assignment of every latent variable.
///
/// `opinions[e]` belongs to edge `e` of the rating matrix the state was built
/// for; the evidence count of an edge is `opinions[e].lambda()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsState {
    pub opinions: Vec<Opinion>,
    pub behaviors: Vec<Behavior>,
    pub biases: Vec<Bias>,
    pub logit: LogitParams,
    pub iteration: u64,
}

impl GibbsState {
    /// Checks the shape against `ratings` and the evidence bound.
    pub fn validate(&self, ratings: &RatingMatrix, lambda_max: u32) -> Result<()> {
        if self.opinions.len() != ratings.len() {
            return Err(Error::Precondition(format!(
                "state has {} opinions for {} observed edges",
                self.opinions.len(),
                ratings.len()
            )));
        }
        if self.behaviors.len() != ratings.num_trustees() {
            return Err(Error::Precondition(format!(
                "state has {} behaviors for {} trustees",
                self.behaviors.len(),
                ratings.num_trustees()
            )));
        }
        if self.biases.len() != ratings.num_trustors() {
            return Err(Error::Precondition(format!(
                "state has {} biases for {} trustors",
                self.biases.len(),
                ratings.num_trustors()
            )));
        }
        if self.logit.levels() != ratings.levels() {
            return Err(Error::Precondition(format!(
                "logit has {} levels, ratings have {}",
                self.logit.levels(),
                ratings.levels()
            )));
        }
        if let Some(op) = self
            .opinions
            .iter()
            .find(|o| o.lambda() == 0 || o.lambda() > lambda_max)
        {
            return Err(Error::Precondition(format!(
                "opinion {op:?} has evidence count outside 1..={lambda_max}"
            )));
        }
        Ok(())
    }

    /// Expected belief of edge `e` under the state's bias of its trustor.
    pub fn expected_belief(&self, ratings: &RatingMatrix, e: usize) -> f64 {
        let trustor = ratings.entries()[e].trustor;
        expected_belief_raw(self.opinions[e], self.biases[trustor].value())
    }
}

/// `(alpha + a * gamma) / (alpha + beta + gamma)`.
pub fn expected_belief(op: Opinion, bias: Bias) -> Result<f64> {
    if op.lambda() == 0 {
        return Err(Error::DegenerateOpinion);
    }
    Ok(expected_belief_raw(op, bias.value()))
}

#[inline]
pub(crate) fn expected_belief_raw(op: Opinion, a: f64) -> f64 {
    (op.alpha as f64 + a * op.gamma as f64) / op.lambda() as f64
}

/// Standard logistic function.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(logistic(x))` without overflow or cancellation.
#[inline]
pub fn log_logistic(x: f64) -> f64 {
    if x > 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// `log P(y = level)` for linear predictor `eta = epsilon * x`.
///
/// Middle levels use `s(u) - s(v) = s(u) s(-v) (1 - exp(v - u))` with
/// `u = eta + theta[l-2] >= v = eta + theta[l-1]`, see [`middle_log_prob`].
#[inline]
pub(crate) fn level_log_prob(eta: f64, theta: &[f64], level: u32) -> f64 {
    let levels = theta.len() as u32 + 1;
    debug_assert!(level >= 1 && level <= levels);
    if level == 1 {
        log_logistic(-(eta + theta[0]))
    } else if level == levels {
        log_logistic(eta + theta[theta.len() - 1])
    } else {
        let u = eta + theta[level as usize - 2];
        let v = eta + theta[level as usize - 1];
        if u <= v {
            return f64::NEG_INFINITY;
        }
        middle_log_prob(u, v, (-(v - u).exp_m1()).ln())
    }
}

/// `log(s(u) - s(v))` for `u > v`, given `gap = log(1 - exp(v - u))`.
/// Both exponentials are taken of non-positive arguments.
#[inline]
pub(crate) fn middle_log_prob(u: f64, v: f64, gap: f64) -> f64 {
    if v >= 0.0 {
        // s(-v) - s(-u)
        gap - v - ((1.0 + (-v).exp()) * (1.0 + (-u).exp())).ln()
    } else if u <= 0.0 {
        gap + u - ((1.0 + u.exp()) * (1.0 + v.exp())).ln()
    } else {
        gap - ((1.0 + (-u).exp()) * (1.0 + v.exp())).ln()
    }
}

/// Distribution `[P(y = 1), ..., P(y = L)]` of the ordered logit model at `x`.
pub fn ordered_logit_pmf(x: f64, params: &LogitParams) -> Result<Vec<f64>> {
    check_cutpoints(params.theta())?;
    Ok(ordered_logit_pmf_unchecked(x, params))
}

fn ordered_logit_pmf_unchecked(x: f64, params: &LogitParams) -> Vec<f64> {
    let eta = params.epsilon() * x;
    (1..=params.levels())
        .map(|l| level_log_prob(eta, params.theta(), l).exp())
        .collect()
}

/// Log multinomial coefficient `lambda! / (alpha! beta! gamma!)`.
pub fn log_multinomial_coefficient(op: Opinion) -> f64 {
    ln_factorial(op.lambda() as u64)
        - ln_factorial(op.alpha as u64)
        - ln_factorial(op.beta as u64)
        - ln_factorial(op.gamma as u64)
}

/// `log Mul(op | behavior, op.lambda())`. A positive count on a zero-probability
/// category gives negative infinity.
pub fn multinomial_log_pmf(op: Opinion, behavior: Behavior) -> f64 {
    let term = |count: u32, p: f64| -> f64 {
        if count == 0 {
            0.0
        } else if p == 0.0 {
            f64::NEG_INFINITY
        } else {
            count as f64 * p.ln()
        }
    };
    let t = term(op.alpha, behavior.b) + term(op.beta, behavior.d) + term(op.gamma, behavior.n);
    if t == f64::NEG_INFINITY {
        return t;
    }
    log_multinomial_coefficient(op) + t
}

/// Log-density of `Dirichlet(alpha, beta, gamma)` at `behavior`. All three
/// counts must be at least 1.
pub fn dirichlet_log_pdf(behavior: Behavior, op: Opinion) -> Result<f64> {
    if op.alpha < 1 || op.beta < 1 || op.gamma < 1 {
        return Err(Error::Domain(format!(
            "Dirichlet parameters must be >= 1, got {op:?}"
        )));
    }
    Ok(dirichlet_log_pdf_real(
        behavior.as_array(),
        [op.alpha as f64, op.beta as f64, op.gamma as f64],
    ))
}

/// Dirichlet log-density for real concentration parameters (all >= 1).
pub(crate) fn dirichlet_log_pdf_real(x: [f64; 3], conc: [f64; 3]) -> f64 {
    let total: f64 = conc.iter().sum();
    let mut lp = ln_gamma(total) - conc.iter().map(|c| ln_gamma(*c)).sum::<f64>();
    for (xi, ci) in x.iter().zip(conc.iter()) {
        if *ci == 1.0 {
            continue;
        }
        if *xi == 0.0 {
            return f64::NEG_INFINITY;
        }
        lp += (ci - 1.0) * xi.ln();
    }
    lp
}

/// Every `(alpha, beta, gamma)` with `alpha + beta + gamma = lambda`, exactly
/// once, ordered by alpha descending then beta descending.
pub fn enumerate_compositions(lambda: u32) -> Vec<Opinion> {
    let mut out = Vec::with_capacity(composition_count(lambda));
    for alpha in (0..=lambda).rev() {
        for beta in (0..=lambda - alpha).rev() {
            out.push(Opinion::new(alpha, beta, lambda - alpha - beta));
        }
    }
    out
}

/// `(lambda + 1)(lambda + 2) / 2`.
pub fn composition_count(lambda: u32) -> usize {
    let l = lambda as usize;
    (l + 1) * (l + 2) / 2
}
