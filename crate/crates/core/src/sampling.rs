//! Random streams, bounded grids and categorical draws shared by the
//! generator, the Gibbs sampler and the diagnostics harness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Behavior;

/// Counter-based stream: the ChaCha key is the seed followed by three
/// counters, so every `(seed, counters)` tuple owns an independent stream and
/// the result never depends on scheduling.
pub fn stream(seed: u64, counters: [u64; 3]) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    for (k, c) in counters.iter().enumerate() {
        key[8 + 8 * k..16 + 8 * k].copy_from_slice(&c.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Uniform grid over `[lo, hi]` split into `cells` equal cells; the grid
/// points are the cell midpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub cells: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!(
                "grid bounds [{lo}, {hi}] are not a nonempty interval"
            )));
        }
        if cells == 0 {
            return Err(Error::Config("grid needs at least one cell".into()));
        }
        Ok(Self { lo, hi, cells })
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.cells as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        self.lo + (k as f64 + 0.5) * self.width()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.cells).map(|k| self.point(k)).collect()
    }

    /// Indices of grid points strictly inside `(lower, upper)`.
    pub fn indices_between(&self, lower: f64, upper: f64) -> std::ops::Range<usize> {
        let start = (0..self.cells)
            .find(|k| self.point(*k) > lower)
            .unwrap_or(self.cells);
        let end = (start..self.cells)
            .find(|k| self.point(*k) >= upper)
            .unwrap_or(self.cells);
        start..end
    }

    pub fn uniform_point<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.point(rng.random_range(0..self.cells))
    }
}

/// Normalizes log-weights into probabilities (log-sum-exp).
pub fn normalize_log_weights(log_weights: &[f64], what: &str) -> Result<Vec<f64>> {
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::ZeroNormalizer(what.to_string()));
    }
    let mut probs: Vec<f64> = log_weights.iter().map(|w| (w - max).exp()).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    Ok(probs)
}

/// Cumulative-sum inversion: returns the first index whose running sum
/// strictly exceeds one uniform draw on `[0, 1)`.
pub fn draw_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // u landed in the rounding slack above the final partial sum
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

pub fn draw_dirichlet<R: Rng + ?Sized>(conc: [f64; 3], rng: &mut R) -> Result<Behavior> {
    let mut w = [0.0; 3];
    for (wi, c) in w.iter_mut().zip(conc) {
        let g = Gamma::new(c, 1.0).map_err(|e| Error::Domain(format!("gamma({c}): {e}")))?;
        *wi = g.sample(rng);
    }
    Behavior::from_weights(w)
}

/// Multinomial draw of `lambda` events over three categories.
pub fn draw_multinomial<R: Rng + ?Sized>(probs: [f64; 3], lambda: u32, rng: &mut R) -> [u32; 3] {
    let mut counts = [0u32; 3];
    for _ in 0..lambda {
        counts[draw_categorical(&probs, rng)] += 1;
    }
    counts
}
