//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes plain numbers and returns a JSON string, so the page
//! needs no extra glue beyond what `wasm-bindgen` generates. The `*_json`
//! functions hold the logic and are tested natively.

use opinionforge::diagnostics::recovery_score;
use opinionforge::generative::{forward_generate_network, sample_edges, GroundTruth};
use opinionforge::inference::{
    gibbs_run, opinion_conditional_pmf, summarize_posterior, SamplerConfig,
};
use opinionforge::{
    ordered_logit_pmf, Behavior, Bias, GibbsState, LogitParams, Opinion, Rating, RatingMatrix,
    Result,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn to_js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string(value)?)
}

#[derive(Serialize)]
struct Curves {
    x: Vec<f64>,
    /// `pmf[l][k]`: probability of level `l + 1` at `x[k]`.
    pmf: Vec<Vec<f64>>,
}

/// Rating probabilities of every level over `points` evenly spaced expected
/// beliefs in [0, 1].
pub fn logit_curves_json(epsilon: f64, theta: &[f64], points: usize) -> Result<String> {
    let params = LogitParams::new(epsilon, theta.to_vec())?;
    let points = points.clamp(2, 1000);
    let x: Vec<f64> = (0..points)
        .map(|k| k as f64 / (points - 1) as f64)
        .collect();
    let mut pmf = vec![Vec::with_capacity(points); params.levels() as usize];
    for &xk in &x {
        for (row, p) in pmf.iter_mut().zip(ordered_logit_pmf(xk, &params)?) {
            row.push(p);
        }
    }
    json(&Curves { x, pmf })
}

#[derive(Serialize)]
struct Composition {
    alpha: u32,
    beta: u32,
    gamma: u32,
    prob: f64,
}

/// Conditional distribution of one opinion with `lambda` pieces of evidence,
/// given the trustee's behavior, the trustor's bias and an observed rating.
#[allow(clippy::too_many_arguments)]
pub fn opinion_conditional_json(
    lambda: u32,
    belief: f64,
    distrust: f64,
    bias: f64,
    rating: u32,
    epsilon: f64,
    theta: &[f64],
) -> Result<String> {
    let logit = LogitParams::new(epsilon, theta.to_vec())?;
    let ratings = RatingMatrix::new(
        1,
        1,
        logit.levels(),
        vec![Rating {
            trustor: 0,
            trustee: 0,
            level: rating,
        }],
    )?;
    let state = GibbsState {
        opinions: vec![Opinion::new(lambda, 0, 0)],
        behaviors: vec![Behavior::new(belief, distrust, 1.0 - belief - distrust)?],
        biases: vec![Bias::new(bias)?],
        logit,
        iteration: 0,
    };
    let pmf = opinion_conditional_pmf(0, &state, &ratings)?;
    json(
        &pmf.into_iter()
            .map(|(o, prob)| Composition {
                alpha: o.alpha,
                beta: o.beta,
                gamma: o.gamma,
                prob,
            })
            .collect::<Vec<_>>(),
    )
}

#[derive(Serialize)]
struct EdgeResult {
    trustor: usize,
    trustee: usize,
    rating: u32,
    truth: f64,
    estimate: f64,
    ci90: [f64; 2],
}

#[derive(Serialize)]
struct Recovery {
    edges: Vec<EdgeResult>,
    spearman: f64,
    epsilon_true: f64,
    epsilon_mean: f64,
    theta_true: Vec<f64>,
    theta_means: Vec<f64>,
}

/// Draws a synthetic network, runs a short chain on its ratings and compares
/// the estimated expected beliefs with the true ones. The slope is searched
/// on `[0, 20]` because the joint is symmetric under flipping its sign.
#[allow(clippy::too_many_arguments)]
pub fn simulate_and_infer_json(
    trustors: usize,
    trustees: usize,
    density: f64,
    lambda_max: u32,
    epsilon: f64,
    theta: &[f64],
    iterations: u64,
    seed: u64,
) -> Result<String> {
    if trustors * trustees > 400 {
        return Err(opinionforge::Error::Config(
            "the demo is limited to 400 trustor-trustee pairs".into(),
        ));
    }
    let logit = LogitParams::new(epsilon, theta.to_vec())?;
    let edges = sample_edges(trustors, trustees, density, seed)?;
    let truth = GroundTruth::sample(trustors, trustees, &edges, lambda_max, logit, seed)?;
    let (ratings, latent) = forward_generate_network(&truth, seed)?;
    let config = SamplerConfig {
        iterations,
        burn_in: iterations / 4,
        seed,
        lambda_max,
        bias_grid: 51,
        epsilon_bounds: [0.0, 20.0],
        epsilon_grid: 101,
        theta_bounds: [-20.0, 20.0],
        theta_grid: 201,
        ..SamplerConfig::default()
    };
    let trace = gibbs_run(&ratings, &config)?;
    let summary = summarize_posterior(&trace, &ratings)?;
    let truth_beliefs: Vec<f64> = ratings
        .entries()
        .iter()
        .zip(&latent)
        .map(|(r, o)| o.expected_belief(truth.biases[r.trustor]))
        .collect::<Result<_>>()?;
    let rho = if ratings.len() >= 2 {
        recovery_score(&truth, &latent, &summary)?.spearman
    } else {
        f64::NAN
    };
    let edges = ratings
        .entries()
        .iter()
        .zip(truth_beliefs)
        .zip(&summary.edges)
        .map(|((r, t), s)| EdgeResult {
            trustor: r.trustor,
            trustee: r.trustee,
            rating: r.level,
            truth: t,
            estimate: s.expected_belief_mean,
            ci90: s.expected_belief_ci90,
        })
        .collect();
    json(&Recovery {
        edges,
        spearman: rho,
        epsilon_true: epsilon,
        epsilon_mean: summary.epsilon_mean,
        theta_true: theta.to_vec(),
        theta_means: summary.theta_means,
    })
}

#[wasm_bindgen]
pub fn logit_curves(
    epsilon: f64,
    theta: &[f64],
    points: usize,
) -> std::result::Result<String, JsError> {
    to_js(logit_curves_json(epsilon, theta, points))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn opinion_conditional(
    lambda: u32,
    belief: f64,
    distrust: f64,
    bias: f64,
    rating: u32,
    epsilon: f64,
    theta: &[f64],
) -> std::result::Result<String, JsError> {
    to_js(opinion_conditional_json(
        lambda, belief, distrust, bias, rating, epsilon, theta,
    ))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn simulate_and_infer(
    trustors: usize,
    trustees: usize,
    density: f64,
    lambda_max: u32,
    epsilon: f64,
    theta: &[f64],
    iterations: u32,
    seed: u32,
) -> std::result::Result<String, JsError> {
    to_js(simulate_and_infer_json(
        trustors,
        trustees,
        density,
        lambda_max,
        epsilon,
        theta,
        iterations as u64,
        seed as u64,
    ))
}
