//! Monte Carlo checks of the densities and samplers against each other and
//! against statrs, plus the reflection symmetry of the joint.

use opinionforge::diagnostics::{prior_state, redraw_ratings};
use opinionforge::generative::complete_edges;
use opinionforge::inference::SamplerConfig;
use opinionforge::oracle::log_joint;
use opinionforge::sampling::{draw_dirichlet, draw_multinomial, stream};
use opinionforge::{
    dirichlet_log_pdf, enumerate_compositions, multinomial_log_pmf, Behavior, Bias, GibbsState,
    LogitParams, Opinion, Rating, RatingMatrix,
};
use proptest::prelude::{prop_assert, prop_assume, proptest, ProptestConfig};
use statrs::distribution::{Beta, ChiSquared, ContinuousCDF};

#[test]
fn dirichlet_density_integrates_to_one() {
    // E[pdf(U)] over U ~ Dir(1,1,1) equals the simplex area factor 2
    let mut rng = stream(5, [0, 0, 0]);
    let n = 400_000;
    let ops = [
        Opinion::new(1, 1, 1),
        Opinion::new(2, 3, 1),
        Opinion::new(3, 2, 2),
    ];
    let mut sums = [0.0; 3];
    for _ in 0..n {
        let u = draw_dirichlet([1.0; 3], &mut rng).unwrap();
        for (s, op) in sums.iter_mut().zip(ops) {
            *s += dirichlet_log_pdf(u, op).unwrap().exp();
        }
    }
    for (s, op) in sums.iter().zip(ops) {
        let integral = s / n as f64 / 2.0;
        assert!((integral - 1.0).abs() < 0.01, "{op:?}: {integral}");
    }
}

#[test]
fn dirichlet_marginals_pass_ks() {
    let n = 20_000;
    for (k, conc) in [[1.0, 1.0, 1.0], [2.0, 5.0, 1.0], [7.0, 1.0, 3.0]]
        .into_iter()
        .enumerate()
    {
        let mut rng = stream(6, [k as u64, 0, 0]);
        let mut b: Vec<f64> = (0..n)
            .map(|_| draw_dirichlet(conc, &mut rng).unwrap().b())
            .collect();
        b.sort_by(f64::total_cmp);
        let beta = Beta::new(conc[0], conc[1] + conc[2]).unwrap();
        let d = b
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let f = beta.cdf(*x);
                (f - i as f64 / n as f64)
                    .abs()
                    .max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        // 0.1% critical value
        assert!(d < 1.95 / (n as f64).sqrt(), "{conc:?}: D = {d}");
    }
}

#[test]
fn multinomial_sampler_matches_pmf() {
    let behavior = Behavior::new(0.5, 0.3, 0.2).unwrap();
    let lambda = 4;
    let support = enumerate_compositions(lambda);
    let mut counts = vec![0.0; support.len()];
    let n = 100_000;
    let mut rng = stream(7, [0, 0, 0]);
    for _ in 0..n {
        let [a, b, g] = draw_multinomial(behavior.as_array(), lambda, &mut rng);
        let k = support
            .iter()
            .position(|o| *o == Opinion::new(a, b, g))
            .unwrap();
        counts[k] += 1.0;
    }
    let stat: f64 = support
        .iter()
        .zip(&counts)
        .map(|(op, c)| {
            let expected = n as f64 * multinomial_log_pmf(*op, behavior).exp();
            (c - expected).powi(2) / expected
        })
        .sum();
    let p = 1.0
        - ChiSquared::new((support.len() - 1) as f64)
            .unwrap()
            .cdf(stat);
    assert!(p > 1e-3, "chi2 {stat}, p {p}");
}

fn reflect(state: &GibbsState) -> GibbsState {
    let eps = state.logit.epsilon();
    GibbsState {
        opinions: state
            .opinions
            .iter()
            .map(|o| Opinion::new(o.beta, o.alpha, o.gamma))
            .collect(),
        behaviors: state
            .behaviors
            .iter()
            .map(|b| Behavior::new(b.d(), b.b(), b.n()).unwrap())
            .collect(),
        biases: state
            .biases
            .iter()
            .map(|a| Bias::new(1.0 - a.value()).unwrap())
            .collect(),
        logit: LogitParams::new(-eps, state.logit.theta().iter().map(|t| t + eps).collect())
            .unwrap(),
        iteration: state.iteration,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Swapping belief with distrust, mirroring the biases and negating the
    // slope (with cutpoints shifted by it) leaves the joint unchanged, so the
    // sign of epsilon is only fixed by its support.
    #[test]
    fn joint_is_invariant_under_reflection(seed in 0u64..1_000_000, levels in 2u32..5) {
        let config = SamplerConfig {
            lambda_max: 6,
            epsilon_bounds: [-8.0, 8.0],
            theta_bounds: [-20.0, 20.0],
            ..SamplerConfig::default()
        };
        let template = RatingMatrix::new(
            3,
            2,
            levels,
            complete_edges(3, 2)
                .into_iter()
                .map(|(trustor, trustee)| Rating { trustor, trustee, level: 1 })
                .collect(),
        )
        .unwrap();
        let mut rng = stream(seed, [0, 0, 0]);
        let state = prior_state(&template, &config, &mut rng).unwrap();
        let ratings = redraw_ratings(&state, &template, &mut rng).unwrap();
        let mirrored = reflect(&state);
        prop_assume!(mirrored.logit.theta().iter().all(|t| t.abs() < 20.0));
        let (a, b) = (log_joint(&state, &ratings, &config), log_joint(&mirrored, &ratings, &config));
        prop_assert!(a.is_finite());
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{} vs {}", a, b);
    }
}
