mod common;

use common::*;
use mvpareto::extremes::{maxima_ddf, minima_ddf, minima_mean, moschopoulos_pmf, MaximaLaw};
use mvpareto::risk::{cte_maxima, cte_minima, var_extreme, ExtremeTarget};
use proptest::prelude::*;

/// Density of `Ga(a1, b1) + Ga(a2, b2)` (scale parametrisation) by direct convolution.
fn convolution_density(a: [f64; 2], b: [f64; 2], x: f64) -> f64 {
    let ga = |s: f64, a: f64, b: f64| {
        if s <= 0.0 {
            0.0
        } else {
            ((a - 1.0) * s.ln() - s / b - a * b.ln() - libm::lgamma(a)).exp()
        }
    };
    integrate(|s| ga(s, a[0], b[0]) * ga(x - s, a[1], b[1]), 0.0, x, 1e-12)
}

#[test]
fn two_factor_mixture_matches_convolution() {
    let (a, b) = ([1.5, 2.5], [2.0, 0.7]);
    let rates = [1.0 / b[0], 1.0 / b[1]];
    let mix = moschopoulos_pmf(&a, &rates, 1e-13).unwrap();
    let total: f64 = mix.weights.iter().sum();
    assert!((total + mix.tail_mass - 1.0).abs() < 1e-12);
    for x in [0.3, 1.0, 2.5, 6.0, 15.0] {
        let series: f64 = mix
            .weights
            .iter()
            .enumerate()
            .map(|(k, w)| {
                let s = mix.base_shape + k as f64;
                w * ((s - 1.0) * f64::ln(x) - x * mix.scale + s * mix.scale.ln() - libm::lgamma(s))
                    .exp()
            })
            .sum();
        let oracle = convolution_density(a, b, x);
        assert!(
            rel_err(series, oracle) < 1e-8,
            "x = {x}: {series} vs {oracle}"
        );
    }
}

#[test]
fn minima_mean_matches_quadrature() {
    for (name, p) in study_portfolios() {
        let exact = minima_mean(&p, &[1, 2, 3]).unwrap();
        let oracle = integrate_tail(|x| minima_survival(&p, x), 0.0, 122.39, 1e-12);
        assert!(rel_err(exact, oracle) < 1e-8, "{name}");
    }
}

#[test]
fn maxima_mean_matches_quadrature() {
    for (name, p) in study_portfolios() {
        let exact = MaximaLaw::new(&p).unwrap().mean().unwrap();
        let oracle = integrate_tail(|x| maxima_survival(&p, x), 0.0, 122.39, 1e-12);
        assert!(rel_err(exact, oracle) < 1e-8, "{name}");
    }
}

#[test]
fn extreme_quantiles_invert_the_survival() {
    let p = &study_portfolios()[1].1;
    for q in [0.1, 0.5, 0.95, 0.999] {
        let v = var_extreme(p, &ExtremeTarget::Minima(vec![1, 2, 3]), q).unwrap();
        assert!((minima_ddf(p, &[1, 2, 3], v).unwrap() - (1.0 - q)).abs() < 1e-10);
        let v = var_extreme(p, &ExtremeTarget::Maxima, q).unwrap();
        assert!((maxima_ddf(p, v).unwrap() - (1.0 - q)).abs() < 1e-10);
    }
}

#[test]
fn tail_expectations_exceed_quantiles() {
    for (_, p) in study_portfolios() {
        for q in [0.0, 0.3, 0.9, 0.99] {
            let v = var_extreme(&p, &ExtremeTarget::Minima(vec![1, 2, 3]), q).unwrap();
            assert!(cte_minima(&p, &[1, 2, 3], q).unwrap() >= v);
            let v = var_extreme(&p, &ExtremeTarget::Maxima, q).unwrap();
            assert!(cte_maxima(&p, q).unwrap() >= v);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn subset_minima_agree_with_the_joint_law(seed in any::<u64>(), n in 2usize..=5, t in 0.0f64..20.0) {
        let mut rng = seeded(seed);
        let p = random_portfolio(&mut rng, n, (0.2, 3.0));
        let x = t * p.sigma()[0];
        let subset = [1, n];
        let mut pt = vec![0.0; n];
        pt[0] = x;
        pt[n - 1] = x;
        let joint = mvpareto::dist::joint_ddf(&p, &pt).unwrap();
        prop_assert!((minima_ddf(&p, &subset, x).unwrap() - joint).abs() < 1e-9);
    }

    #[test]
    fn maxima_survival_matches_inclusion_exclusion(seed in any::<u64>(), n in 2usize..=4, t in 0.0f64..20.0) {
        let mut rng = seeded(seed);
        let p = random_portfolio(&mut rng, n, (0.2, 3.0));
        let x = t * p.sigma()[0];
        prop_assert!((maxima_ddf(&p, x).unwrap() - maxima_survival(&p, x)).abs() < 1e-8);
    }
}
