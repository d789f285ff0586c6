mod common;

use common::*;
use mvpareto::dist::{covariance, joint_ddf, marginal_ddf, marginal_mean};
use mvpareto::risk::{cte_marginal, var_marginal};
use mvpareto::sim::{
    mc_estimate, sample, sample_background_risk, sample_common_shock, Representation, SampleTarget,
    Statistic,
};
use mvpareto::{build_portfolio, preset, Preset};

const M: usize = 400_000;

fn within(est: mvpareto::risk::McEstimate, exact: f64, k: f64) -> bool {
    (est.estimate - exact).abs() <= k * est.std_error
}

#[test]
fn identical_seeds_give_identical_batches() {
    let p = &study_portfolios()[1].1;
    for rep in [Representation::BackgroundRisk, Representation::CommonShock] {
        let a = sample(p, rep, 10_000, 99).unwrap();
        let b = sample(p, rep, 10_000, 99).unwrap();
        assert!(a.rows().zip(b.rows()).all(|(x, y)| x == y));
        let c = sample(p, rep, 10_000, 100).unwrap();
        assert!(a.rows().zip(c.rows()).any(|(x, y)| x != y));
    }
}

#[test]
fn both_samplers_match_closed_forms() {
    let p = build_portfolio(
        &[vec![1, 1, 0, 0], vec![1, 0, 1, 0], vec![0, 1, 1, 1]],
        &[60.0, 100.0, 140.0],
        &[0.6, 1.9, 2.2, 0.45],
    )
    .unwrap();
    for rep in [Representation::BackgroundRisk, Representation::CommonShock] {
        let b = sample(&p, rep, M, 5).unwrap();
        for i in 1..=3 {
            assert!(within(
                mc_estimate(&b, &Statistic::Mean(i)).unwrap(),
                marginal_mean(&p, i).unwrap(),
                4.0
            ));
            let v = var_marginal(&p, i, 0.95).unwrap();
            let mut x = vec![0.0; 3];
            x[i - 1] = v;
            assert!(
                within(mc_estimate(&b, &Statistic::Ddf(x)).unwrap(), 0.05, 4.0),
                "{} margin {i}",
                rep.name()
            );
            let cte = mc_estimate(&b, &Statistic::Cte(SampleTarget::Coordinate(i), 0.5)).unwrap();
            assert!(within(cte, cte_marginal(&p, i, 0.5).unwrap(), 4.0));
        }
        let x = vec![40.0, 70.0, 90.0];
        assert!(within(
            mc_estimate(&b, &Statistic::Ddf(x.clone())).unwrap(),
            joint_ddf(&p, &x).unwrap(),
            4.0
        ));
        let cov = mc_estimate(&b, &Statistic::Cov(1, 2)).unwrap();
        assert!(
            within(cov, covariance(&p, 1, 2).unwrap(), 4.0),
            "{} {cov:?}",
            rep.name()
        );
    }
}

#[test]
fn case_one_correlation_is_about_three_tenths() {
    let p = &study_portfolios()[0].1;
    let b = sample_common_shock(p, M, 21).unwrap();
    let (x, y) = (b.column(1).unwrap(), b.column(2).unwrap());
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mx, my) = (mean(&x), mean(&y));
    let cov = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>();
    let vx = x.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
    let vy = y.iter().map(|b| (b - my).powi(2)).sum::<f64>();
    let r = cov / (vx * vy).sqrt();
    // heavy tails make the sample correlation noisy
    assert!((r - 0.3).abs() < 0.05, "sample correlation {r}");
}

#[test]
fn identity_exposure_gives_independent_margins() {
    let p = preset(Preset::Independent, 2, &[1.0, 1.0], &[4.5, 4.5, 1.0]).unwrap();
    let b = sample_background_risk(&p, M, 3).unwrap();
    let x = vec![
        var_marginal(&p, 1, 0.5).unwrap(),
        var_marginal(&p, 2, 0.5).unwrap(),
    ];
    assert!(within(
        mc_estimate(&b, &Statistic::Ddf(x)).unwrap(),
        0.25,
        4.0
    ));
    assert!(within(
        mc_estimate(&b, &Statistic::Cov(1, 2)).unwrap(),
        0.0,
        4.0
    ));
    assert!((marginal_ddf(&p, 1, 0.0).unwrap() - 1.0).abs() == 0.0);
}

#[test]
fn survival_at_the_origin_is_one() {
    let b = sample_common_shock(&study_portfolios()[2].1, 1000, 1).unwrap();
    let e = mc_estimate(&b, &Statistic::Ddf(vec![0.0; 3])).unwrap();
    assert_eq!(e.estimate, 1.0);
    assert_eq!(e.std_error, 0.0);
}

#[test]
fn quantile_statistics_refuse_thin_tails() {
    let b = sample_common_shock(&study_portfolios()[0].1, 100, 1).unwrap();
    assert!(matches!(
        mc_estimate(&b, &Statistic::Var(SampleTarget::Maxima, 0.95)),
        Err(mvpareto::Error::InsufficientSample(_))
    ));
}
