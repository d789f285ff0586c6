//! CSV artifacts of a scenario run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::dist::{correlation, joint_ddf, marginal_mean};
use crate::error::{Error, Result};
use crate::extremes::{minima_law, MaximaLaw};
use crate::portfolio::ExposurePortfolio;
use crate::risk::{
    cte_marginal, cte_maxima, cte_minima, economic_cte, risk_report, var_marginal,
    weighted_measure_mc, McEstimate, QuantileGrid, RiskReport, RiskTarget, WeightMode,
};
use crate::sim::{mc_estimate, sample_common_shock, SampleTarget, Statistic};

use super::config::{Output, ScenarioConfig};

/// `%.10g`-style formatting: 10 significant digits, trailing zeros removed,
/// exponent form outside `[1e-5, 1e10)`.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.9e}");
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..10).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        trim(&format!("{x:.decimals$}")).to_string()
    } else {
        format!(
            "{}e{}{:02}",
            trim(mant),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `q,var,cte` table.
pub fn report_csv(report: &RiskReport) -> String {
    let mut out = String::from("q,var,cte\n");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_num(r.q),
            fmt_num(r.var),
            fmt_num(r.cte)
        );
    }
    out
}

/// Pearson correlation matrix with a leading label column.
pub fn correlation_csv(p: &ExposurePortfolio) -> Result<String> {
    let n = p.n();
    let mut out = String::from("risk");
    for l in 1..=n {
        let _ = write!(out, ",{l}");
    }
    out.push('\n');
    for k in 1..=n {
        let _ = write!(out, "{k}");
        for l in 1..=n {
            let r = if k == l { 1.0 } else { correlation(p, k, l)? };
            let _ = write!(out, ",{}", fmt_num(r));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Economic CTE of every ordered pair over the grid.
pub fn economic_csv(p: &ExposurePortfolio, grid: &QuantileGrid) -> Result<String> {
    let mut out = String::from("k,l,q,var_l,cte\n");
    for k in 1..=p.n() {
        for l in 1..=p.n() {
            if k == l {
                continue;
            }
            let rep = risk_report(p, &RiskTarget::Economic { k, l }, grid)?;
            for r in rep.rows {
                let _ = writeln!(
                    out,
                    "{k},{l},{},{},{}",
                    fmt_num(r.q),
                    fmt_num(r.var),
                    fmt_num(r.cte)
                );
            }
        }
    }
    Ok(out)
}

/// Closed forms against Monte Carlo estimates from the common-shock sampler.
pub fn mc_comparison_csv(p: &ExposurePortfolio, samples: usize, seed: u64) -> Result<String> {
    let batch = sample_common_shock(p, samples, seed)?;
    let n = p.n();
    let all: Vec<usize> = (1..=n).collect();
    let mut rows: Vec<(String, f64, McEstimate)> = Vec::new();
    for i in 1..=n {
        rows.push((
            format!("mean_{i}"),
            marginal_mean(p, i)?,
            mc_estimate(&batch, &Statistic::Mean(i))?,
        ));
    }
    let x = var_marginal(p, 1, 0.5)?;
    rows.push((
        "joint_ddf_at_median_1".into(),
        joint_ddf(p, &vec![x; n])?,
        mc_estimate(&batch, &Statistic::Ddf(vec![x; n]))?,
    ));
    for q in [0.5, 0.9] {
        rows.push((
            format!("cte_margin_1_{q}"),
            cte_marginal(p, 1, q)?,
            mc_estimate(&batch, &Statistic::Cte(SampleTarget::Coordinate(1), q))?,
        ));
        rows.push((
            format!("cte_minima_{q}"),
            cte_minima(p, &all, q)?,
            mc_estimate(
                &batch,
                &Statistic::Cte(SampleTarget::Minima(all.clone()), q),
            )?,
        ));
        rows.push((
            format!("cte_maxima_{q}"),
            cte_maxima(p, q)?,
            mc_estimate(&batch, &Statistic::Cte(SampleTarget::Maxima, q))?,
        ));
    }
    if n >= 2 {
        let q = 0.9;
        let v = var_marginal(p, 2, q)?;
        let pairs: Vec<(f64, f64)> = batch.rows().map(|r| (r[0], r[1])).collect();
        let est = weighted_measure_mc(
            &pairs,
            |y| if y > v { 1.0 } else { 0.0 },
            WeightMode::Economic,
        )?;
        rows.push((
            format!("economic_cte_1_2_{q}"),
            economic_cte(p, 1, 2, q)?,
            est,
        ));
    }
    let mut out = String::from("statistic,analytic,mc,std_error,z\n");
    for (name, exact, est) in rows {
        let z = if est.std_error > 0.0 {
            (est.estimate - exact) / est.std_error
        } else {
            0.0
        };
        let _ = writeln!(
            out,
            "{name},{},{},{},{}",
            fmt_num(exact),
            fmt_num(est.estimate),
            fmt_num(est.std_error),
            fmt_num(z)
        );
    }
    Ok(out)
}

/// Minima report for each sweep value. Shapes are scaled by `mu` relative
/// to the first sweep value and the scales recalibrated so the default
/// probability stays fixed.
pub fn mu_sweep_csv(cfg: &ScenarioConfig) -> Result<String> {
    let Some(cal) = cfg.calibration else {
        return Err(Error::invalid("a sweep needs 'calibrate = p horizon'"));
    };
    let base = cfg.mu_sweep[0];
    let mut out = format!(
        "# sigma recalibrated for every mu so that P[X_i <= {}] = {}\nmu,sigma_1,q,var,cte\n",
        fmt_num(cal.horizon),
        fmt_num(cal.p_default)
    );
    let all: Vec<usize> = (1..=cfg.portfolio.n()).collect();
    for &mu in &cfg.mu_sweep {
        let gamma: Vec<f64> = cfg
            .portfolio
            .gamma()
            .iter()
            .map(|g| g * mu / base)
            .collect();
        let p = cal.apply(&cfg.portfolio.with_gamma(gamma)?)?;
        let rep = risk_report(&p, &RiskTarget::Minima(all.clone()), &cfg.grid)?;
        for r in rep.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                fmt_num(mu),
                fmt_num(p.sigma()[0]),
                fmt_num(r.q),
                fmt_num(r.var),
                fmt_num(r.cte)
            );
        }
    }
    Ok(out)
}

/// Error raised while producing one artifact, tagged with its stage.
#[derive(Debug)]
pub struct StageError {
    pub stage: String,
    pub error: Error,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.stage, self.error)
    }
}

/// Runs every requested report and writes the files into `out_dir`.
/// Returns the written paths in order.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    out_dir: &Path,
) -> std::result::Result<Vec<PathBuf>, StageError> {
    let stage = |name: &str| {
        let name = name.to_string();
        move |error: Error| StageError { stage: name, error }
    };
    std::fs::create_dir_all(out_dir).map_err(|e| {
        stage("output directory")(Error::invalid(format!("{}: {e}", out_dir.display())))
    })?;
    let p = &cfg.portfolio;
    let all: Vec<usize> = (1..=p.n()).collect();
    let mut files: Vec<(String, String)> = Vec::new();

    if cfg.wants(Output::Margins) {
        for i in 1..=p.n() {
            let rep = risk_report(p, &RiskTarget::Margin(i), &cfg.grid)
                .map_err(stage(&format!("margin {i}")))?;
            files.push((format!("{}_margin_{i}.csv", cfg.name), report_csv(&rep)));
        }
    }
    if cfg.wants(Output::Minima) {
        // building the law once surfaces mixture failures before the grid loop
        minima_law(p).map_err(stage("minima"))?;
        let rep =
            risk_report(p, &RiskTarget::Minima(all.clone()), &cfg.grid).map_err(stage("minima"))?;
        files.push((format!("{}_minima.csv", cfg.name), report_csv(&rep)));
    }
    if cfg.wants(Output::Maxima) {
        MaximaLaw::new(p).map_err(stage("maxima"))?;
        let rep = risk_report(p, &RiskTarget::Maxima, &cfg.grid).map_err(stage("maxima"))?;
        files.push((format!("{}_maxima.csv", cfg.name), report_csv(&rep)));
    }
    if cfg.wants(Output::Correlation) && p.n() >= 2 {
        files.push((
            format!("{}_correlation.csv", cfg.name),
            correlation_csv(p).map_err(stage("correlation"))?,
        ));
    }
    if cfg.wants(Output::Economic) && p.n() >= 2 {
        files.push((
            format!("{}_economic.csv", cfg.name),
            economic_csv(p, &cfg.grid).map_err(stage("economic"))?,
        ));
    }
    if cfg.wants(Output::MonteCarlo) && cfg.samples > 0 {
        files.push((
            format!("{}_mc_comparison.csv", cfg.name),
            mc_comparison_csv(p, cfg.samples, cfg.seed).map_err(stage("monte carlo"))?,
        ));
    }
    if cfg.wants(Output::MuSweep) && !cfg.mu_sweep.is_empty() {
        files.push((
            format!("{}_mu_sweep.csv", cfg.name),
            mu_sweep_csv(cfg).map_err(stage("mu sweep"))?,
        ));
    }

    let mut written = Vec::new();
    for (name, body) in files {
        let path = out_dir.join(name);
        std::fs::write(&path, body)
            .map_err(|e| stage("write")(Error::invalid(format!("{}: {e}", path.display()))))?;
        written.push(path);
    }
    Ok(written)
}
