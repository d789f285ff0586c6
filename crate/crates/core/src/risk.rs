//! Value-at-Risk, conditional tail expectation and weighted risk measures.

use crate::dist::marginal_mean;
use crate::error::{Error, Result};
use crate::extremes::{minima_mixture, MaximaLaw, ShapeMixture};
use crate::portfolio::ExposurePortfolio;
use crate::specfun::gauss_2f1;

/// Relative width at which quantile bisection stops.
pub const VAR_REL_TOL: f64 = 1e-12;

/// Largest allowed disagreement between the two closed forms of the
/// marginal CTE.
pub const CTE_CROSS_CHECK: f64 = 1e-10;

/// Strictly increasing quantile levels in `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileGrid {
    levels: Vec<f64>,
}

impl QuantileGrid {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        for (i, q) in levels.iter().enumerate() {
            check_level(*q).map_err(|_| {
                Error::invalid(format!("grid level {} = {q} is outside [0, 1)", i + 1))
            })?;
        }
        if let Some(w) = levels.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!(
                "grid levels must increase strictly; level {} = {} follows {}",
                w + 2,
                levels[w + 1],
                levels[w]
            )));
        }
        Ok(QuantileGrid { levels })
    }

    /// `count` evenly spaced levels from `start` to `end` inclusive.
    pub fn linspace(start: f64, end: f64, count: usize) -> Result<Self> {
        let levels = match count {
            0 => Vec::new(),
            1 => vec![start],
            _ => (0..count)
                .map(|i| start + (end - start) * i as f64 / (count - 1) as f64)
                .collect(),
        };
        Self::new(levels)
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

fn check_level(q: f64) -> Result<()> {
    if (0.0..1.0).contains(&q) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "quantile level {q} is outside [0, 1)"
        )))
    }
}

/// `VaR_q[X_i] = sigma_i ((1-q)^(-1/gamma*_i) - 1)`.
pub fn var_marginal(p: &ExposurePortfolio, i: usize, q: f64) -> Result<f64> {
    check_level(q)?;
    let g = p.marginal_index(i)?;
    Ok(p.scale(i)? * ((-(-q).ln_1p() / g).exp_m1()))
}

/// Both closed forms of the marginal CTE: the size-biased tail line
/// `E[X] F*(VaR)/(1-q) + VaR` and the linear line `E[X] + VaR g/(g-1)`.
pub fn cte_marginal_lines(p: &ExposurePortfolio, i: usize, q: f64) -> Result<(f64, f64)> {
    let mean = marginal_mean(p, i)?;
    let v = var_marginal(p, i, q)?;
    let g = p.marginal_index(i)?;
    let s = p.scale(i)?;
    // X* ~ Pa(II)(sigma, g - 1)
    let tail_star = (-(g - 1.0) * (v / s).ln_1p()).exp();
    let first = mean * tail_star / (1.0 - q) + v;
    let second = mean + v * g / (g - 1.0);
    Ok((first, second))
}

/// `CTE_q[X_i]`. Both closed forms are evaluated and must agree.
pub fn cte_marginal(p: &ExposurePortfolio, i: usize, q: f64) -> Result<f64> {
    let (first, second) = cte_marginal_lines(p, i, q)?;
    if (first - second).abs() > CTE_CROSS_CHECK * second.abs() {
        return Err(Error::NonConvergence(format!(
            "CTE closed forms disagree for X_{i} at q = {q}: {first} vs {second}"
        )));
    }
    Ok(second)
}

/// Which extreme a quantile refers to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtremeTarget {
    /// Minimum over a set of 1-based coordinates.
    Minima(Vec<usize>),
    /// Maximum over all coordinates.
    Maxima,
}

/// Solves `ddf(x) = 1 - q` for a continuous, strictly decreasing survival
/// function, growing the bracket geometrically from `start`.
pub fn invert_ddf(ddf: impl Fn(f64) -> f64, q: f64, start: f64) -> Result<f64> {
    check_level(q)?;
    if q == 0.0 {
        return Ok(0.0);
    }
    let target = 1.0 - q;
    let mut lo = 0.0;
    let mut hi = start.max(f64::MIN_POSITIVE);
    let mut grow = 0;
    while ddf(hi) > target {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        if grow > 2000 || !hi.is_finite() {
            return Err(Error::NonConvergence(format!(
                "no quantile bracket found for q = {q}"
            )));
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if ddf(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= VAR_REL_TOL * hi {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::NonConvergence(format!(
        "quantile bisection stalled at q = {q}"
    )))
}

/// VaR of the minimum or maximum by bisection on its survival function.
pub fn var_extreme(p: &ExposurePortfolio, target: &ExtremeTarget, q: f64) -> Result<f64> {
    check_level(q)?;
    match target {
        ExtremeTarget::Minima(subset) => {
            let mix = minima_mixture(p, subset)?;
            invert_ddf(|x| mix.ddf(x), q, mix.scale)
        }
        ExtremeTarget::Maxima => {
            let law = MaximaLaw::new(p)?;
            invert_ddf(|x| law.ddf(x), q, max_scale(p))
        }
    }
}

fn max_scale(p: &ExposurePortfolio) -> f64 {
    p.sigma().iter().copied().fold(0.0, f64::max)
}

/// CTE of a Pareto mixture at its own quantile through the change of
/// measure `q_k ∝ alpha p_k / (gamma* + k - 1)`.
fn mixture_cte(mix: &ShapeMixture, q: f64) -> Result<f64> {
    check_level(q)?;
    let v = invert_ddf(|x| mix.ddf(x), q, mix.scale)?;
    // E[X] * F*(v) equals the integrated tail beyond v
    Ok(mix.tail_integral(v)? / (1.0 - q) + v)
}

/// `CTE_q` of the minimum over `subset` (1-based).
pub fn cte_minima(p: &ExposurePortfolio, subset: &[usize], q: f64) -> Result<f64> {
    let mix = minima_mixture(p, subset)?;
    mixture_cte(&mix, q)
}

/// `CTE_q` of the maximum, combining subset-minimum tails by
/// inclusion–exclusion at `VaR_q` of the maximum.
pub fn cte_maxima(p: &ExposurePortfolio, q: f64) -> Result<f64> {
    check_level(q)?;
    let law = MaximaLaw::new(p)?;
    cte_maxima_with(&law, q, max_scale(p))
}

fn cte_maxima_with(law: &MaximaLaw, q: f64, start: f64) -> Result<f64> {
    let t = invert_ddf(|x| law.ddf(x), q, start)?;
    let mut acc = 0.0;
    for (sign, subset, mix) in &law.terms {
        // E[X_S | X_S > t] P[X_S > t] = t P[X_S > t] + int_t^inf P[X_S > x] dx
        let tail = mix.tail_integral(t).map_err(|_| {
            Error::infinite_moment(
                format!("conditional mean of the minimum over subset {subset:?}"),
                mix.base_shape,
                1.0,
            )
        })?;
        acc += sign * (t * mix.ddf(t) + tail);
    }
    Ok(acc / (1.0 - q))
}

/// Economic CTE `E[X_k | X_l > VaR_q[X_l]]`.
pub fn economic_cte(p: &ExposurePortfolio, k: usize, l: usize, q: f64) -> Result<f64> {
    let d = p.pair_decomposition(k, l)?;
    let gk = d.index_k();
    if gk <= 1.0 {
        return Err(Error::infinite_moment(
            format!("economic CTE of X_{k}"),
            gk,
            1.0,
        ));
    }
    let v = var_marginal(p, l, q)?;
    let z = v / (p.scale(l)? + v);
    let f = gauss_2f1(d.shared, 1.0, gk, z)?.value;
    Ok(p.scale(k)? / (gk - 1.0) * f)
}

/// How a weight function enters a weighted measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// `E[X w(X)] / E[w(X)]`.
    SelfWeighted,
    /// `E[X w(Y)] / E[w(Y)]` over `(X, Y)` pairs.
    Economic,
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Ratio estimator of a weighted risk measure from `(x, y)` loss pairs.
/// The standard error uses the delta method.
pub fn weighted_measure_mc(
    samples: &[(f64, f64)],
    weight: impl Fn(f64) -> f64,
    mode: WeightMode,
) -> Result<McEstimate> {
    let m = samples.len();
    if m < 2 {
        return Err(Error::InsufficientSample(format!(
            "weighted measure needs at least 2 draws, got {m}"
        )));
    }
    let pairs: Vec<(f64, f64)> = samples
        .iter()
        .map(|&(x, y)| {
            let w = match mode {
                WeightMode::SelfWeighted => weight(x),
                WeightMode::Economic => weight(y),
            };
            (x, w)
        })
        .collect();
    if pairs.iter().any(|&(_, w)| !(w >= 0.0)) {
        return Err(Error::invalid("weights must be nonnegative"));
    }
    let mf = m as f64;
    let sum_w: f64 = pairs.iter().map(|p| p.1).sum();
    if sum_w == 0.0 {
        return Err(Error::InsufficientSample(
            "every sample weight is zero".into(),
        ));
    }
    let sum_xw: f64 = pairs.iter().map(|&(x, w)| x * w).sum();
    let ratio = sum_xw / sum_w;
    let mean_w = sum_w / mf;
    let resid: f64 = pairs
        .iter()
        .map(|&(x, w)| (w * (x - ratio)).powi(2))
        .sum::<f64>()
        / (mf - 1.0);
    Ok(McEstimate {
        estimate: ratio,
        std_error: (resid / mf).sqrt() / mean_w,
        samples: m,
    })
}

/// What a [`RiskReport`] describes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RiskTarget {
    Margin(usize),
    Minima(Vec<usize>),
    Maxima,
    /// Stressed risk `k` given risk `l` above its VaR.
    Economic {
        k: usize,
        l: usize,
    },
}

impl RiskTarget {
    pub fn label(&self) -> String {
        match self {
            RiskTarget::Margin(i) => format!("margin_{i}"),
            RiskTarget::Minima(_) => "minima".into(),
            RiskTarget::Maxima => "maxima".into(),
            RiskTarget::Economic { k, l } => format!("economic_{k}_{l}"),
        }
    }
}

/// One grid level of a report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskRow {
    pub q: f64,
    pub var: f64,
    pub cte: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    pub target: RiskTarget,
    pub rows: Vec<RiskRow>,
}

/// VaR and CTE of `target` at every grid level. For the economic target the
/// VaR column is that of the conditioning risk.
pub fn risk_report(
    p: &ExposurePortfolio,
    target: &RiskTarget,
    grid: &QuantileGrid,
) -> Result<RiskReport> {
    let rows = match target {
        RiskTarget::Margin(i) => grid
            .levels()
            .iter()
            .map(|&q| {
                Ok(RiskRow {
                    q,
                    var: var_marginal(p, *i, q)?,
                    cte: cte_marginal(p, *i, q)?,
                })
            })
            .collect::<Result<Vec<_>>>()?,
        RiskTarget::Minima(subset) => {
            let mix = minima_mixture(p, subset)?;
            grid.levels()
                .iter()
                .map(|&q| {
                    let var = invert_ddf(|x| mix.ddf(x), q, mix.scale)?;
                    Ok(RiskRow {
                        q,
                        var,
                        cte: mix.tail_integral(var)? / (1.0 - q) + var,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        RiskTarget::Maxima => {
            let law = MaximaLaw::new(p)?;
            let start = max_scale(p);
            grid.levels()
                .iter()
                .map(|&q| {
                    let var = invert_ddf(|x| law.ddf(x), q, start)?;
                    Ok(RiskRow {
                        q,
                        var,
                        cte: cte_maxima_with(&law, q, start)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        RiskTarget::Economic { k, l } => grid
            .levels()
            .iter()
            .map(|&q| {
                Ok(RiskRow {
                    q,
                    var: var_marginal(p, *l, q)?,
                    cte: economic_cte(p, *k, *l, q)?,
                })
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(RiskReport {
        target: target.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::marginal_ddf;
    use crate::extremes::minima_ddf;
    use crate::portfolio::{build_portfolio, preset, Preset};

    fn margin() -> ExposurePortfolio {
        build_portfolio(&[vec![1, 1]], &[122.39], &[1.67, 1.66]).unwrap()
    }

    #[test]
    fn marginal_var_and_cte_reference() {
        let p = margin();
        assert_eq!(var_marginal(&p, 1, 0.0).unwrap(), 0.0);
        let v = var_marginal(&p, 1, 0.95).unwrap();
        assert!((v - 178.526_244_562_835_4).abs() < 1e-9);
        assert!((marginal_ddf(&p, 1, v).unwrap() - 0.05).abs() < 1e-12);
        let c = cte_marginal(&p, 1, 0.95).unwrap();
        assert!((c - 307.674_847_379_502_95).abs() < 1e-8);
        assert!((cte_marginal(&p, 1, 0.0).unwrap() - marginal_mean(&p, 1).unwrap()).abs() < 1e-12);
        assert!(var_marginal(&p, 1, 1.0).is_err());
    }

    #[test]
    fn minima_quantile_closed_form() {
        let (s, g) = (122.39, 3.33);
        let p = preset(Preset::Independent, 3, &[s; 3], &[g, g, g, 1.0]).unwrap();
        for q in [0.0, 0.3, 0.9, 0.999] {
            let v = var_extreme(&p, &ExtremeTarget::Minima(vec![1, 2, 3]), q).unwrap();
            let expect = s * ((1.0 - q).powf(-1.0 / (3.0 * g)) - 1.0);
            assert!((v - expect).abs() <= 1e-11 * expect.max(1e-300), "{q}");
            assert!((minima_ddf(&p, &[1, 2, 3], v).unwrap() - (1.0 - q)).abs() < 1e-10);
        }
    }

    #[test]
    fn degenerate_minima_cte_is_pareto() {
        let (s, g) = (10.0, 1.4);
        let p = preset(Preset::Independent, 2, &[s; 2], &[g, g, 1.0]).unwrap();
        let one = build_portfolio(&[vec![1, 0]], &[s], &[2.0 * g, 1.0]).unwrap();
        for q in [0.0, 0.5, 0.99] {
            let a = cte_minima(&p, &[1, 2], q).unwrap();
            let b = cte_marginal(&one, 1, q).unwrap();
            assert!((a - b).abs() < 1e-9 * b, "{q}: {a} vs {b}");
        }
    }

    #[test]
    fn one_dimensional_maxima_cte() {
        let p = margin();
        for q in [0.0, 0.5, 0.95] {
            let a = cte_maxima(&p, q).unwrap();
            let b = cte_marginal(&p, 1, q).unwrap();
            assert!((a - b).abs() < 1e-9 * b);
        }
    }

    #[test]
    fn economic_cte_boundaries() {
        let p = build_portfolio(
            &[vec![1, 1, 0], vec![0, 1, 1]],
            &[2.0, 5.0],
            &[0.7, 1.3, 2.4],
        )
        .unwrap();
        let mean = marginal_mean(&p, 1).unwrap();
        assert!((economic_cte(&p, 1, 2, 0.0).unwrap() - mean).abs() < 1e-14);
        assert!(economic_cte(&p, 1, 2, 0.9).unwrap() > mean);
        let ind = preset(Preset::Independent, 2, &[1.0, 1.0], &[3.0, 4.0, 1.0]).unwrap();
        assert!((economic_cte(&ind, 1, 2, 0.9).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn weighted_measure_basics() {
        let s: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64, 0.0)).collect();
        let m = weighted_measure_mc(&s, |_| 1.0, WeightMode::SelfWeighted).unwrap();
        assert!((m.estimate - 5.5).abs() < 1e-14);
        let m = weighted_measure_mc(
            &s,
            |x| f64::from(u8::from(x > 8.0)),
            WeightMode::SelfWeighted,
        )
        .unwrap();
        assert!((m.estimate - 9.5).abs() < 1e-14);
        assert!(weighted_measure_mc(&s, |y| y, WeightMode::Economic).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(QuantileGrid::new(vec![0.1, 0.1]).is_err());
        assert!(QuantileGrid::new(vec![0.5, 1.0]).is_err());
        assert_eq!(
            QuantileGrid::linspace(0.0, 0.9, 4).unwrap().levels().len(),
            4
        );
        assert!(QuantileGrid::new(vec![]).unwrap().is_empty());
    }
}
