//! Laws of the minimum and maximum of a portfolio.
//!
//! The minimum over a subset `S` is a Pareto-II variable whose shape is
//! shifted by a random integer `K`: the survival function is a mixture
//! `sum_k p_k (1 + x/alpha)^(-(gamma* + k))`. The weights come from the
//! Moschopoulos series for a sum of independent gammas with distinct rates.
//! The maximum follows by inclusion–exclusion over subsets.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::portfolio::ExposurePortfolio;

/// Default probability mass left in the untruncated tail of a mixture.
pub const DEFAULT_MIXTURE_EPS: f64 = 1e-10;

/// Hard cap on the number of mixture weights.
pub const MAX_MIXTURE_TERMS: usize = 200_000;

/// Largest dimension for inclusion–exclusion.
pub const MAX_MAXIMA_DIM: usize = 20;

/// Pareto-II mixture with integer shape shifts.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeMixture {
    /// Sum of the active shapes.
    pub base_shape: f64,
    /// Dominant scale, the largest factor rate.
    pub scale: f64,
    /// `p_0, p_1, ...` up to truncation.
    pub weights: Vec<f64>,
    /// Probability mass not represented in `weights`.
    pub tail_mass: f64,
}

impl ShapeMixture {
    fn degenerate(base_shape: f64, scale: f64) -> Self {
        ShapeMixture {
            base_shape,
            scale,
            weights: vec![1.0],
            tail_mass: 0.0,
        }
    }

    /// `P[X > x]`. The discarded tail mass is placed halfway between 0 and
    /// the last component's survival, so the error is at most half the
    /// tail mass times that value.
    pub fn ddf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        let ln_s = -(x / self.scale).ln_1p();
        let head: f64 = self
            .weights
            .iter()
            .enumerate()
            .map(|(k, w)| w * ((self.base_shape + k as f64) * ln_s).exp())
            .sum();
        let last = ((self.base_shape + self.weights.len() as f64) * ln_s).exp();
        head + 0.5 * self.tail_mass * last
    }

    /// Density.
    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let ln_s = -(x / self.scale).ln_1p();
        self.weights
            .iter()
            .enumerate()
            .map(|(k, w)| {
                let g = self.base_shape + k as f64;
                w * g / self.scale * ((g + 1.0) * ln_s).exp()
            })
            .sum()
    }

    fn require_mean(&self) -> Result<()> {
        if self.base_shape <= 1.0 {
            Err(Error::infinite_moment(
                "mean of the minimum",
                self.base_shape,
                1.0,
            ))
        } else {
            Ok(())
        }
    }

    /// `E[X]`; needs `base_shape > 1`.
    pub fn mean(&self) -> Result<f64> {
        self.require_mean()?;
        Ok(self.mean_head()
            + 0.5 * self.tail_mass * self.scale
                / (self.base_shape + self.weights.len() as f64 - 1.0))
    }

    fn mean_head(&self) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(k, w)| w * self.scale / (self.base_shape + k as f64 - 1.0))
            .sum()
    }

    /// `int_t^inf P[X > x] dx`; needs `base_shape > 1`.
    pub fn tail_integral(&self, t: f64) -> Result<f64> {
        self.require_mean()?;
        let t = t.max(0.0);
        let ln_s = -(t / self.scale).ln_1p();
        let piece = |k: usize| {
            let g = self.base_shape + k as f64;
            self.scale / (g - 1.0) * ((g - 1.0) * ln_s).exp()
        };
        let head: f64 = self
            .weights
            .iter()
            .enumerate()
            .map(|(k, w)| w * piece(k))
            .sum();
        Ok(head + 0.5 * self.tail_mass * piece(self.weights.len()))
    }

    /// Bound on the error of [`ddf`](Self::ddf) caused by truncation.
    pub fn ddf_error_bound(&self, x: f64) -> f64 {
        let ln_s = -(x.max(0.0) / self.scale).ln_1p();
        0.5 * self.tail_mass * ((self.base_shape + self.weights.len() as f64) * ln_s).exp()
    }
}

/// Moschopoulos weights for `sum_i Ga(shape_i, rate_i)` (rate
/// parametrisation): the sum equals `Ga(sum shape + K, max rate)` in law.
/// Mixing exponentials over that sum gives Pareto-II laws whose scale is
/// the largest rate, which is how the result is stored.
///
/// Weights are produced until their cumulative mass reaches `1 - eps`.
pub fn moschopoulos_pmf(shapes: &[f64], rates: &[f64], eps: f64) -> Result<ShapeMixture> {
    if shapes.is_empty() || shapes.len() != rates.len() {
        return Err(Error::Dimension(format!(
            "need matching nonempty shape and rate lists, got {} and {}",
            shapes.len(),
            rates.len()
        )));
    }
    if let Some(i) = shapes.iter().position(|g| !(g.is_finite() && *g > 0.0)) {
        return Err(Error::invalid(format!(
            "shape[{}] = {} must be positive",
            i + 1,
            shapes[i]
        )));
    }
    if let Some(i) = rates.iter().position(|b| !(b.is_finite() && *b > 0.0)) {
        return Err(Error::invalid(format!(
            "rate[{}] = {} must be positive",
            i + 1,
            rates[i]
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!(
            "mixture tolerance must lie in (0, 1), got {eps}"
        )));
    }
    let top = rates.iter().copied().fold(f64::MIN, f64::max);
    let base: f64 = shapes.iter().sum();
    // factors at the top rate contribute nothing to the shift
    let rest: Vec<(f64, f64)> = shapes
        .iter()
        .zip(rates)
        .map(|(&g, &b)| (g, 1.0 - b / top))
        .filter(|&(_, r)| r > 0.0)
        .collect();
    if rest.is_empty() {
        return Ok(ShapeMixture::degenerate(base, top));
    }
    let ln_c: f64 = rest.iter().map(|&(g, r)| g * (-r).ln_1p()).sum();
    let p0 = ln_c.exp();
    if p0 == 0.0 {
        return Err(Error::NonConvergence(format!(
            "mixture leading weight underflows (log weight {ln_c})"
        )));
    }
    // p_k = (1/k) sum_i g_i S_i(k) with S_i(k) = r_i (S_i(k-1) + p_{k-1})
    let mut s = vec![0.0; rest.len()];
    let mut weights = vec![p0];
    let mut mass = p0;
    while mass < 1.0 - eps {
        if weights.len() >= MAX_MIXTURE_TERMS {
            return Err(Error::NonConvergence(format!(
                "mixture mass {mass} after {MAX_MIXTURE_TERMS} terms is short of 1 - {eps}"
            )));
        }
        let prev = *weights.last().unwrap();
        let k = weights.len() as f64;
        let mut acc = 0.0;
        for (si, &(g, r)) in s.iter_mut().zip(&rest) {
            *si = r * (*si + prev);
            acc += g * *si;
        }
        let pk = acc / k;
        weights.push(pk);
        mass += pk;
    }
    Ok(ShapeMixture {
        base_shape: base,
        scale: top,
        weights,
        tail_mass: (1.0 - mass).max(0.0),
    })
}

fn subset_indices(p: &ExposurePortfolio, subset: &[usize]) -> Result<Vec<usize>> {
    if subset.is_empty() {
        return Err(Error::invalid("subset must be nonempty"));
    }
    let mut idx = subset
        .iter()
        .map(|&i| p.coord(i))
        .collect::<Result<Vec<_>>>()?;
    idx.sort_unstable();
    idx.dedup();
    Ok(idx)
}

/// Mixture law of `min_{i in subset} X_i` (1-based coordinates).
pub fn minima_mixture(p: &ExposurePortfolio, subset: &[usize]) -> Result<ShapeMixture> {
    minima_mixture_eps(p, subset, DEFAULT_MIXTURE_EPS)
}

pub fn minima_mixture_eps(
    p: &ExposurePortfolio,
    subset: &[usize],
    eps: f64,
) -> Result<ShapeMixture> {
    let idx = subset_indices(p, subset)?;
    mixture_for(p, &idx, eps)
}

fn mixture_for(p: &ExposurePortfolio, idx: &[usize], eps: f64) -> Result<ShapeMixture> {
    let c = p.exposure();
    let sigma = p.sigma();
    let mut shapes = Vec::new();
    // each factor contributes Ga(gamma_j) scaled by its rate, i.e. a gamma
    // law whose rate is the reciprocal
    let mut rates = Vec::new();
    for (j, &g) in p.gamma().iter().enumerate() {
        let rate: f64 = idx
            .iter()
            .filter(|&&i| c.hits(i, j))
            .map(|&i| 1.0 / sigma[i])
            .sum();
        if rate > 0.0 {
            shapes.push(g);
            rates.push(1.0 / rate);
        }
    }
    moschopoulos_pmf(&shapes, &rates, eps)
}

fn full_set(p: &ExposurePortfolio) -> Vec<usize> {
    (1..=p.n()).collect()
}

/// `P[min_{i in subset} X_i > x]`.
pub fn minima_ddf(p: &ExposurePortfolio, subset: &[usize], x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::invalid(format!("x = {x} must be nonnegative")));
    }
    Ok(minima_mixture(p, subset)?.ddf(x))
}

/// `E[min_{i in subset} X_i]`.
pub fn minima_mean(p: &ExposurePortfolio, subset: &[usize]) -> Result<f64> {
    minima_mixture(p, subset)?.mean()
}

/// Minimum over all coordinates.
pub fn minima_law(p: &ExposurePortfolio) -> Result<ShapeMixture> {
    minima_mixture(p, &full_set(p))
}

/// Law of `max_i X_i`, held as one signed mixture per nonempty subset.
#[derive(Debug, Clone)]
pub struct MaximaLaw {
    /// `(sign, subset as 1-based coordinates, mixture)`.
    pub terms: Vec<(f64, Vec<usize>, ShapeMixture)>,
}

impl MaximaLaw {
    pub fn new(p: &ExposurePortfolio) -> Result<Self> {
        let n = p.n();
        if n > MAX_MAXIMA_DIM {
            return Err(Error::Guard(format!(
                "inclusion-exclusion over 2^{n} subsets exceeds n <= {MAX_MAXIMA_DIM}"
            )));
        }
        let terms = (1u32..(1u32 << n))
            .into_par_iter()
            .map(|mask| {
                let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
                let sign = if idx.len() % 2 == 1 { 1.0 } else { -1.0 };
                let mix = mixture_for(p, &idx, DEFAULT_MIXTURE_EPS)?;
                Ok((sign, idx.iter().map(|i| i + 1).collect(), mix))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MaximaLaw { terms })
    }

    pub fn ddf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        let s: f64 = self.terms.iter().map(|(sign, _, m)| sign * m.ddf(x)).sum();
        s.clamp(0.0, 1.0)
    }

    /// `int_t^inf P[max > x] dx`. Every subset minimum must have a finite
    /// mean; the first subset that does not is reported.
    pub fn tail_integral(&self, t: f64) -> Result<f64> {
        self.check_means()?;
        let mut acc = 0.0;
        for (sign, _, m) in &self.terms {
            acc += sign * m.tail_integral(t)?;
        }
        Ok(acc)
    }

    pub fn mean(&self) -> Result<f64> {
        self.tail_integral(0.0)
    }

    fn check_means(&self) -> Result<()> {
        match self.terms.iter().find(|(_, _, m)| m.base_shape <= 1.0) {
            Some((_, s, m)) => Err(Error::infinite_moment(
                format!("conditional mean of the minimum over subset {s:?}"),
                m.base_shape,
                1.0,
            )),
            None => Ok(()),
        }
    }
}

/// `P[max_i X_i > x]`.
pub fn maxima_ddf(p: &ExposurePortfolio, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::invalid(format!("x = {x} must be nonnegative")));
    }
    Ok(MaximaLaw::new(p)?.ddf(x))
}
