//! Exact samplers and Monte Carlo estimators.
//!
//! Two constructions produce the same law:
//! - background risk: `X_i = E_i / Xi_i` with `Xi_i = sum_j c_ij Y_j / sigma_i`,
//!   `Y_j ~ Ga(gamma_j, 1)` and `E_i ~ Exp(1)`;
//! - common shock: `X_i = sigma_i min_{j: c_ij = 1} E_ij / Lambda_j` with
//!   `Lambda_j ~ Ga(gamma_j, 1)`.
//!
//! Draws are generated in fixed-size blocks. Block `b` uses a ChaCha8 stream
//! keyed by `(seed, b)`, so a batch is identical whatever the thread count.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::portfolio::ExposurePortfolio;
use crate::risk::McEstimate;

/// Replicates per random stream.
pub const BLOCK: usize = 4096;

/// Minimum number of draws expected beyond a quantile before tail statistics
/// are attempted.
pub const MIN_TAIL_DRAWS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    BackgroundRisk,
    CommonShock,
}

impl Representation {
    pub fn name(self) -> &'static str {
        match self {
            Representation::BackgroundRisk => "background_risk",
            Representation::CommonShock => "common_shock",
        }
    }
}

/// `m` replicates of an `n`-vector, stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    n: usize,
    draws: Vec<f64>,
    pub seed: u64,
    pub representation: Representation,
}

impl SampleBatch {
    /// Wraps externally produced draws (row-major `m × n`).
    pub fn from_rows(
        n: usize,
        draws: Vec<f64>,
        seed: u64,
        representation: Representation,
    ) -> Result<Self> {
        if n == 0 || !draws.len().is_multiple_of(n) {
            return Err(Error::Dimension(format!(
                "{} values do not form rows of length {n}",
                draws.len()
            )));
        }
        Ok(SampleBatch {
            n,
            draws,
            seed,
            representation,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.draws.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.draws[r * self.n..(r + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.draws.chunks(self.n)
    }

    /// Coordinate `i` (1-based) across all replicates.
    pub fn column(&self, i: usize) -> Result<Vec<f64>> {
        let c = self.coord(i)?;
        Ok(self.rows().map(|r| r[c]).collect())
    }

    /// Minimum over `subset` (1-based) in each replicate.
    pub fn minima(&self, subset: &[usize]) -> Result<Vec<f64>> {
        if subset.is_empty() {
            return Err(Error::invalid("subset must be nonempty"));
        }
        let idx = subset
            .iter()
            .map(|&i| self.coord(i))
            .collect::<Result<Vec<_>>>()?;
        Ok(self
            .rows()
            .map(|r| idx.iter().map(|&i| r[i]).fold(f64::INFINITY, f64::min))
            .collect())
    }

    /// Maximum over all coordinates in each replicate.
    pub fn maxima(&self) -> Vec<f64> {
        self.rows()
            .map(|r| r.iter().copied().fold(0.0, f64::max))
            .collect()
    }

    fn coord(&self, i: usize) -> Result<usize> {
        if i == 0 || i > self.n {
            Err(Error::CoordinateOutOfRange {
                index: i,
                n: self.n,
            })
        } else {
            Ok(i - 1)
        }
    }
}

/// Per-factor gamma samplers, built once per batch.
struct Factors {
    gammas: Vec<Gamma<f64>>,
}

impl Factors {
    fn new(p: &ExposurePortfolio) -> Result<Self> {
        let gammas = p
            .gamma()
            .iter()
            .map(|&g| {
                Gamma::new(g, 1.0).map_err(|e| Error::invalid(format!("gamma shape {g}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Factors { gammas })
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for (o, g) in out.iter_mut().zip(&self.gammas) {
            *o = g.sample(rng);
        }
    }
}

fn mixing_vector(p: &ExposurePortfolio, y: &[f64], out: &mut [f64]) {
    let c = p.exposure();
    for (i, (o, s)) in out.iter_mut().zip(p.sigma()).enumerate() {
        let load: f64 = y
            .iter()
            .enumerate()
            .filter(|&(j, _)| c.hits(i, j))
            .map(|(_, v)| v)
            .sum();
        *o = load / s;
    }
}

/// One draw of the gamma mixing vector `Xi_i = sum_j c_ij Y_j / sigma_i`.
pub fn sample_gamma_vector<R: Rng + ?Sized>(
    p: &ExposurePortfolio,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let factors = Factors::new(p)?;
    let mut y = vec![0.0; p.n() + 1];
    factors.draw(rng, &mut y);
    let mut xi = vec![0.0; p.n()];
    mixing_vector(p, &y, &mut xi);
    Ok(xi)
}

/// Random stream for block `b` of a batch seeded with `seed`.
pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

fn generate(
    p: &ExposurePortfolio,
    m: usize,
    seed: u64,
    representation: Representation,
    fill: impl Fn(&Factors, &mut ChaCha8Rng, &mut [f64], &mut [f64]) + Sync,
) -> Result<SampleBatch> {
    if m == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    let n = p.n();
    let factors = Factors::new(p)?;
    let mut draws = vec![0.0; m * n];
    draws
        .par_chunks_mut(BLOCK * n)
        .enumerate()
        .for_each(|(b, chunk)| {
            let mut rng = block_rng(seed, b as u64);
            let mut y = vec![0.0; n + 1];
            for row in chunk.chunks_mut(n) {
                fill(&factors, &mut rng, &mut y, row);
            }
        });
    Ok(SampleBatch {
        n,
        draws,
        seed,
        representation,
    })
}

/// `m` replicates from the background-risk construction.
pub fn sample_background_risk(p: &ExposurePortfolio, m: usize, seed: u64) -> Result<SampleBatch> {
    generate(
        p,
        m,
        seed,
        Representation::BackgroundRisk,
        |f, rng, y, row| {
            f.draw(rng, y);
            mixing_vector(p, y, row);
            for x in row.iter_mut() {
                let e: f64 = Exp1.sample(rng);
                *x = e / *x;
            }
        },
    )
}

/// `m` replicates from the common-shock construction.
pub fn sample_common_shock(p: &ExposurePortfolio, m: usize, seed: u64) -> Result<SampleBatch> {
    let c = p.exposure().clone();
    let sigma = p.sigma().to_vec();
    generate(
        p,
        m,
        seed,
        Representation::CommonShock,
        move |f, rng, lambda, row| {
            f.draw(rng, lambda);
            for (i, x) in row.iter_mut().enumerate() {
                let mut first = f64::INFINITY;
                for (j, l) in lambda.iter().enumerate() {
                    if c.hits(i, j) {
                        let e: f64 = Exp1.sample(rng);
                        first = first.min(e / l);
                    }
                }
                *x = sigma[i] * first;
            }
        },
    )
}

/// Draws from either construction.
pub fn sample(
    p: &ExposurePortfolio,
    representation: Representation,
    m: usize,
    seed: u64,
) -> Result<SampleBatch> {
    match representation {
        Representation::BackgroundRisk => sample_background_risk(p, m, seed),
        Representation::CommonShock => sample_common_shock(p, m, seed),
    }
}

/// Scalar derived from each replicate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SampleTarget {
    Coordinate(usize),
    Minima(Vec<usize>),
    Maxima,
}

impl SampleTarget {
    fn values(&self, batch: &SampleBatch) -> Result<Vec<f64>> {
        match self {
            SampleTarget::Coordinate(i) => batch.column(*i),
            SampleTarget::Minima(s) => batch.minima(s),
            SampleTarget::Maxima => Ok(batch.maxima()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statistic {
    /// `E[X_i]`.
    Mean(usize),
    /// `Cov[X_k, X_l]`.
    Cov(usize, usize),
    /// `P[X >= x]` componentwise (equal to `P[X > x]` for this continuous law).
    Ddf(Vec<f64>),
    /// Empirical quantile.
    Var(SampleTarget, f64),
    /// Mean beyond the empirical quantile.
    Cte(SampleTarget, f64),
    /// Mean of `X_k` over replicates where `X_l` exceeds its empirical quantile.
    EconCte { k: usize, l: usize, q: f64 },
}

fn mean_se(values: &[f64]) -> McEstimate {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    McEstimate {
        estimate: mean,
        std_error: (var / m).sqrt(),
        samples: values.len(),
    }
}

fn check_level(q: f64, m: usize) -> Result<()> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::invalid(format!(
            "quantile level {q} is outside [0, 1)"
        )));
    }
    if (m as f64) * (1.0 - q) < MIN_TAIL_DRAWS {
        return Err(Error::InsufficientSample(format!(
            "{m} draws leave fewer than {MIN_TAIL_DRAWS} beyond level {q}"
        )));
    }
    Ok(())
}

/// Empirical quantile with a standard error from the order-statistic spread
/// `x_(mq ± sqrt(mq(1-q)))`.
fn quantile_se(sorted: &[f64], q: f64) -> McEstimate {
    let m = sorted.len();
    let at = |r: f64| sorted[(r.floor() as usize).min(m - 1)];
    let center = q * m as f64;
    let spread = (m as f64 * q * (1.0 - q)).sqrt();
    let lo = at((center - spread).max(0.0));
    let hi = at(center + spread);
    McEstimate {
        estimate: at(center),
        std_error: 0.5 * (hi - lo),
        samples: m,
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Monte Carlo estimate of `statistic` with its standard error.
pub fn mc_estimate(batch: &SampleBatch, statistic: &Statistic) -> Result<McEstimate> {
    let m = batch.len();
    if m < 2 {
        return Err(Error::InsufficientSample(format!(
            "need at least 2 draws, got {m}"
        )));
    }
    match statistic {
        Statistic::Mean(i) => Ok(mean_se(&batch.column(*i)?)),
        Statistic::Cov(k, l) => {
            let xs = batch.column(*k)?;
            let ys = batch.column(*l)?;
            let mx = xs.iter().sum::<f64>() / m as f64;
            let my = ys.iter().sum::<f64>() / m as f64;
            let prods: Vec<f64> = xs
                .iter()
                .zip(&ys)
                .map(|(x, y)| (x - mx) * (y - my))
                .collect();
            let mut est = mean_se(&prods);
            est.estimate *= m as f64 / (m as f64 - 1.0);
            Ok(est)
        }
        Statistic::Ddf(x) => {
            if x.len() != batch.n() {
                return Err(Error::Dimension(format!(
                    "point has {} coordinates, expected {}",
                    x.len(),
                    batch.n()
                )));
            }
            let hits = batch
                .rows()
                .filter(|r| r.iter().zip(x).all(|(v, t)| v >= t))
                .count();
            let p = hits as f64 / m as f64;
            Ok(McEstimate {
                estimate: p,
                std_error: (p * (1.0 - p) / m as f64).sqrt(),
                samples: m,
            })
        }
        Statistic::Var(target, q) => {
            check_level(*q, m)?;
            Ok(quantile_se(&sorted(target.values(batch)?), *q))
        }
        Statistic::Cte(target, q) => {
            check_level(*q, m)?;
            let v = sorted(target.values(batch)?);
            let var = quantile_se(&v, *q).estimate;
            let tail: Vec<f64> = v.iter().copied().filter(|&x| x > var).collect();
            if tail.len() < 2 {
                return Err(Error::InsufficientSample(format!(
                    "fewer than 2 draws beyond level {q}"
                )));
            }
            let t = mean_se(&tail);
            // influence-function variance of the tail mean, including the
            // estimated threshold
            let tail_var = t.std_error.powi(2) * tail.len() as f64;
            let se2 = (tail_var + q * (t.estimate - var).powi(2)) / (m as f64 * (1.0 - q));
            Ok(McEstimate {
                estimate: t.estimate,
                std_error: se2.sqrt(),
                samples: m,
            })
        }
        Statistic::EconCte { k, l, q } => {
            check_level(*q, m)?;
            let xs = batch.column(*k)?;
            let ys = batch.column(*l)?;
            let var = quantile_se(&sorted(ys.clone()), *q).estimate;
            let sel: Vec<f64> = xs
                .iter()
                .zip(&ys)
                .filter(|(_, &y)| y > var)
                .map(|(&x, _)| x)
                .collect();
            if sel.len() < 2 {
                return Err(Error::InsufficientSample(format!(
                    "fewer than 2 draws beyond level {q}"
                )));
            }
            Ok(mean_se(&sel))
        }
    }
}

/// Nearest-neighbour estimate of `E[X_k | X_l = x_l]`: the mean of `X_k`
/// over the `band` replicates whose `X_l` is closest to `x_l`. Returns the
/// estimate and the half-width of the `X_l` window actually used.
pub fn banded_conditional_mean(
    batch: &SampleBatch,
    k: usize,
    l: usize,
    x_l: f64,
    band: usize,
) -> Result<(McEstimate, f64)> {
    let xs = batch.column(k)?;
    let ys = batch.column(l)?;
    if band < 2 || band > xs.len() {
        return Err(Error::InsufficientSample(format!(
            "band of {band} draws does not fit a batch of {}",
            xs.len()
        )));
    }
    let mut order: Vec<usize> = (0..ys.len()).collect();
    order.select_nth_unstable_by(band - 1, |&a, &b| {
        (ys[a] - x_l).abs().total_cmp(&(ys[b] - x_l).abs())
    });
    let chosen: Vec<f64> = order[..band].iter().map(|&r| xs[r]).collect();
    let width = order[..band]
        .iter()
        .map(|&r| (ys[r] - x_l).abs())
        .fold(0.0, f64::max);
    Ok((mean_se(&chosen), width))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::portfolio::{build_portfolio, preset, Preset};

    fn small() -> ExposurePortfolio {
        build_portfolio(
            &[vec![1, 1, 0], vec![0, 1, 1]],
            &[2.0, 5.0],
            &[0.7, 1.3, 2.4],
        )
        .unwrap()
    }

    #[test]
    fn batches_are_reproducible() {
        let p = small();
        for rep in [Representation::BackgroundRisk, Representation::CommonShock] {
            let a = sample(&p, rep, 10_000, 7).unwrap();
            let b = sample(&p, rep, 10_000, 7).unwrap();
            assert_eq!(a, b);
            let c = sample(&p, rep, 10_000, 8).unwrap();
            assert_ne!(a.row(0), c.row(0));
            assert!(a.rows().all(|r| r.iter().all(|&x| x >= 0.0)));
        }
    }

    #[test]
    fn prefix_does_not_depend_on_batch_size() {
        let p = small();
        let a = sample_common_shock(&p, 5000, 3).unwrap();
        let b = sample_common_shock(&p, 9000, 3).unwrap();
        assert_eq!(a.row(4999), b.row(4999));
    }

    #[test]
    fn gamma_vector_mean() {
        let p = preset(Preset::Independent, 2, &[1.0, 1.0], &[0.3, 2.5, 1.0]).unwrap();
        let mut rng = block_rng(1, 0);
        let m = 40_000;
        let mut sum = [0.0; 2];
        for _ in 0..m {
            let xi = sample_gamma_vector(&p, &mut rng).unwrap();
            sum[0] += xi[0];
            sum[1] += xi[1];
        }
        assert!((sum[0] / m as f64 - 0.3).abs() < 0.02);
        assert!((sum[1] / m as f64 - 2.5).abs() < 0.05);
    }

    #[test]
    fn ddf_at_origin_is_one() {
        let b = sample_background_risk(&small(), 1000, 1).unwrap();
        let est = mc_estimate(&b, &Statistic::Ddf(vec![0.0, 0.0])).unwrap();
        assert_eq!(est.estimate, 1.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn tail_statistics_need_enough_draws() {
        let b = sample_background_risk(&small(), 100, 1).unwrap();
        assert!(matches!(
            mc_estimate(&b, &Statistic::Var(SampleTarget::Coordinate(1), 0.95)),
            Err(Error::InsufficientSample(_))
        ));
    }

    #[test]
    fn banding_reports_width() {
        let b = sample_common_shock(&small(), 20_000, 2).unwrap();
        let (est, width) = banded_conditional_mean(&b, 1, 2, 3.0, 500).unwrap();
        assert!(width > 0.0 && width < 3.0);
        assert!(est.estimate > 0.0);
    }
}
