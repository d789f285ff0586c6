//! The validated model object: exposure matrix, scales and factor shapes.

use std::fmt;

use crate::error::{Error, Result};

/// `n × (n+1)` matrix over `{0, 1}`; entry `(i, j)` says whether factor `j`
/// hits risk `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExposureMatrix {
    n: usize,
    entries: Vec<u8>,
}

impl ExposureMatrix {
    /// Builds the matrix from rows. Every row must have `n + 1` entries, each 0
    /// or 1, and at least one 1.
    pub fn new(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Dimension(
                "exposure matrix needs at least one row".into(),
            ));
        }
        let mut entries = Vec::with_capacity(n * (n + 1));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n + 1 {
                return Err(Error::Dimension(format!(
                    "row {} has {} entries, expected n + 1 = {}",
                    i + 1,
                    row.len(),
                    n + 1
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if v > 1 {
                    return Err(Error::invalid(format!(
                        "entry ({}, {}) is {v}; exposure entries must be 0 or 1",
                        i + 1,
                        j + 1
                    )));
                }
            }
            if row.iter().all(|&v| v == 0) {
                return Err(Error::invalid(format!(
                    "row {} has no exposure to any factor",
                    i + 1
                )));
            }
            entries.extend_from_slice(row);
        }
        Ok(ExposureMatrix { n, entries })
    }

    /// Builds an `n × (n+1)` matrix from a 0-based predicate.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let rows: Vec<Vec<u8>> = (0..n)
            .map(|i| (0..=n).map(|j| u8::from(f(i, j))).collect())
            .collect();
        Self::new(&rows)
    }

    /// Number of risks.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of factors, `n + 1`.
    pub fn factors(&self) -> usize {
        self.n + 1
    }

    /// Row `i` (0-based).
    pub fn row(&self, i: usize) -> &[u8] {
        let w = self.n + 1;
        &self.entries[i * w..(i + 1) * w]
    }

    /// `true` when factor `j` hits risk `i` (both 0-based).
    pub fn hits(&self, i: usize, j: usize) -> bool {
        self.entries[i * (self.n + 1) + j] == 1
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        self.entries.chunks(self.n + 1)
    }

    /// `true` when no risk is exposed to factor `j` (0-based).
    pub fn column_is_empty(&self, j: usize) -> bool {
        (0..self.n).all(|i| !self.hits(i, j))
    }
}

impl fmt::Display for ExposureMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.rows() {
            let cells: Vec<String> = row.iter().map(u8::to_string).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}

/// Named exposure patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Every risk loads on every factor: the classical Arnold model.
    Arnold,
    /// Risk `i` loads only on factor `i`; factor `n+1` is unused.
    Independent,
    /// `c_{i,i} = c_{i,n+1} = 1`: one idiosyncratic plus one common factor.
    FlexibleI,
    /// `c_{i,j} = 1` for `j <= i`; factor `n+1` is unused.
    FlexibleII,
    /// `c_{i,j} = 1` for `j <= i` plus the common factor `n+1`.
    Example13,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Arnold => "arnold",
            Preset::Independent => "independent",
            Preset::FlexibleI => "flexible_I",
            Preset::FlexibleII => "flexible_II",
            Preset::Example13 => "example_1_3",
        }
    }

    /// The preset's exposure matrix for dimension `n`.
    pub fn matrix(self, n: usize) -> Result<ExposureMatrix> {
        if n == 0 {
            return Err(Error::Dimension("preset dimension must be positive".into()));
        }
        ExposureMatrix::from_fn(n, |i, j| match self {
            Preset::Arnold => true,
            Preset::Independent => i == j,
            Preset::FlexibleI => i == j || j == n,
            Preset::FlexibleII => j <= i,
            Preset::Example13 => j <= i || j == n,
        })
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "arnold" => Ok(Preset::Arnold),
            "independent" => Ok(Preset::Independent),
            "flexible_i" | "flexible1" | "flexible_1" => Ok(Preset::FlexibleI),
            "flexible_ii" | "flexible2" | "flexible_2" => Ok(Preset::FlexibleII),
            "example_1_3" | "example13" => Ok(Preset::Example13),
            other => Err(Error::invalid(format!(
                "unknown preset '{other}' (expected arnold, independent, flexible_I, flexible_II or example_1_3)"
            ))),
        }
    }
}

/// Shape masses of a coordinate pair `(k, l)`: the factors they share and the
/// factors only one of them sees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDecomposition {
    pub shared: f64,
    pub only_k: f64,
    pub only_l: f64,
}

impl PairDecomposition {
    /// Tail index of `X_k`.
    pub fn index_k(&self) -> f64 {
        self.shared + self.only_k
    }

    /// Tail index of `X_l`.
    pub fn index_l(&self) -> f64 {
        self.shared + self.only_l
    }
}

/// Validated portfolio: exposure matrix `c`, scales `sigma` (one per risk)
/// and factor shapes `gamma` (one per factor). Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposurePortfolio {
    c: ExposureMatrix,
    sigma: Vec<f64>,
    gamma: Vec<f64>,
    marginal: Vec<f64>,
}

/// Builds and validates a portfolio from raw rows.
pub fn build_portfolio(
    rows: &[Vec<u8>],
    sigma: &[f64],
    gamma: &[f64],
) -> Result<ExposurePortfolio> {
    ExposurePortfolio::new(ExposureMatrix::new(rows)?, sigma.to_vec(), gamma.to_vec())
}

/// Builds a portfolio with a named exposure pattern.
pub fn preset(kind: Preset, n: usize, sigma: &[f64], gamma: &[f64]) -> Result<ExposurePortfolio> {
    ExposurePortfolio::new(kind.matrix(n)?, sigma.to_vec(), gamma.to_vec())
}

impl ExposurePortfolio {
    pub fn new(c: ExposureMatrix, sigma: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        let n = c.n();
        if sigma.len() != n {
            return Err(Error::Dimension(format!(
                "sigma has {} entries, expected n = {n}",
                sigma.len()
            )));
        }
        if gamma.len() != n + 1 {
            return Err(Error::Dimension(format!(
                "gamma has {} entries, expected n + 1 = {}",
                gamma.len(),
                n + 1
            )));
        }
        if let Some(i) = sigma.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::invalid(format!(
                "sigma[{}] = {} must be positive",
                i + 1,
                sigma[i]
            )));
        }
        if let Some(j) = gamma.iter().position(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::invalid(format!(
                "gamma[{}] = {} must be positive",
                j + 1,
                gamma[j]
            )));
        }
        let marginal = c
            .rows()
            .map(|row| {
                row.iter()
                    .zip(&gamma)
                    .filter(|(&e, _)| e == 1)
                    .map(|(_, g)| g)
                    .sum()
            })
            .collect();
        Ok(ExposurePortfolio {
            c,
            sigma,
            gamma,
            marginal,
        })
    }

    pub fn n(&self) -> usize {
        self.c.n()
    }

    pub fn exposure(&self) -> &ExposureMatrix {
        &self.c
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// All marginal tail indices, 0-based.
    pub fn marginal_indices(&self) -> &[f64] {
        &self.marginal
    }

    /// Converts a 1-based coordinate into a 0-based index.
    pub fn coord(&self, i: usize) -> Result<usize> {
        if i == 0 || i > self.n() {
            Err(Error::CoordinateOutOfRange {
                index: i,
                n: self.n(),
            })
        } else {
            Ok(i - 1)
        }
    }

    /// Scale of risk `i` (1-based).
    pub fn scale(&self, i: usize) -> Result<f64> {
        Ok(self.sigma[self.coord(i)?])
    }

    /// Tail index `sum_j c_ij gamma_j` of risk `i` (1-based).
    pub fn marginal_index(&self, i: usize) -> Result<f64> {
        Ok(self.marginal[self.coord(i)?])
    }

    /// Shared and exclusive shape masses of the pair `(k, l)` (1-based).
    pub fn pair_decomposition(&self, k: usize, l: usize) -> Result<PairDecomposition> {
        let (ki, li) = (self.coord(k)?, self.coord(l)?);
        if ki == li {
            return Err(Error::invalid(format!(
                "pair decomposition needs distinct coordinates, got k = l = {k}"
            )));
        }
        let mut d = PairDecomposition {
            shared: 0.0,
            only_k: 0.0,
            only_l: 0.0,
        };
        for (j, g) in self.gamma.iter().enumerate() {
            match (self.c.hits(ki, j), self.c.hits(li, j)) {
                (true, true) => d.shared += g,
                (true, false) => d.only_k += g,
                (false, true) => d.only_l += g,
                (false, false) => {}
            }
        }
        Ok(d)
    }

    /// Same exposure and shapes, scales replaced.
    pub fn with_sigma(&self, sigma: Vec<f64>) -> Result<Self> {
        Self::new(self.c.clone(), sigma, self.gamma.clone())
    }

    /// Same exposure and scales, shapes replaced.
    pub fn with_gamma(&self, gamma: Vec<f64>) -> Result<Self> {
        Self::new(self.c.clone(), self.sigma.clone(), gamma)
    }

    /// `true` when the exposure pattern equals the preset's.
    pub fn matches_preset(&self, kind: Preset) -> bool {
        kind.matrix(self.n()).map(|m| m == self.c).unwrap_or(false)
    }
}

/// Marginal tail index of risk `i` (1-based).
pub fn marginal_index(p: &ExposurePortfolio, i: usize) -> Result<f64> {
    p.marginal_index(i)
}

/// Pair decomposition of risks `k` and `l` (1-based).
pub fn pair_decomposition(p: &ExposurePortfolio, k: usize, l: usize) -> Result<PairDecomposition> {
    p.pair_decomposition(k, l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn case1() -> ExposurePortfolio {
        let rows = vec![vec![1, 1, 0, 0]; 3];
        build_portfolio(&rows, &[122.39; 3], &[1.67; 4]).unwrap()
    }

    fn case2() -> ExposurePortfolio {
        let rows = vec![vec![1, 1, 0, 0], vec![1, 0, 1, 0], vec![1, 0, 0, 1]];
        build_portfolio(&rows, &[122.39; 3], &[1.67; 4]).unwrap()
    }

    #[test]
    fn case1_marginal_indices() {
        let p = case1();
        for i in 1..=3 {
            assert!((p.marginal_index(i).unwrap() - 3.34).abs() < 1e-12);
        }
        assert!(matches!(
            p.marginal_index(0),
            Err(Error::CoordinateOutOfRange { .. })
        ));
        assert!(matches!(
            p.marginal_index(4),
            Err(Error::CoordinateOutOfRange { .. })
        ));
    }

    #[test]
    fn validation_errors_name_the_offender() {
        let err =
            build_portfolio(&[vec![1, 0, 0], vec![0, 0, 0]], &[1.0, 1.0], &[1.0; 3]).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
        let err =
            build_portfolio(&[vec![1, 0], vec![0, 1, 0]], &[1.0, 1.0], &[1.0; 3]).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)) && err.to_string().contains("row 1"));
        let err =
            build_portfolio(&[vec![1, 2, 0], vec![0, 1, 0]], &[1.0, 1.0], &[1.0; 3]).unwrap_err();
        assert!(err.to_string().contains("(1, 2)"), "{err}");
        let err =
            build_portfolio(&[vec![1, 0, 0], vec![0, 1, 0]], &[1.0, -1.0], &[1.0; 3]).unwrap_err();
        assert!(err.to_string().contains("sigma[2]"), "{err}");
        let err = build_portfolio(
            &[vec![1, 0, 0], vec![0, 1, 0]],
            &[1.0, 1.0],
            &[1.0, 0.0, 1.0],
        )
        .unwrap_err();
        assert!(err.to_string().contains("gamma[2]"), "{err}");
        assert!(matches!(
            build_portfolio(&[vec![1, 0, 0], vec![0, 1, 0]], &[1.0], &[1.0; 3]),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            build_portfolio(&[vec![1, 0, 0], vec![0, 1, 0]], &[1.0, 1.0], &[1.0; 2]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn empty_columns_are_allowed() {
        let p = preset(Preset::Independent, 3, &[1.0; 3], &[2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!(p.exposure().column_is_empty(3));
        assert_eq!(p.marginal_indices(), &[2.0, 3.0, 4.0]);
    }

    #[test]
    fn case2_pair_decomposition() {
        let d = case2().pair_decomposition(1, 2).unwrap();
        assert!((d.shared - 1.67).abs() < 1e-12);
        assert!((d.only_k - 1.67).abs() < 1e-12);
        assert!((d.only_l - 1.67).abs() < 1e-12);
        assert!(case2().pair_decomposition(2, 2).is_err());
    }

    #[test]
    fn disjoint_and_identical_rows() {
        let p = preset(Preset::Independent, 2, &[1.0; 2], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(p.pair_decomposition(1, 2).unwrap().shared, 0.0);
        let d = case1().pair_decomposition(1, 3).unwrap();
        assert_eq!((d.only_k, d.only_l), (0.0, 0.0));
    }

    #[test]
    fn preset_patterns() {
        let arnold = Preset::Arnold.matrix(3).unwrap();
        assert!(arnold.rows().all(|r| r.iter().all(|&e| e == 1)));
        let flex = Preset::FlexibleI.matrix(3).unwrap();
        assert_eq!(flex.row(0), &[1, 0, 0, 1]);
        assert_eq!(flex.row(2), &[0, 0, 1, 1]);
        let flex2 = Preset::FlexibleII.matrix(3).unwrap();
        assert_eq!(flex2.row(1), &[1, 1, 0, 0]);
        let ex = Preset::Example13.matrix(3).unwrap();
        assert_eq!(ex.row(1), &[1, 1, 0, 1]);
        let ind = Preset::Independent.matrix(2).unwrap();
        assert_eq!(ind.row(0), &[1, 0, 0]);
        assert_eq!(ind.row(1), &[0, 1, 0]);
        assert_eq!("flexible_I".parse::<Preset>().unwrap(), Preset::FlexibleI);
        assert!("bogus".parse::<Preset>().is_err());
    }

    #[test]
    fn flexible_i_is_case2_up_to_column_order() {
        // the systemic factor sits in the last column instead of the first
        let flex = preset(Preset::FlexibleI, 3, &[122.39; 3], &[1.67; 4]).unwrap();
        let c2 = case2();
        for (k, l) in [(1, 2), (1, 3), (2, 3)] {
            assert_eq!(
                flex.pair_decomposition(k, l).unwrap(),
                c2.pair_decomposition(k, l).unwrap()
            );
        }
        assert_eq!(flex.marginal_indices(), c2.marginal_indices());
    }

    #[test]
    fn arnold_margins_coincide() {
        let p = preset(
            Preset::Arnold,
            4,
            &[1.0, 2.0, 3.0, 4.0],
            &[0.5, 0.7, 1.1, 0.2, 0.9],
        )
        .unwrap();
        let total = 0.5 + 0.7 + 1.1 + 0.2 + 0.9;
        for i in 1..=4 {
            assert!((p.marginal_index(i).unwrap() - total).abs() < 1e-12);
        }
    }

    fn arb_portfolio() -> impl Strategy<Value = ExposurePortfolio> {
        (1usize..=8).prop_flat_map(|n| {
            (
                proptest::collection::vec(proptest::collection::vec(0u8..=1, n + 1), n),
                proptest::collection::vec(0.1f64..10.0, n),
                proptest::collection::vec(0.05f64..5.0, n + 1),
            )
                .prop_map(move |(mut rows, sigma, gamma)| {
                    for (i, row) in rows.iter_mut().enumerate() {
                        if row.iter().all(|&e| e == 0) {
                            row[i] = 1;
                        }
                    }
                    build_portfolio(&rows, &sigma, &gamma).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn pair_masses_reproduce_marginal_indices(p in arb_portfolio()) {
            let n = p.n();
            for k in 1..=n {
                for l in 1..=n {
                    if k == l { continue; }
                    let d = p.pair_decomposition(k, l).unwrap();
                    prop_assert!(d.shared >= 0.0 && d.only_k >= 0.0 && d.only_l >= 0.0);
                    let gk = p.marginal_index(k).unwrap();
                    let gl = p.marginal_index(l).unwrap();
                    prop_assert!((d.index_k() - gk).abs() <= 1e-12 * gk);
                    prop_assert!((d.index_l() - gl).abs() <= 1e-12 * gl);
                }
            }
        }
    }
}
