//! Scenario configuration files.
//!
//! Line-oriented `key = value` text. `#` starts a comment. Lists are
//! separated by whitespace or commas.
//!
//! ```text
//! name    = case2
//! row     = 1 1 0 0        # one line per risk, n + 1 entries
//! row     = 1 0 1 0
//! row     = 1 0 0 1
//! sigma   = 122.39         # one value is broadcast to every risk
//! gamma   = 1.67           # one value is broadcast to every factor
//! grid    = linspace(0, 0.99, 100)
//! samples = 100000
//! seed    = 42
//! ```
//!
//! Instead of `row` lines, `preset = flexible_I` with `n = 3` picks a named
//! exposure pattern. `calibrate = p horizon` replaces `sigma` by the scales
//! whose margins default with probability `p` before `horizon`.
//! `mu_sweep = 1.67 1.5 1.3` adds a sweep: for each listed `mu` all shapes
//! are multiplied by `mu / 1.67` (the first listed value is the reference)
//! and `sigma` is recalibrated. `outputs` restricts the emitted reports.

use std::fmt;
use std::path::Path;

use crate::error::Error;
use crate::portfolio::{build_portfolio, ExposurePortfolio, Preset};
use crate::risk::QuantileGrid;

use super::calibrate_sigma;

/// Parse or validation failure, located in the source text.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}, column {}: {}",
            self.line, self.column, self.message
        )
    }
}

impl std::error::Error for ConfigError {}

/// Reports a scenario run can emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Output {
    Margins,
    Minima,
    Maxima,
    Correlation,
    Economic,
    MonteCarlo,
    MuSweep,
}

impl Output {
    pub const ALL: [Output; 7] = [
        Output::Margins,
        Output::Minima,
        Output::Maxima,
        Output::Correlation,
        Output::Economic,
        Output::MonteCarlo,
        Output::MuSweep,
    ];

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "margins" => Output::Margins,
            "minima" => Output::Minima,
            "maxima" => Output::Maxima,
            "correlation" => Output::Correlation,
            "economic" => Output::Economic,
            "mc" => Output::MonteCarlo,
            "mu_sweep" => Output::MuSweep,
            _ => return None,
        })
    }
}

/// Default probability and horizon used to pin down the scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub p_default: f64,
    pub horizon: f64,
}

impl Calibration {
    /// Scales matching this calibration for every margin of `p`.
    pub fn apply(&self, p: &ExposurePortfolio) -> crate::Result<ExposurePortfolio> {
        let sigma = p
            .marginal_indices()
            .iter()
            .map(|&g| calibrate_sigma(self.p_default, self.horizon, g))
            .collect::<crate::Result<Vec<_>>>()?;
        p.with_sigma(sigma)
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub name: String,
    pub portfolio: ExposurePortfolio,
    pub grid: QuantileGrid,
    pub samples: usize,
    pub seed: u64,
    pub outputs: Vec<Output>,
    pub calibration: Option<Calibration>,
    pub mu_sweep: Vec<f64>,
}

impl ScenarioConfig {
    pub fn wants(&self, o: Output) -> bool {
        self.outputs.contains(&o)
    }
}

pub const DEFAULT_SEED: u64 = 20_160_101;

/// Reads and parses a config file.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        line: 0,
        column: 0,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let fallback = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scenario");
    parse_config_str(&text, fallback)
}

/// A located token.
#[derive(Debug, Clone, Copy)]
struct Tok<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

impl Tok<'_> {
    fn err(&self, message: impl Into<String>) -> ConfigError {
        ConfigError {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }

    fn number(&self) -> Result<f64, ConfigError> {
        self.text
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.err(format!("expected a number, found '{}'", self.text)))
    }

    fn integer(&self) -> Result<u64, ConfigError> {
        self.text.parse::<u64>().map_err(|_| {
            self.err(format!(
                "expected a nonnegative integer, found '{}'",
                self.text
            ))
        })
    }
}

struct Entry<'a> {
    key: Tok<'a>,
    value: Tok<'a>,
    items: Vec<Tok<'a>>,
}

fn split_items(value: &str, line: usize, offset: usize) -> Vec<Tok<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in value.char_indices() {
        let sep = ch.is_whitespace() || ch == ',';
        match (sep, start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push(Tok {
                    text: &value[s..i],
                    line,
                    column: offset + s,
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Tok {
            text: &value[s..],
            line,
            column: offset + s,
        });
    }
    out
}

fn lex(text: &str) -> Result<Vec<Entry<'_>>, ConfigError> {
    let mut entries = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let lead = body.len() - body.trim_start().len();
        let Some(eq) = body.find('=') else {
            return Err(ConfigError {
                line,
                column: lead + 1,
                message: format!("expected 'key = value', found '{}'", body.trim()),
            });
        };
        let key = body[..eq].trim();
        if key.is_empty() {
            return Err(ConfigError {
                line,
                column: eq + 1,
                message: "missing key before '='".into(),
            });
        }
        let rest = &body[eq + 1..];
        let vlead = rest.len() - rest.trim_start().len();
        let value = rest.trim();
        let vcol = eq + 2 + vlead;
        if value.is_empty() {
            return Err(ConfigError {
                line,
                column: vcol,
                message: format!("key '{key}' has no value"),
            });
        }
        entries.push(Entry {
            key: Tok {
                text: key,
                line,
                column: lead + 1,
            },
            value: Tok {
                text: value,
                line,
                column: vcol,
            },
            items: split_items(value, line, vcol),
        });
    }
    Ok(entries)
}

/// Parses `linspace(a, b, n)` or an explicit list of levels.
pub fn parse_grid(text: &str) -> Result<QuantileGrid, String> {
    let t = text.trim();
    if let Some(inner) = t
        .strip_prefix("linspace(")
        .and_then(|r| r.strip_suffix(')'))
    {
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!(
                "linspace needs three arguments, got {}",
                parts.len()
            ));
        }
        let a: f64 = parts[0]
            .parse()
            .map_err(|_| format!("bad linspace start '{}'", parts[0]))?;
        let b: f64 = parts[1]
            .parse()
            .map_err(|_| format!("bad linspace end '{}'", parts[1]))?;
        let n: usize = parts[2]
            .parse()
            .map_err(|_| format!("bad linspace count '{}'", parts[2]))?;
        return QuantileGrid::linspace(a, b, n).map_err(|e| e.to_string());
    }
    if t.is_empty() || t == "none" {
        return QuantileGrid::new(Vec::new()).map_err(|e| e.to_string());
    }
    let levels = t
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| format!("expected a quantile level, found '{s}'"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    QuantileGrid::new(levels).map_err(|e| e.to_string())
}

fn numbers(e: &Entry<'_>) -> Result<Vec<f64>, ConfigError> {
    e.items.iter().map(Tok::number).collect()
}

fn single<'a>(e: &Entry<'a>) -> Result<Tok<'a>, ConfigError> {
    match e.items.as_slice() {
        [one] => Ok(*one),
        _ => Err(e
            .value
            .err(format!("key '{}' takes a single value", e.key.text))),
    }
}

fn broadcast(
    values: Vec<f64>,
    len: usize,
    key: &Tok<'_>,
    what: &str,
) -> Result<Vec<f64>, ConfigError> {
    match values.len() {
        1 => Ok(vec![values[0]; len]),
        l if l == len => Ok(values),
        l => Err(key.err(format!("{what} has {l} values, expected 1 or {len}"))),
    }
}

/// Parses config text. `fallback_name` is used when no `name` key is given.
pub fn parse_config_str(text: &str, fallback_name: &str) -> Result<ScenarioConfig, ConfigError> {
    let entries = lex(text)?;
    let mut name = None;
    let mut rows: Vec<(Tok<'_>, Vec<u8>)> = Vec::new();
    let mut preset: Option<(Tok<'_>, Preset)> = None;
    let mut dim: Option<(Tok<'_>, usize)> = None;
    let mut sigma: Option<(Tok<'_>, Vec<f64>)> = None;
    let mut gamma: Option<(Tok<'_>, Vec<f64>)> = None;
    let mut calibration = None;
    let mut grid = None;
    let mut samples = 0usize;
    let mut seed = DEFAULT_SEED;
    let mut outputs = None;
    let mut mu_sweep = Vec::new();

    for e in &entries {
        match e.key.text {
            "name" => name = Some(e.value.text.to_string()),
            "row" => {
                let row = e
                    .items
                    .iter()
                    .map(|t| match t.text {
                        "0" => Ok(0u8),
                        "1" => Ok(1u8),
                        other => {
                            Err(t.err(format!("exposure entries must be 0 or 1, found '{other}'")))
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                rows.push((e.key, row));
            }
            "preset" => {
                let t = single(e)?;
                let p = t
                    .text
                    .parse::<Preset>()
                    .map_err(|err| t.err(err.to_string()))?;
                preset = Some((e.key, p));
            }
            "n" => {
                let t = single(e)?;
                let n = t.integer()? as usize;
                if n == 0 {
                    return Err(t.err("dimension must be positive"));
                }
                dim = Some((e.key, n));
            }
            "sigma" => sigma = Some((e.key, numbers(e)?)),
            "gamma" => gamma = Some((e.key, numbers(e)?)),
            "calibrate" => {
                let v = numbers(e)?;
                if v.len() != 2 {
                    return Err(e.value.err("calibrate takes 'p horizon'"));
                }
                if !(v[0] > 0.0 && v[0] < 1.0) {
                    return Err(e.items[0].err("default probability must lie in (0, 1)"));
                }
                if !(v[1] > 0.0) {
                    return Err(e.items[1].err("horizon must be positive"));
                }
                calibration = Some(Calibration {
                    p_default: v[0],
                    horizon: v[1],
                });
            }
            "grid" => grid = Some(parse_grid(e.value.text).map_err(|m| e.value.err(m))?),
            "samples" => samples = single(e)?.integer()? as usize,
            "seed" => seed = single(e)?.integer()?,
            "mc" => {
                // shorthand: mc = samples [seed]
                match e.items.as_slice() {
                    [m] => samples = m.integer()? as usize,
                    [m, s] => {
                        samples = m.integer()? as usize;
                        seed = s.integer()?;
                    }
                    _ => return Err(e.value.err("mc takes 'samples [seed]'")),
                }
            }
            "outputs" => {
                let list = e
                    .items
                    .iter()
                    .map(|t| {
                        if t.text == "all" {
                            return Ok(Output::ALL.to_vec());
                        }
                        Output::parse(t.text).map(|o| vec![o]).ok_or_else(|| {
                            t.err(format!(
                                "unknown output '{}' (expected margins, minima, maxima, correlation, economic, mc, mu_sweep or all)",
                                t.text
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                outputs = Some(list.into_iter().flatten().collect::<Vec<_>>());
            }
            "mu_sweep" => {
                mu_sweep = numbers(e)?;
                if let Some(i) = mu_sweep.iter().position(|m| !(*m > 0.0)) {
                    return Err(e.items[i].err("sweep values must be positive"));
                }
            }
            other => return Err(e.key.err(format!("unknown key '{other}'"))),
        }
    }

    let origin = entries.first().map(|e| e.key).unwrap_or(Tok {
        text: "",
        line: 1,
        column: 1,
    });
    let (matrix_key, matrix_rows): (Tok<'_>, Vec<Vec<u8>>) = match (&preset, rows.is_empty()) {
        (Some((k, _)), false) => return Err(k.err("use either 'preset' or 'row' lines, not both")),
        (Some((k, p)), true) => {
            let Some((_, n)) = dim else {
                return Err(k.err("'preset' needs the dimension 'n'"));
            };
            let m = p.matrix(n).map_err(|e| k.err(e.to_string()))?;
            (*k, m.rows().map(<[u8]>::to_vec).collect())
        }
        (None, true) => {
            return Err(origin.err("no exposure matrix: give 'row' lines or a 'preset'"))
        }
        (None, false) => {
            let n = rows.len();
            for (i, (k, r)) in rows.iter().enumerate() {
                if r.len() != n + 1 {
                    return Err(k.err(format!(
                        "row {} has {} entries, expected n + 1 = {}",
                        i + 1,
                        r.len(),
                        n + 1
                    )));
                }
            }
            if let Some((k, d)) = dim {
                if d != n {
                    return Err(k.err(format!("n = {d} but {n} rows were given")));
                }
            }
            (rows[0].0, rows.iter().map(|(_, r)| r.clone()).collect())
        }
    };
    let n = matrix_rows.len();
    let Some((gamma_key, gamma)) = gamma else {
        return Err(origin.err("missing 'gamma'"));
    };
    let gamma = broadcast(gamma, n + 1, &gamma_key, "gamma")?;
    let (sigma_key, sigma) = match (sigma, calibration) {
        (Some((k, s)), _) => (k, broadcast(s, n, &k, "sigma")?),
        // placeholder scales, replaced by the calibration below
        (None, Some(_)) => (matrix_key, vec![1.0; n]),
        (None, None) => return Err(origin.err("missing 'sigma' (or 'calibrate')")),
    };

    let mut portfolio = build_portfolio(&matrix_rows, &sigma, &gamma).map_err(|e| {
        let msg = e.to_string();
        let at = if msg.contains("sigma") {
            sigma_key
        } else if msg.contains("gamma") {
            gamma_key
        } else if let Some(r) = row_in(&msg) {
            rows.get(r - 1).map(|(k, _)| *k).unwrap_or(matrix_key)
        } else {
            matrix_key
        };
        at.err(msg)
    })?;
    if let Some(c) = calibration {
        portfolio = c
            .apply(&portfolio)
            .map_err(|e| sigma_key.err(e.to_string()))?;
    }
    let mut outputs = outputs.unwrap_or_else(|| Output::ALL.to_vec());
    if mu_sweep.is_empty() || calibration.is_none() {
        outputs.retain(|o| *o != Output::MuSweep);
    }
    if samples == 0 {
        outputs.retain(|o| *o != Output::MonteCarlo);
    }
    Ok(ScenarioConfig {
        name: name.unwrap_or_else(|| fallback_name.to_string()),
        portfolio,
        grid: match grid {
            Some(g) => g,
            None => QuantileGrid::linspace(0.0, 0.99, 100).expect("default grid is valid"),
        },
        samples,
        seed,
        outputs,
        calibration,
        mu_sweep,
    })
}

/// Row number quoted in a validation message such as "row 2 has ...".
fn row_in(msg: &str) -> Option<usize> {
    let rest = msg.split("row ").nth(1)?;
    rest.split(|c: char| !c.is_ascii_digit())
        .next()?
        .parse()
        .ok()
}

impl From<ConfigError> for Error {
    fn from(e: ConfigError) -> Self {
        Error::InvalidArgument(e.to_string())
    }
}
