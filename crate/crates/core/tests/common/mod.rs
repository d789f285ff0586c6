//! Numerical oracles shared by the integration tests: adaptive
//! Gauss–Kronrod quadrature and mixed finite differences. They only use
//! the joint survival function, never the closed forms under test.
#![allow(dead_code)]

use mvpareto::dist::joint_ddf;
use mvpareto::ExposurePortfolio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod panel with its embedded 7-point Gauss estimate.
fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive integral of `f` over `[a, b]`, bisecting the panel with the
/// largest error until the total falls below `tol` (absolute or relative).
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let mut panels = vec![{
        let (v, e) = gk15(&mut f, a, b);
        (a, b, v, e)
    }];
    for _ in 0..2000 {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= tol * total.abs() || err < 1e-300 {
            break;
        }
        let worst = (0..panels.len())
            .max_by(|&i, &j| panels[i].3.total_cmp(&panels[j].3))
            .unwrap();
        let (lo, hi, _, _) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
    }
    panels.iter().map(|p| p.2).sum()
}

/// `∫_a^∞ f` through `x = a + scale·t/(1-t)`.
pub fn integrate_tail(mut f: impl FnMut(f64) -> f64, a: f64, scale: f64, tol: f64) -> f64 {
    integrate(
        |t| {
            if t >= 1.0 {
                return 0.0;
            }
            let u = 1.0 - t;
            let v = f(a + scale * t / u) * scale / (u * u);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        tol,
    )
}

/// `∫_0^∞ ∫_0^∞ f(x, y) dy dx` with the same map on both axes.
pub fn integrate_quadrant(f: impl Fn(f64, f64) -> f64, sx: f64, sy: f64, tol: f64) -> f64 {
    integrate_tail(
        |x| integrate_tail(|y| f(x, y), 0.0, sy, tol * 0.1),
        0.0,
        sx,
        tol,
    )
}

/// `(-1)^n ∂ⁿF/∂x₁…∂xₙ` by central differences over the 2ⁿ corners.
fn corner_difference(f: &impl Fn(&[f64]) -> f64, x: &[f64], h: &[f64]) -> f64 {
    let n = x.len();
    let mut acc = 0.0;
    let mut y = vec![0.0; n];
    for mask in 0u32..(1 << n) {
        let mut sign = 1.0;
        for i in 0..n {
            if mask >> i & 1 == 1 {
                y[i] = x[i] + h[i];
            } else {
                y[i] = x[i] - h[i];
                sign = -sign;
            }
        }
        acc += sign * f(&y);
    }
    let denom: f64 = h.iter().map(|h| 2.0 * h).product();
    let parity = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    parity * acc / denom
}

/// Density implied by a survival function: the mixed difference with one
/// Richardson step, which cancels the `h²` error term.
pub fn density_from_survival(f: impl Fn(&[f64]) -> f64, x: &[f64], h: &[f64]) -> f64 {
    let coarse = corner_difference(&f, x, h);
    let half: Vec<f64> = h.iter().map(|h| 0.5 * h).collect();
    let fine = corner_difference(&f, x, &half);
    (4.0 * fine - coarse) / 3.0
}

/// Survival of the minimum over all coordinates, straight from the joint law.
pub fn minima_survival(p: &ExposurePortfolio, x: f64) -> f64 {
    joint_ddf(p, &vec![x; p.n()]).unwrap()
}

/// Survival of the maximum by inclusion–exclusion over joint survivals.
pub fn maxima_survival(p: &ExposurePortfolio, x: f64) -> f64 {
    let n = p.n();
    let mut acc = 0.0;
    let mut pt = vec![0.0; n];
    for mask in 1u32..(1 << n) {
        for (i, v) in pt.iter_mut().enumerate() {
            *v = if mask >> i & 1 == 1 { x } else { 0.0 };
        }
        let sign = if mask.count_ones() % 2 == 1 {
            1.0
        } else {
            -1.0
        };
        acc += sign * joint_ddf(p, &pt).unwrap();
    }
    acc
}

/// `E[X | X > v]` from a survival function and its quantile `v`.
pub fn tail_mean(survival: impl Fn(f64) -> f64, v: f64, q: f64, scale: f64) -> f64 {
    v + integrate_tail(survival, v, scale, 1e-11) / (1.0 - q)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// The four portfolios of the default-time study, in the order
/// case 1, case 2, case 3, independent.
pub fn study_portfolios() -> Vec<(&'static str, ExposurePortfolio)> {
    let sigma = [122.39; 3];
    let g = [1.67; 4];
    let case = |rows: [[u8; 4]; 3]| {
        let rows: Vec<Vec<u8>> = rows.iter().map(|r| r.to_vec()).collect();
        mvpareto::build_portfolio(&rows, &sigma, &g).unwrap()
    };
    vec![
        ("case1", case([[1, 1, 0, 0], [1, 1, 0, 0], [1, 1, 0, 0]])),
        ("case2", case([[1, 1, 0, 0], [1, 0, 1, 0], [1, 0, 0, 1]])),
        ("case3", case([[1, 1, 0, 0], [1, 1, 0, 0], [1, 0, 1, 0]])),
        (
            "independent",
            mvpareto::preset(
                mvpareto::Preset::Independent,
                3,
                &sigma,
                &[3.34, 3.34, 3.34, 3.34],
            )
            .unwrap(),
        ),
    ]
}

/// Random portfolio with `n` risks, scales in `[50, 200]` and factor shapes
/// in `shapes`. Every row gets at least one factor.
pub fn random_portfolio(rng: &mut impl Rng, n: usize, shapes: (f64, f64)) -> ExposurePortfolio {
    let rows: Vec<Vec<u8>> = (0..n)
        .map(|_| loop {
            let row: Vec<u8> = (0..=n).map(|_| rng.random_bool(0.5) as u8).collect();
            if row.contains(&1) {
                break row;
            }
        })
        .collect();
    let sigma: Vec<f64> = (0..n).map(|_| rng.random_range(50.0..200.0)).collect();
    let gamma: Vec<f64> = (0..=n)
        .map(|_| rng.random_range(shapes.0..shapes.1))
        .collect();
    mvpareto::build_portfolio(&rows, &sigma, &gamma).unwrap()
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
