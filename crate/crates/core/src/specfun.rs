//! Special-function kernels: log-gamma, Pochhammer symbols, the Gauss
//! hypergeometric series and `3F2` at unit argument.
//!
//! Every series returns a [`SeriesResult`] carrying a bound on the
//! truncation error. For `2F1` on `[0, 1)` the bound comes from a geometric
//! majorant of the term ratio; near `z = 1` with `b = 1` a continued
//! fraction takes over and reports its last correction instead. At unit argument the terms only decay
//! polynomially, so the tail is bracketed between two telescoping
//! gamma-ratio series whose term ratios provably sandwich the true ratio.

use crate::error::{Error, Result};

/// Relative tolerance the series aim for.
pub const SERIES_EPS: f64 = 1e-14;

/// Hard cap on the number of summed terms.
pub const MAX_TERMS: usize = 1_000_000;

/// At the term cap a unit-argument sum is still accepted if its certified
/// relative bound is below this value.
pub const CAP_ACCEPT_REL: f64 = 1e-10;

/// Above this order Pochhammer symbols switch from a direct product to log-gamma.
const DIRECT_PRODUCT_MAX: u32 = 4096;

/// Value of a truncated series together with a bound on what was left out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesResult {
    pub value: f64,
    pub terms_used: usize,
    pub tail_bound: f64,
}

impl SeriesResult {
    fn exact(value: f64) -> Self {
        SeriesResult {
            value,
            terms_used: 1,
            tail_bound: 0.0,
        }
    }

    fn scaled(self, factor: f64) -> Self {
        SeriesResult {
            value: self.value * factor,
            terms_used: self.terms_used,
            tail_bound: self.tail_bound * factor.abs(),
        }
    }
}

/// Natural log of `|Γ(x)|`.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma_r(x).0
}

/// Rising factorial `(a)_n = Γ(a+n)/Γ(a)` for `a > 0`.
pub fn pochhammer(a: f64, n: u32) -> Result<f64> {
    check_pochhammer_base(a)?;
    if n <= DIRECT_PRODUCT_MAX {
        let mut prod = 1.0;
        for k in 0..n {
            prod *= a + f64::from(k);
        }
        Ok(prod)
    } else {
        Ok(ln_pochhammer(a, n)?.exp())
    }
}

/// `ln (a)_n`, usable where `(a)_n` itself overflows.
pub fn ln_pochhammer(a: f64, n: u32) -> Result<f64> {
    check_pochhammer_base(a)?;
    if n <= DIRECT_PRODUCT_MAX {
        Ok((0..n).map(|k| (a + f64::from(k)).ln()).sum())
    } else {
        Ok(ln_gamma(a + f64::from(n)) - ln_gamma(a))
    }
}

fn check_pochhammer_base(a: f64) -> Result<()> {
    if a.is_finite() && a > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "Pochhammer base must be positive, got {a}"
        )))
    }
}

/// Gauss hypergeometric `2F1(a, b; c; z)` for `z < 1`.
///
/// Negative arguments go through the Pfaff transformation
/// `2F1(a,b;c;z) = (1-z)^(-b) 2F1(c-a, b; c; z/(z-1))`, which maps them into
/// `[0, 1)` and keeps every term of the evaluated series nonnegative when
/// `c >= a`.
pub fn gauss_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<SeriesResult> {
    if !(a.is_finite() && a >= 0.0) {
        return Err(Error::invalid(format!("2F1 requires a >= 0, got {a}")));
    }
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::invalid(format!("2F1 requires b > 0, got {b}")));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::invalid(format!("2F1 requires c > 0, got {c}")));
    }
    if z.is_nan() {
        return Err(Error::invalid("2F1 argument is NaN"));
    }
    if z >= 1.0 {
        return Err(Error::NonConvergence(format!(
            "2F1 series diverges or sits on its boundary at z = {z}; use gauss_2f1_unit for z = 1"
        )));
    }
    if a == 0.0 || z == 0.0 {
        return Ok(SeriesResult::exact(1.0));
    }
    // near the branch point the series crawls; 2F1(a, 1; c; z) has a
    // continued fraction that converges on the whole cut plane
    let series_arg = if z < 0.0 { z / (z - 1.0) } else { z };
    if series_arg > CF_SWITCH && c > 1.0 && (a == 1.0 || b == 1.0) {
        let other = if b == 1.0 { a } else { b };
        return gauss_2f1_cf(other, c, z);
    }
    if z < 0.0 {
        let w = z / (z - 1.0);
        let prefactor = (-b * (-z).ln_1p()).exp();
        return Ok(sum_2f1(c - a, b, c, w)?.scaled(prefactor));
    }
    sum_2f1(a, b, c, z)
}

/// Series argument above which `2F1(a, 1; c; z)` switches to the continued fraction.
const CF_SWITCH: f64 = 0.9;

/// `2F1(a, 1; c; z)` for `c > 1`, `z < 1` from Gauss's continued fraction
///
/// ```text
/// (c-1) / 2F1(a, 1; c; z) = t_0 - u_1 z / (t_1 - u_2 z / (t_2 - ...))
/// t_k = c - 1 + k,  u_{2m+1} = (a+m)(c-1+m),  u_{2m} = m (c-1-a+m)
/// ```
///
/// The fraction is evaluated backward, which avoids the rounding drift of
/// forward products over many steps, at depths 64, 128, ... until two
/// depths agree. `tail_bound` is that last difference, an estimate rather
/// than a certified bound.
fn gauss_2f1_cf(a: f64, c: f64, z: f64) -> Result<SeriesResult> {
    let c0 = c - 1.0;
    let eval = |depth: usize| {
        let mut t = c0 + depth as f64;
        for k in (1..=depth).rev() {
            let m = (k / 2) as f64;
            let u = if k % 2 == 1 {
                (a + m) * (c0 + m)
            } else {
                m * (c0 - a + m)
            };
            t = c0 + (k - 1) as f64 - u * z / t;
        }
        c0 / t
    };
    let mut depth = 64;
    let mut last = eval(depth);
    while depth < MAX_TERMS {
        depth *= 2;
        let next = eval(depth);
        let diff = (next - last).abs();
        if diff <= SERIES_EPS * next.abs() {
            return Ok(SeriesResult {
                value: next,
                terms_used: depth,
                tail_bound: diff,
            });
        }
        last = next;
    }
    Err(Error::NonConvergence(format!(
        "continued fraction for 2F1({a}, 1; {c}; {z}) did not settle within depth {depth}"
    )))
}

/// Direct summation on `0 <= z < 1`. `a` may be negative (after Pfaff); the
/// tail bound only kicks in once every Pochhammer factor is positive.
fn sum_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<SeriesResult> {
    if a == 0.0 || z == 0.0 {
        return Ok(SeriesResult::exact(1.0));
    }
    let excess_lin = (a + b - c - 1.0).max(0.0);
    let excess_const = (a * b - c).max(0.0);
    let sign_free_from = (-a).max(-b).max(0.0);

    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut k = 0usize;
    loop {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * z;
        k += 1;
        sum += term;
        if term == 0.0 {
            return Ok(SeriesResult {
                value: sum,
                terms_used: k + 1,
                tail_bound: 0.0,
            });
        }
        let kf = k as f64;
        if kf > sign_free_from {
            // sup_{j >= k} |t_{j+1}/t_j| <= z (1 + A/k + B/k^2)
            let rho = z * (1.0 + excess_lin / kf + excess_const / (kf * kf));
            if rho < 1.0 {
                let tail = term.abs() * rho / (1.0 - rho);
                let scale = sum.abs();
                if term.abs() < SERIES_EPS * scale && tail <= SERIES_EPS * scale {
                    return Ok(SeriesResult {
                        value: sum,
                        terms_used: k + 1,
                        tail_bound: tail,
                    });
                }
            }
        }
        if k >= MAX_TERMS {
            return Err(Error::NonConvergence(format!(
                "2F1({a}, {b}; {c}; {z}) did not reach tolerance within {MAX_TERMS} terms"
            )));
        }
    }
}

/// `2F1(a, b; c; 1)` by Gauss's summation theorem, valid for `c - a - b > 0`.
pub fn gauss_2f1_unit(a: f64, b: f64, c: f64) -> Result<f64> {
    let excess = c - a - b;
    if !(excess > 0.0) || !(c > 0.0) {
        return Err(Error::NonConvergence(format!(
            "2F1({a}, {b}; {c}; 1) diverges: c - a - b = {excess} must be positive"
        )));
    }
    if a == 0.0 || b == 0.0 {
        return Ok(1.0);
    }
    let (lg_c, s_c) = libm::lgamma_r(c);
    let (lg_e, s_e) = libm::lgamma_r(excess);
    let (lg_ca, s_ca) = gamma_parts(c - a);
    let (lg_cb, s_cb) = gamma_parts(c - b);
    if s_ca == 0 || s_cb == 0 {
        // 1/Γ at a pole
        return Ok(0.0);
    }
    let sign = f64::from(s_c * s_e * s_ca * s_cb);
    Ok(sign * (lg_c + lg_e - lg_ca - lg_cb).exp())
}

/// `(ln|Γ(x)|, sign)`, with sign 0 at the poles.
fn gamma_parts(x: f64) -> (f64, i32) {
    if x <= 0.0 && x.fract() == 0.0 {
        return (f64::INFINITY, 0);
    }
    libm::lgamma_r(x)
}

/// Generalized hypergeometric `3F2(a1, a2, a3; b1, b2; 1)`.
///
/// Converges iff the parameter excess `h = b1 + b2 - a1 - a2 - a3` is
/// positive. When one upper parameter `a` exceeds `h` and does not exceed
/// either lower parameter, Thomae's relation
///
/// ```text
/// 3F2(a,b,c;d,e;1) = Γ(d)Γ(e)Γ(h) / (Γ(a)Γ(h+b)Γ(h+c)) * 3F2(d-a, e-a, h; h+b, h+c; 1)
/// ```
///
/// is applied first; the transformed series has excess `a`, hence faster decay.
pub fn hyp_3f2_unit(a1: f64, a2: f64, a3: f64, b1: f64, b2: f64) -> Result<SeriesResult> {
    let uppers = [a1, a2, a3];
    let lowers = [b1, b2];
    if uppers.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(Error::invalid(format!(
            "3F2 upper parameters must be >= 0, got {uppers:?}"
        )));
    }
    if lowers.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
        return Err(Error::invalid(format!(
            "3F2 lower parameters must be > 0, got {lowers:?}"
        )));
    }
    if uppers.contains(&0.0) {
        return Ok(SeriesResult::exact(1.0));
    }
    let excess = b1 + b2 - a1 - a2 - a3;
    if !(excess > 0.0) {
        return Err(Error::NonConvergence(format!(
            "3F2 at unit argument diverges: parameter excess {excess} must be positive"
        )));
    }

    let min_lower = b1.min(b2);
    let pivot = (0..3)
        .filter(|&i| uppers[i] > excess && uppers[i] <= min_lower)
        .max_by(|&i, &j| uppers[i].total_cmp(&uppers[j]));

    match pivot {
        None => sum_3f2_unit(uppers, lowers),
        Some(i) => {
            let a = uppers[i];
            let others: Vec<f64> = (0..3).filter(|&j| j != i).map(|j| uppers[j]).collect();
            let (b, c) = (others[0], others[1]);
            let ln_pref = ln_gamma(b1) + ln_gamma(b2) + ln_gamma(excess)
                - ln_gamma(a)
                - ln_gamma(excess + b)
                - ln_gamma(excess + c);
            let pref = ln_pref.exp();
            let new_uppers = [b1 - a, b2 - a, excess];
            if new_uppers.contains(&0.0) {
                return Ok(SeriesResult::exact(pref));
            }
            Ok(sum_3f2_unit(new_uppers, [excess + b, excess + c])?.scaled(pref))
        }
    }
}

/// Nonnegative-term summation of a unit-argument `3F2` with a bracketed tail.
fn sum_3f2_unit(uppers: [f64; 3], lowers: [f64; 2]) -> Result<SeriesResult> {
    let ratio = |k: f64| {
        uppers.iter().map(|a| a + k).product::<f64>()
            / (lowers.iter().map(|b| b + k).product::<f64>() * (k + 1.0))
    };

    let mut term = 1.0_f64;
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    // each term carries ~k roundings from the recurrence
    let mut drift = 0.0_f64;
    let mut k = 0usize;
    let mut checkpoint = 32usize;
    let mut last_tail: Option<(f64, f64)> = None;
    loop {
        // `sum` holds t_0..t_{k-1}; `term` is t_k.
        let t = sum + term;
        comp += if sum.abs() >= term.abs() {
            (sum - t) + term
        } else {
            (term - t) + sum
        };
        sum = t;
        drift += (k + 1) as f64 * term;
        term *= ratio(k as f64);
        k += 1;
        if term == 0.0 {
            return Ok(SeriesResult {
                value: sum + comp,
                terms_used: k,
                tail_bound: 0.0,
            });
        }
        if k == checkpoint || k >= MAX_TERMS {
            if let Some((estimate, bound)) = unit_tail(&uppers, &lowers, k, term) {
                let value = sum + comp + estimate;
                let rounding = 4.0 * f64::EPSILON * (value.abs() + drift);
                let total = bound + rounding;
                last_tail = Some((value, total));
                if total <= SERIES_EPS * value.abs() {
                    return Ok(SeriesResult {
                        value,
                        terms_used: k,
                        tail_bound: total,
                    });
                }
            }
            if k >= MAX_TERMS {
                return match last_tail {
                    Some((value, bound)) if bound <= CAP_ACCEPT_REL * value.abs() => {
                        Ok(SeriesResult {
                            value,
                            terms_used: k,
                            tail_bound: bound,
                        })
                    }
                    _ => Err(Error::NonConvergence(format!(
                        "3F2({uppers:?}; {lowers:?}; 1) tail not certified within {MAX_TERMS} terms"
                    ))),
                };
            }
            checkpoint *= 2;
        }
    }
}

/// Estimate and certified half-width for `sum_{j >= n} t_j`, given `t_n`.
///
/// The comparison sequence `u_j = Γ(j+α)/Γ(j+α+p)` has the telescoping tail
/// `sum_{j>=n} u_j = u_n (n+α+p-1)/(p-1)`. Matching `p` and `α` to the
/// two leading orders of `log t_{j+1}/t_j` gives the estimate. Perturbing `p`
/// by ±δ gives sequences whose ratios bound the true ratio for all `j >= n`,
/// which is checked through a root bound on the cubic
/// `prod(j+a)(j+α+p') - (j+1) prod(j+b) (j+α)`.
fn unit_tail(uppers: &[f64; 3], lowers: &[f64; 2], n: usize, t_n: f64) -> Option<(f64, f64)> {
    let sum_a: f64 = uppers.iter().sum();
    let sum_b: f64 = lowers.iter().sum::<f64>() + 1.0;
    let sq_a: f64 = uppers.iter().map(|a| a * a).sum();
    let sq_b: f64 = lowers.iter().map(|b| b * b).sum::<f64>() + 1.0;
    let p = sum_b - sum_a;
    if p <= 1.0 {
        return None;
    }
    let alpha = (sq_b - sq_a - p * p) / (2.0 * p);
    let nf = n as f64;
    if nf + alpha <= 1.0 {
        return None;
    }
    let tail_for = |q: f64| t_n * (nf + alpha + q - 1.0) / (q - 1.0);
    let estimate = tail_for(p);

    let certified = |delta: f64| -> bool {
        let upper = cubic_sign_beyond(uppers, lowers, alpha, p - delta, nf);
        let lower = cubic_sign_beyond(uppers, lowers, alpha, p + delta, nf);
        upper == Some(-1) && lower == Some(1)
    };
    let mut delta = 1e-14 * p;
    while delta < 0.5 * (p - 1.0) {
        if certified(delta) {
            let hi = tail_for(p - delta);
            let lo = tail_for(p + delta);
            let bound = (hi - estimate).abs().max((estimate - lo).abs());
            return Some((estimate, bound));
        }
        delta *= 2.0;
    }
    None
}

/// Sign that `prod(j+a_i)(j+α+q) - (j+1) prod(j+b_i)(j+α)` keeps for every
/// `j >= from`, if a Fujiwara root bound proves it constant there.
fn cubic_sign_beyond(
    uppers: &[f64; 3],
    lowers: &[f64; 2],
    alpha: f64,
    q: f64,
    from: f64,
) -> Option<i32> {
    let mut left = vec![1.0];
    for a in uppers {
        left = poly_mul_linear(&left, *a);
    }
    left = poly_mul_linear(&left, alpha + q);
    let mut right = poly_mul_linear(&[1.0], 1.0);
    for b in lowers {
        right = poly_mul_linear(&right, *b);
    }
    right = poly_mul_linear(&right, alpha);
    // coefficients, lowest degree first; degree-4 terms cancel exactly
    let coef: Vec<f64> = left.iter().zip(&right).map(|(l, r)| l - r).collect();
    let lead = coef[3];
    if lead == 0.0 {
        return None;
    }
    let bound = 2.0
        * (coef[2] / lead)
            .abs()
            .max((coef[1] / lead).abs().sqrt())
            .max((coef[0] / (2.0 * lead)).abs().cbrt());
    if from > bound {
        Some(if lead > 0.0 { 1 } else { -1 })
    } else {
        None
    }
}

/// Multiply a polynomial (lowest degree first) by `(j + r)`.
fn poly_mul_linear(poly: &[f64], r: f64) -> Vec<f64> {
    let mut out = vec![0.0; poly.len() + 1];
    for (i, c) in poly.iter().enumerate() {
        out[i] += c * r;
        out[i + 1] += c;
    }
    out
}
