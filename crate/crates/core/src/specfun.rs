//! Real-argument special functions: Pochhammer symbol, gamma, digamma,
//! upper incomplete gamma and the Gauss hypergeometric function.

use crate::error::{Error, Result};
use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Evaluation branch used by [`hyp2f1`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypRegime {
    /// `a` or `b` is a non-positive integer, the series terminates.
    PolynomialReduction,
    /// Direct summation of the defining series, `|z| <= 0.95`.
    InteriorSeries,
    /// Pfaff transformation `z -> z/(z-1)` followed by the interior series.
    PfaffSeries,
    /// `0.95 < z <= 1`: Pfaff transformation to a large negative argument.
    NearOne,
    /// `z < -2` with `b - a` a non-negative integer (logarithmic expansion).
    LogCaseLargeArg,
    /// `z < -2` with `b - a` not an integer.
    LargeArg,
}

pub const INTERIOR_MARGIN: f64 = 0.95;
const LARGE_ARG_SWITCH: f64 = -2.0;
const MAX_TERMS: usize = 20_000;
const LARGE_ARG_TERMS: usize = 200;

/// Parameter differences within this distance of an integer use the
/// logarithmic expansion; the two-term formula cancels catastrophically there.
const INT_SNAP: f64 = 1e-9;

fn near_int(d: f64) -> bool {
    (d - d.round()).abs() <= INT_SNAP * d.abs().max(1.0)
}

fn is_nonpos_int(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// `(x)_n = x (x+1) ... (x+n-1)`, with `(x)_0 = 1`.
pub fn pochhammer(x: f64, n: u32) -> f64 {
    let mut p = 1.0;
    for k in 0..n {
        p *= x + k as f64;
    }
    p
}

/// sin(pi x) with argument reduction, exact zero at integers.
fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).floor();
    if r == 0.0 || r == 1.0 {
        return 0.0;
    }
    if r < 0.5 {
        (PI * r).sin()
    } else if r < 1.5 {
        -(PI * (r - 1.0)).sin()
    } else {
        -(PI * (2.0 - r)).sin()
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn gamma_pos(x: f64) -> f64 {
    // Lanczos approximation, x >= 0.5
    let xm = x - 1.0;
    let mut a = LANCZOS[0];
    let t = xm + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (xm + i as f64);
    }
    if x > 140.0 {
        // split the power to postpone overflow
        let h = t.powf(0.5 * (xm + 0.5));
        (2.0 * PI).sqrt() * h * (h * (-t).exp()) * a
    } else {
        (2.0 * PI).sqrt() * t.powf(xm + 0.5) * (-t).exp() * a
    }
}

/// Γ(x) for real x away from the poles.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if is_nonpos_int(x) {
        return Err(Error::Pole { func: "gamma", at: x });
    }
    if x == x.round() && x > 0.0 && x <= 30.0 {
        let mut f = 1.0;
        for k in 2..(x as u32) {
            f *= k as f64;
        }
        return Ok(f);
    }
    if x < 0.5 {
        Ok(PI / (sin_pi(x) * gamma_pos(1.0 - x)))
    } else {
        Ok(gamma_pos(x))
    }
}

/// 1/Γ(x), returning zero at the poles.
pub fn rgamma(x: f64) -> f64 {
    if is_nonpos_int(x) {
        return 0.0;
    }
    if x < 0.5 {
        sin_pi(x) * gamma_pos(1.0 - x) / PI
    } else {
        1.0 / gamma_fn(x).unwrap_or(f64::INFINITY)
    }
}

/// ψ(x) = Γ'(x)/Γ(x).
pub fn digamma(x: f64) -> Result<f64> {
    if is_nonpos_int(x) {
        return Err(Error::Pole { func: "digamma", at: x });
    }
    if x < 0.0 {
        // ψ(1-x) - ψ(x) = π cot(πx)
        let s = sin_pi(x);
        let c = sin_pi(x + 0.5);
        return Ok(digamma(1.0 - x)? - PI * c / s);
    }
    let mut y = x;
    let mut acc = 0.0;
    while y < 10.0 {
        acc -= 1.0 / y;
        y += 1.0;
    }
    let w = 1.0 / (y * y);
    // Bernoulli tail B_{2k}/(2k y^{2k})
    let tail = w
        * (1.0 / 12.0
            - w * (1.0 / 120.0
                - w * (1.0 / 252.0
                    - w * (1.0 / 240.0 - w * (1.0 / 132.0 - w * (691.0 / 32760.0 - w / 12.0))))));
    Ok(acc + y.ln() - 0.5 / y - tail)
}

/// Γ(a, z) = ∫_z^∞ u^{a-1} e^{-u} du for a > 0.
pub fn incomplete_gamma_upper(a: f64, z: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("incomplete gamma needs a > 0, got {a}")));
    }
    if z < 0.0 {
        return Err(Error::Domain(format!("incomplete gamma needs z >= 0, got {z}")));
    }
    if z == 0.0 {
        return gamma_fn(a);
    }
    let log_pref = a * z.ln() - z;
    if z < a + 1.0 {
        // lower incomplete gamma by its power series
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut n = 1.0;
        loop {
            term *= z / (a + n);
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                break;
            }
            n += 1.0;
            if n > MAX_TERMS as f64 {
                return Err(Error::Convergence("lower incomplete gamma series".into()));
            }
        }
        Ok(gamma_fn(a)? - log_pref.exp() * sum)
    } else {
        // modified Lentz for the continued fraction
        let tiny = 1e-300;
        let mut b = z + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        let mut i = 1.0;
        loop {
            let an = -i * (i - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
            i += 1.0;
            if i > MAX_TERMS as f64 {
                return Err(Error::Convergence("incomplete gamma continued fraction".into()));
            }
        }
        Ok(log_pref.exp() * h)
    }
}

/// Branch that [`hyp2f1`] takes for the given arguments.
pub fn hyp2f1_regime(a: f64, b: f64, _c: f64, z: f64) -> HypRegime {
    if is_nonpos_int(a) || is_nonpos_int(b) {
        HypRegime::PolynomialReduction
    } else if z.abs() <= INTERIOR_MARGIN {
        HypRegime::InteriorSeries
    } else if z > INTERIOR_MARGIN {
        HypRegime::NearOne
    } else if z >= LARGE_ARG_SWITCH {
        HypRegime::PfaffSeries
    } else {
        if near_int(b - a) {
            HypRegime::LogCaseLargeArg
        } else {
            HypRegime::LargeArg
        }
    }
}

fn series(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut small = 0;
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * z;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        if term.abs() <= 1e-17 * sum.abs() {
            small += 1;
            if small >= 2 {
                return Ok(sum);
            }
        } else {
            small = 0;
        }
    }
    Err(Error::Convergence(format!(
        "2F1({a},{b};{c};{z}) interior series exceeded {MAX_TERMS} terms"
    )))
}

fn polynomial(a: f64, b: f64, c: f64, z: f64) -> f64 {
    let n = if is_nonpos_int(a) && is_nonpos_int(b) {
        (-a).min(-b)
    } else if is_nonpos_int(a) {
        -a
    } else {
        -b
    } as usize;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..n {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * z;
        sum += term;
    }
    sum
}

/// F(a, a+m; c; z) for z < -1 and integer m >= 0 (logarithmic expansion in 1/z).
fn large_arg_log(a: f64, m: usize, c: f64, z: f64) -> Result<f64> {
    let mz = -z;
    let lnmz = mz.ln();
    let inv = 1.0 / z;
    let mf = m as f64;
    // finite part
    let mut s1 = 0.0;
    if m > 0 {
        let mut fact_m = vec![1.0; m + 1];
        for k in 1..=m {
            fact_m[k] = fact_m[k - 1] * k as f64;
        }
        let mut poch = 1.0;
        let mut zk = 1.0;
        let mut kfact = 1.0;
        for k in 0..m {
            if k > 0 {
                poch *= a + (k - 1) as f64;
                kfact *= k as f64;
                zk *= inv;
            }
            s1 += poch * fact_m[m - k - 1] / kfact * rgamma(c - a - k as f64) * zk;
        }
        s1 *= rgamma(a + mf);
    }
    // logarithmic part; rg = 1/Γ(x0-k), rgpsi = ψ(x0-k)/Γ(x0-k), x0 = c-a-m
    let x0 = c - a - mf;
    let mut rg = rgamma(x0);
    let mut rgpsi = if is_nonpos_int(x0) {
        let n = (-x0) as u32;
        let mut f = 1.0;
        for k in 2..=n {
            f *= k as f64;
        }
        if n % 2 == 0 {
            -f
        } else {
            f
        }
    } else {
        digamma(x0)? * rg
    };
    let mut psi_k1 = -EULER_GAMMA; // ψ(k+1)
    let mut psi_km1 = digamma(mf + 1.0)?; // ψ(k+m+1)
    let mut psi_akm = digamma(a + mf)?; // ψ(a+k+m)
    let mut coef = 1.0; // (a+m)_k/(k!(k+m)!) (-1)^k z^{-k-m}
    let mut mfact = 1.0;
    for k in 1..=m {
        mfact *= k as f64;
    }
    coef /= mfact;
    coef *= inv.powi(m as i32);
    let mut s2 = 0.0;
    let mut converged = false;
    for k in 0..LARGE_ARG_TERMS {
        let kf = k as f64;
        let t = coef * (rg * (lnmz + psi_k1 + psi_km1 - psi_akm) - rgpsi);
        s2 += t;
        if t.abs() < 1e-14 * s2.abs() && k > 1 {
            converged = true;
            break;
        }
        // advance to k+1
        let x = x0 - kf - 1.0;
        let rg_next = x * rg;
        rgpsi = x * rgpsi - rg;
        rg = rg_next;
        psi_k1 += 1.0 / (kf + 1.0);
        psi_km1 += 1.0 / (kf + mf + 1.0);
        psi_akm += 1.0 / (a + kf + mf);
        coef *= -(a + mf + kf) / ((kf + 1.0) * (kf + mf + 1.0)) * inv;
    }
    if !converged && s2 != 0.0 {
        return Err(Error::Convergence(format!(
            "log-case expansion of 2F1({a},{};{c};{z}) exceeded {LARGE_ARG_TERMS} terms",
            a + mf
        )));
    }
    s2 *= rgamma(a);
    Ok(gamma_fn(c)? * mz.powf(-a) * (s1 + s2))
}

/// Generic two-term connection formula for z < -1 and non-integer b - a.
fn large_arg(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let mz = -z;
    let w = 1.0 / z;
    let t1 = gamma_fn(b - a)? * rgamma(b) * rgamma(c - a) * mz.powf(-a);
    let t2 = gamma_fn(a - b)? * rgamma(a) * rgamma(c - b) * mz.powf(-b);
    let f1 = if t1 != 0.0 { hyp2f1(a, a - c + 1.0, a - b + 1.0, w)? } else { 0.0 };
    let f2 = if t2 != 0.0 { hyp2f1(b, b - c + 1.0, b - a + 1.0, w)? } else { 0.0 };
    Ok(gamma_fn(c)? * (t1 * f1 + t2 * f2))
}

/// Gauss hypergeometric function ₂F₁(a, b; c; z) for real z ≤ 1.
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if !(z <= 1.0) {
        return Err(Error::Domain(format!("2F1 needs z <= 1, got {z}")));
    }
    let poly = is_nonpos_int(a) || is_nonpos_int(b);
    if is_nonpos_int(c) {
        return Err(Error::Pole { func: "hyp2f1 (c)", at: c });
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if poly {
        return Ok(polynomial(a, b, c, z));
    }
    if z == 1.0 {
        if c - a - b > 0.0 {
            return Ok(gamma_fn(c)? * gamma_fn(c - a - b)? * rgamma(c - a) * rgamma(c - b));
        }
        return Err(Error::Domain(format!("2F1({a},{b};{c};1) diverges")));
    }
    match hyp2f1_regime(a, b, c, z) {
        HypRegime::InteriorSeries => series(a, b, c, z),
        HypRegime::PfaffSeries => {
            let w = z / (z - 1.0);
            Ok((1.0 - z).powf(-a) * series(a, c - b, c, w)?)
        }
        HypRegime::NearOne => {
            let w = z / (z - 1.0);
            Ok((1.0 - z).powf(-a) * hyp2f1(a, c - b, c, w)?)
        }
        HypRegime::LogCaseLargeArg => {
            let (lo, hi) = if b >= a { (a, b) } else { (b, a) };
            large_arg_log(lo, (hi - lo).round() as usize, c, z)
        }
        HypRegime::LargeArg => large_arg(a, b, c, z),
        HypRegime::PolynomialReduction => unreachable!(),
    }
}

/// d/dz ₂F₁(a, b; c; z) = (ab/c) ₂F₁(a+1, b+1; c+1; z).
pub fn hyp2f1_derivative(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if is_nonpos_int(c) || is_nonpos_int(c + 1.0) {
        return Err(Error::Pole { func: "hyp2f1_derivative (c)", at: c });
    }
    let pre = a * b / c;
    if pre == 0.0 {
        return Ok(0.0);
    }
    Ok(pre * hyp2f1(a + 1.0, b + 1.0, c + 1.0, z)?)
}
