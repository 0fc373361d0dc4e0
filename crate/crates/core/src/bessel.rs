//! Riccati–Bessel and Riccati–Hankel functions of real order l ≥ −½ at
//! complex argument, in the normalisations used by the free solutions:
//!
//!   φ_l(k², x) = k^{−l−1} ĵ_l(kx),   ĵ_l(u) = √(πu/2) J_{l+½}(u)
//!   F_l(u) = e^{ilπ/2} ĥ⁺_l(u) = e^{iu}/Γ(l+1) ∫₀^∞ e^{−t} t^l (1 + it/(2u))^l dt
//!
//! so that F_l(u) e^{−iu} → 1 as |u| → ∞.

use crate::quadrature::gauss_laguerre;
use crate::specfun::{digamma, gamma_fn, rgamma};
use num_complex::Complex64 as C64;
use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::rc::Rc;

/// Below these |u| the power series are used.
const SERIES_RADIUS: f64 = 8.0;
const HANKEL_SERIES_RADIUS: f64 = 2.0;
const LAGUERRE_NODES: usize = 48;

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn is_nonneg_int(l: f64) -> bool {
    l >= 0.0 && l.fract() == 0.0
}

/// J_ν(u) from its power series; ν may be negative.
fn j_series(nu: f64, u: C64) -> C64 {
    let h = 0.5 * u;
    let mh2 = -(h * h);
    let mut pw = C64::new(1.0, 0.0);
    let mut fact = 1.0;
    let mut sum = C64::new(0.0, 0.0);
    for m in 0..400 {
        if m > 0 {
            pw *= mh2;
            fact *= m as f64;
        }
        let term = pw * (rgamma(m as f64 + nu + 1.0) / fact);
        sum += term;
        if m as f64 > h.norm() && term.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    sum * h.powf(nu)
}

/// Y_n(u) for integer n ≥ 0 from the logarithmic series.
fn y_int_series(n: u32, u: C64) -> C64 {
    let h = 0.5 * u;
    let nf = n as f64;
    let mut first = C64::new(0.0, 0.0);
    for k in 0..n {
        let c = gamma_fn((n - k) as f64).unwrap_or(f64::NAN) / gamma_fn(k as f64 + 1.0).unwrap_or(f64::NAN);
        first += h.powf(2.0 * k as f64 - nf) * c;
    }
    let mh2 = -(h * h);
    let mut pw = C64::new(1.0, 0.0);
    let mut sum = C64::new(0.0, 0.0);
    let mut denom = gamma_fn(nf + 1.0).unwrap_or(f64::NAN);
    for k in 0..400u32 {
        if k > 0 {
            pw *= mh2;
            denom *= k as f64 * (nf + k as f64);
        }
        let psi = digamma(k as f64 + 1.0).unwrap_or(f64::NAN) + digamma(nf + k as f64 + 1.0).unwrap_or(f64::NAN);
        let term = pw * (psi / denom);
        sum += term;
        if k as f64 > h.norm() && term.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    (2.0 / PI) * j_series(nf, u) * h.ln() - first / PI - sum * h.powf(nf) / PI
}

fn y_series(nu: f64, u: C64) -> C64 {
    if nu.fract() == 0.0 && nu >= 0.0 {
        return y_int_series(nu as u32, u);
    }
    let (s, c) = (nu * PI).sin_cos();
    (j_series(nu, u) * c - j_series(-nu, u)) / s
}

/// F_l(u) for Re u ≥ 0.
fn f_right(l: f64, u: C64) -> C64 {
    if !is_nonneg_int(l) && u.norm() < HANKEL_SERIES_RADIUS {
        return f_series(l, u);
    }
    g_right(l, u) * (I * u).exp()
}

/// F_l(u) e^{−iu} for Re u ≥ 0.
fn g_right(l: f64, u: C64) -> C64 {
    if is_nonneg_int(l) {
        let n = l as u32;
        let r = I / (2.0 * u);
        let mut sum = C64::new(0.0, 0.0);
        let mut pw = C64::new(1.0, 0.0);
        for m in 0..=n {
            // (n+m)!/(m!(n−m)!)
            let c = gamma_fn((n + m) as f64 + 1.0).unwrap_or(f64::NAN)
                / (gamma_fn(m as f64 + 1.0).unwrap_or(f64::NAN) * gamma_fn((n - m) as f64 + 1.0).unwrap_or(f64::NAN));
            sum += pw * c;
            pw *= r;
        }
        return sum;
    }
    if u.norm() >= HANKEL_SERIES_RADIUS {
        g_laguerre(l, u)
    } else {
        f_series(l, u) * (-I * u).exp()
    }
}

thread_local! {
    static LAGUERRE: RefCell<HashMap<u64, Rc<(Vec<f64>, Vec<f64>)>>> = RefCell::new(HashMap::new());
}

fn laguerre_rule(l: f64) -> Rc<(Vec<f64>, Vec<f64>)> {
    LAGUERRE.with(|c| {
        c.borrow_mut()
            .entry(l.to_bits())
            .or_insert_with(|| Rc::new(gauss_laguerre(LAGUERRE_NODES, l)))
            .clone()
    })
}

fn g_laguerre(l: f64, u: C64) -> C64 {
    let rule = laguerre_rule(l);
    let mut sum = C64::new(0.0, 0.0);
    for (&tk, &wk) in rule.0.iter().zip(&rule.1) {
        sum += (C64::new(1.0, 0.0) + I * tk / (2.0 * u)).powf(l) * wk;
    }
    sum * rgamma(l + 1.0)
}

#[cfg(test)]
fn f_laguerre(l: f64, u: C64) -> C64 {
    g_laguerre(l, u) * (I * u).exp()
}

fn f_series(l: f64, u: C64) -> C64 {
    let nu = l + 0.5;
    let ph = C64::from_polar(1.0, 0.5 * l * PI);
    ph * I * (0.5 * PI * u).sqrt() * (j_series(nu, u) + I * y_series(nu, u))
}

/// F_l(u) = e^{ilπ/2} ĥ⁺_l(u) for Im u ≥ 0, u ≠ 0.
pub(crate) fn hankel_f(l: f64, u: C64) -> C64 {
    if u.re < 0.0 {
        return f_right(l, -u.conj()).conj();
    }
    f_right(l, u)
}

/// F_l(u) e^{−iu}, finite where e^{iu} under- or overflows.
pub(crate) fn hankel_g(l: f64, u: C64) -> C64 {
    if u.re < 0.0 {
        return g_right(l, -u.conj()).conj();
    }
    g_right(l, u)
}

/// d(F_l e^{−iu})/du = i(G_{l+1} − G_l) + (l+1)/u G_l.
pub(crate) fn hankel_g_deriv(l: f64, u: C64) -> C64 {
    let g = hankel_g(l, u);
    I * (hankel_g(l + 1.0, u) - g) + g * ((l + 1.0) / u)
}

/// ĵ_l(u) for Re u > 0 and |u| ≥ SERIES_RADIUS, from ĥ± = e^{∓ilπ/2}F_l.
fn riccati_j_far(l: f64, u: C64) -> C64 {
    let hp = C64::from_polar(1.0, -0.5 * l * PI) * hankel_f(l, u);
    let hm = (C64::from_polar(1.0, -0.5 * l * PI) * hankel_f(l, u.conj())).conj();
    (hp - hm) / (2.0 * I)
}

/// φ_l(k², x) and its x-derivative.
pub(crate) fn regular(l: f64, k: C64, x: f64) -> (C64, C64) {
    let k = if k.re < 0.0 { -k } else { k };
    let u = k * x;
    if u.norm() <= SERIES_RADIUS || u.re.abs() <= 1e-3 * u.norm() {
        let mh2 = -(u * u) * 0.25;
        let mut pw = C64::new(1.0, 0.0);
        let mut fact = 1.0;
        let mut v = C64::new(0.0, 0.0);
        let mut d = C64::new(0.0, 0.0);
        for m in 0..400 {
            if m > 0 {
                pw *= mh2;
                fact *= m as f64;
            }
            let term = pw * (rgamma(m as f64 + l + 1.5) / fact);
            v += term;
            d += term * (2.0 * m as f64 + l + 1.0);
            if m as f64 > 0.5 * u.norm() && term.norm() <= 1e-17 * v.norm() {
                break;
            }
        }
        let pre = PI.sqrt() * (0.5 * x).powf(l + 1.0);
        return (v * pre, d * pre / x);
    }
    let j = riccati_j_far(l, u);
    let j1 = riccati_j_far(l + 1.0, u);
    let dj = -j1 + j * ((l + 1.0) / u);
    (k.powf(-l - 1.0) * j, k.powf(-l) * dj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1e-300)
    }

    #[test]
    fn order_zero_and_one() {
        for &u in &[C64::new(0.3, 0.0), C64::new(5.0, 0.0), C64::new(12.0, 0.0), C64::new(0.0, 2.0)] {
            assert!(close(hankel_f(0.0, u), (I * u).exp(), 1e-14));
            assert!(close(hankel_f(1.0, u), (I * u).exp() * (1.0 + I / u), 1e-14));
        }
    }

    #[test]
    fn series_and_laguerre_paths_meet() {
        for &l in &[-0.5, 0.5, 1.5, 0.3] {
            for &u in &[C64::new(HANKEL_SERIES_RADIUS, 0.0), C64::new(1.2, 1.6), C64::new(0.0, HANKEL_SERIES_RADIUS)] {
                let (a, b) = (f_series(l, u), f_laguerre(l, u));
                assert!(close(a, b, 1e-12), "{l} {u}: {a} {b}");
            }
        }
        // the reflection formula path against the closed form
        let u = C64::new(2.5, 0.7);
        assert!(close(f_series(1.0, u), f_right(1.0, u), 1e-13));
    }

    #[test]
    fn hankel_zero_reference() {
        // H₀⁽¹⁾(1) = J₀(1) + i Y₀(1)
        let u = C64::new(1.0, 0.0);
        let h = j_series(0.0, u) + I * y_series(0.0, u);
        assert!((h.re - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((h.im - 0.088_256_964_215_676_96).abs() < 1e-15);
    }

    #[test]
    fn regular_paths_meet() {
        for &l in &[-0.5, 0.0, 1.0, 0.5] {
            let k = C64::new(1.0, 0.0);
            let x = SERIES_RADIUS * (1.0 + 1e-15);
            let (a, da) = regular(l, k, SERIES_RADIUS);
            let (b, db) = regular(l, k, x);
            assert!(close(a, b, 1e-12) && close(da, db, 1e-12), "{l}: {a} {b} {da} {db}");
        }
        let (v, d) = regular(0.0, C64::new(1.0, 0.0), 0.5 * PI);
        assert!((v.re - 1.0).abs() < 1e-15 && d.norm() < 1e-15);
    }
}
