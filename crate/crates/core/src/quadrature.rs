//! One- and two-dimensional quadrature for integrands with algebraic or
//! logarithmic endpoint singularities, plus fixed double-exponential and
//! Gauss–Legendre rules for callers that need errors varying smoothly with
//! their parameters.

use crate::error::{Error, Result};
use std::f64::consts::FRAC_PI_2;

/// Where an endpoint singularity sits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Location {
    LeftEndpoint,
    RightEndpoint,
    None,
}

/// Type of the endpoint singularity, `t^γ`, `log t` or `t^γ log t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SingKind {
    Algebraic(f64),
    Logarithmic,
    Mixed { exponent: f64, log: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularitySpec {
    pub location: Location,
    pub kind: SingKind,
}

impl SingularitySpec {
    pub fn none() -> Self {
        SingularitySpec { location: Location::None, kind: SingKind::Algebraic(0.0) }
    }

    pub fn left(kind: SingKind) -> Self {
        SingularitySpec { location: Location::LeftEndpoint, kind }
    }

    pub fn right(kind: SingKind) -> Self {
        SingularitySpec { location: Location::RightEndpoint, kind }
    }

    fn exponent(&self) -> f64 {
        match self.kind {
            SingKind::Algebraic(g) => g,
            SingKind::Logarithmic => 0.0,
            SingKind::Mixed { exponent, .. } => exponent,
        }
    }

    fn has_log(&self) -> bool {
        matches!(self.kind, SingKind::Logarithmic | SingKind::Mixed { log: true, .. })
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.exponent();
        if !(g > -1.0) {
            return Err(Error::Domain(format!("singular exponent must exceed -1, got {g}")));
        }
        Ok(())
    }

    /// Power m of the substitution t - a = (b - a) u^m that removes the singularity.
    fn power(&self) -> f64 {
        if self.location == Location::None {
            return 1.0;
        }
        let m = 1.0 / (1.0 + self.exponent());
        if self.has_log() {
            2.0 * m.max(1.0)
        } else {
            m
        }
    }
}

// 21-point Gauss–Kronrod, nodes on [0,1] of the symmetric rule
const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_352,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_36,
    0.295_524_224_714_752_87,
];

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[10] * fc;
    let mut g = 0.0;
    for i in 0..10 {
        let d = h * XGK[i];
        let s = f(c - d) + f(c + d);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Sum in a fixed pairwise order so results do not depend on accumulation history.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let m = v.len() / 2;
    pairwise_sum(&v[..m]) + pairwise_sum(&v[m..])
}

const MAX_PANELS: usize = 4000;

/// Globally adaptive Gauss–Kronrod on [a, b] with relative tolerance `tol`.
fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let mut panels = vec![(a, b, gk21(f, a, b))];
    loop {
        let total: f64 = pairwise_sum(&panels.iter().map(|p| p.2 .0).collect::<Vec<_>>());
        let err: f64 = panels.iter().map(|p| p.2 .1).sum();
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::Tolerance(format!("non-finite integrand on [{a}, {b}]")));
        }
        if err <= tol * total.abs() || err <= 1e-300 {
            panels.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
            return Ok(pairwise_sum(&panels.iter().map(|p| p.2 .0).collect::<Vec<_>>()));
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::Tolerance(format!(
                "refinement stalled on [{a}, {b}]: estimate {total:e}, error {err:e}"
            )));
        }
        let (k, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.partial_cmp(&y.1 .2 .1).unwrap())
            .unwrap();
        let (lo, hi, _) = panels.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            return Err(Error::Tolerance(format!("panel collapsed near {lo}")));
        }
        panels.push((lo, mid, gk21(f, lo, mid)));
        panels.push((mid, hi, gk21(f, mid, hi)));
    }
}

/// ∫_a^b f with relative error `tol`, after a substitution that absorbs the
/// declared endpoint singularity.
pub fn integrate_1d<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, sing: SingularitySpec, tol: f64) -> Result<f64> {
    if !(a < b) {
        return Err(Error::Domain(format!("need a < b, got [{a}, {b}]")));
    }
    sing.validate()?;
    let m = sing.power();
    let w = b - a;
    match sing.location {
        Location::None => adaptive(&f, a, b, tol),
        Location::LeftEndpoint => {
            let g = |u: f64| {
                if u <= 0.0 {
                    return 0.0;
                }
                let um = u.powf(m - 1.0);
                let t = a + w * u * um;
                if t <= a {
                    return 0.0;
                }
                f(t) * w * m * um
            };
            adaptive(&g, 0.0, 1.0, tol)
        }
        Location::RightEndpoint => {
            let g = |u: f64| {
                if u <= 0.0 {
                    return 0.0;
                }
                let um = u.powf(m - 1.0);
                // nodes closer to b than one ulp collapse onto b and are dropped
                let t = b - w * u * um;
                if t >= b {
                    return 0.0;
                }
                f(t) * w * m * um
            };
            adaptive(&g, 0.0, 1.0, tol)
        }
    }
}

/// Adaptive tanh-sinh quadrature; endpoint singularities need no declaration.
pub fn integrate_de<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a < b) {
        return Err(Error::Domain(format!("need a < b, got [{a}, {b}]")));
    }
    let w = b - a;
    if w <= 1e-6 * a.abs().max(b.abs()) {
        // node positions quantize at ulp(a)/w here; the interval is too short for f to vary
        let (x, wt) = gauss_legendre(8);
        let c = 0.5 * (a + b);
        return Ok(0.5 * w * x.iter().zip(&wt).map(|(x, wt)| wt * f(c + 0.5 * w * x)).sum::<f64>());
    }
    let term = |t: f64| -> f64 {
        let s = FRAC_PI_2 * t.sinh();
        let (dl, dr) = (1.0 / (1.0 + (-2.0 * s).exp()), 1.0 / (1.0 + (2.0 * s).exp()));
        let x = if dl < 0.5 { a + w * dl } else { b - w * dr };
        if x <= a || x >= b {
            return 0.0;
        }
        let c = s.cosh();
        let wt = FRAC_PI_2 * t.cosh() / (c * c);
        0.5 * w * wt * f(x)
    };
    let tmax = 3.2;
    let mut h = 0.5;
    let mut sum = term(0.0);
    let mut k = 1;
    while k as f64 * h <= tmax {
        sum += term(k as f64 * h) + term(-(k as f64) * h);
        k += 1;
    }
    let mut prev = sum * h;
    for _ in 0..8 {
        h *= 0.5;
        let mut add = 0.0;
        let mut k = 1;
        while k as f64 * h <= tmax {
            add += term(k as f64 * h) + term(-(k as f64) * h);
            k += 2;
        }
        sum += add;
        let est = sum * h;
        if !est.is_finite() {
            return Err(Error::Tolerance(format!("non-finite integrand on [{a}, {b}]")));
        }
        if (est - prev).abs() <= tol * est.abs() || (est - prev).abs() < 1e-300 {
            return Ok(est);
        }
        prev = est;
    }
    Err(Error::Tolerance(format!("tanh-sinh did not settle on [{a}, {b}]")))
}

/// Triangular integration regions of the kernel equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    /// {0 < s < η, s < z < ξ}, split at z = η.
    GL { eta: f64, xi: f64 },
    /// {ξ < z < zmax, 0 < s < η}.
    MA { eta: f64, xi: f64, zmax: f64 },
}

const LINE_GUARD: f64 = 1e-12;

/// Iterated integral of f(z, s) over `region`, tolerance split tol/2 inner and outer.
pub fn integrate_triangle<F: Fn(f64, f64) -> f64 + Sync>(f: F, region: Region, tol: f64) -> Result<f64> {
    let ti = 0.5 * tol;
    match region {
        Region::GL { eta, xi } => {
            if !(0.0 < eta && eta < xi) {
                return Err(Error::Domain(format!("GL region needs 0 < eta < xi, got {eta}, {xi}")));
            }
            let g = LINE_GUARD * xi;
            let outer = |s: f64| -> f64 {
                let z0 = s + g.min(0.5 * (eta - s));
                let lo = if z0 < eta - g { integrate_de(|z| f(z, s), z0, eta - g, ti) } else { Ok(0.0) };
                let hi = integrate_de(|z| f(z, s), eta + g, xi, ti);
                match (lo, hi) {
                    (Ok(a), Ok(b)) => a + b,
                    _ => f64::NAN,
                }
            };
            integrate_de(outer, 0.0, eta, ti)
        }
        Region::MA { eta, xi, zmax } => {
            if !(0.0 < eta && eta < xi && xi < zmax) {
                return Err(Error::Domain(format!(
                    "MA region needs 0 < eta < xi < zmax, got {eta}, {xi}, {zmax}"
                )));
            }
            let outer = |z: f64| -> f64 { integrate_de(|s| f(z, s), 0.0, eta, ti).unwrap_or(f64::NAN) };
            integrate_de(outer, xi, zmax, ti)
        }
    }
}

/// Certify that a truncated tail is below the requested tolerance.
pub fn certify_tail(bound: f64, tol: f64) -> Result<()> {
    if bound.is_finite() && bound <= tol {
        Ok(())
    } else {
        Err(Error::Truncation(format!("tail bound {bound:e} exceeds {tol:e}")))
    }
}

/// A quadrature node stored by its distances to both interval ends, so
/// integrands singular at an endpoint can be evaluated without cancellation.
#[derive(Debug, Clone, Copy)]
pub struct DeNode {
    pub from_left: f64,
    pub from_right: f64,
    pub weight: f64,
}

/// Fixed tanh-sinh rule on [0, 1]. Nodes closer than `guard` to an end are dropped.
pub fn tanh_sinh_rule(h: f64, tmax: f64, guard: f64) -> Vec<DeNode> {
    let n = (tmax / h).floor() as i64;
    let mut out = Vec::with_capacity(2 * n as usize + 1);
    for k in -n..=n {
        let t = k as f64 * h;
        let s = FRAC_PI_2 * t.sinh();
        let from_left = 1.0 / (1.0 + (-2.0 * s).exp());
        let from_right = 1.0 / (1.0 + (2.0 * s).exp());
        if from_left < guard || from_right < guard {
            continue;
        }
        let c = s.cosh();
        out.push(DeNode { from_left, from_right, weight: 0.5 * h * FRAC_PI_2 * t.cosh() / (c * c) });
    }
    out
}

/// Fixed rule for [0, ∞) from the tanh-sinh rule under x = c·t/(1−t):
/// returns (abscissa, weight) pairs.
pub fn half_line_rule(h: f64, tmax: f64, c: f64) -> Vec<(f64, f64)> {
    tanh_sinh_rule(h, tmax, 1e-300)
        .into_iter()
        .map(|n| (c * n.from_left / n.from_right, n.weight * c / (n.from_right * n.from_right)))
        .collect()
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Generalised Gauss–Laguerre rule for ∫₀^∞ t^α e^{−t} f(t) dt, α > −1.
pub fn gauss_laguerre(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    // Γ(n+α)/Γ(n) as Γ(α+1) ∏_{j<n} (j+α)/j
    let mut ratio = crate::specfun::gamma_fn(alpha + 1.0).unwrap_or(f64::NAN);
    for j in 1..n {
        ratio *= (j as f64 + alpha) / j as f64;
    }
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..n {
        z = match i {
            0 => (1.0 + alpha) * (3.0 + 0.92 * alpha) / (1.0 + 2.4 * nf + 1.8 * alpha),
            1 => z + (15.0 + 6.25 * alpha) / (1.0 + 0.9 * alpha + 2.5 * nf),
            _ => {
                let ai = (i - 1) as f64;
                z + ((1.0 + 2.55 * ai) / (1.9 * ai) + 1.26 * ai * alpha / (1.0 + 3.5 * ai)) * (z - x[i - 2])
                    / (1.0 + 0.3 * alpha)
            }
        };
        let mut pp = 0.0;
        let mut p2 = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p0) = (1.0, 0.0);
            for j in 0..n {
                let jf = j as f64;
                let p3 = p0;
                p0 = p1;
                p1 = ((2.0 * jf + 1.0 + alpha - z) * p0 - (jf + alpha) * p3) / (jf + 1.0);
            }
            p2 = p0;
            pp = (nf * p1 - (nf + alpha) * p2) / z;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs() {
                break;
            }
        }
        x[i] = z;
        w[i] = -ratio / (pp * nf * p2);
    }
    (x, w)
}
