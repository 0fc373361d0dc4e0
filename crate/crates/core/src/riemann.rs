//! Riemann functions v₁, v₂ (near the origin) and v₃ (near infinity), the
//! characteristic abscissae z₁(s), z₂(s) and the envelope bounds.
//!
//! All formulas are evaluated in positive-base form: sign factors that
//! appear in pairs are combined before taking non-integer powers.

use crate::error::{Error, Result};
use crate::specfun::{gamma_fn, hyp2f1, rgamma};

/// Relative distance below which an evaluation is treated as lying on z = η or z = s.
pub const GUARD: f64 = 1e-13;

fn is_int(l: f64) -> bool {
    l == l.round()
}

/// Characteristic point data: `0 <= s <= eta < xi` with both abscissae.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharPoint {
    pub s: f64,
    pub eta: f64,
    pub xi: f64,
    pub z1: f64,
    pub z2: f64,
}

impl CharPoint {
    pub fn new(s: f64, eta: f64, xi: f64) -> Result<Self> {
        Ok(CharPoint { s, eta, xi, z1: char_z1(s, eta, xi)?, z2: char_z2(s, eta, xi)? })
    }
}

fn check_order(s: f64, eta: f64, xi: f64) -> Result<()> {
    if !(0.0 <= s && s < eta && eta < xi) {
        return Err(Error::Domain(format!("need 0 <= s < eta < xi, got s={s}, eta={eta}, xi={xi}")));
    }
    Ok(())
}

/// z₁(s): the abscissa where σ₁ = -1.
pub fn char_z1(s: f64, eta: f64, xi: f64) -> Result<f64> {
    check_order(s, eta, xi)?;
    Ok((xi * (s - eta) + eta * (s - xi)) / (2.0 * s - eta - xi))
}

/// z₂(s): the abscissa where σ₂ = -1.
pub fn char_z2(s: f64, eta: f64, xi: f64) -> Result<f64> {
    check_order(s, eta, xi)?;
    Ok(s + (xi - s) * (eta - s) / (2.0 * xi - eta - s))
}

/// Parameters (l, η, ξ) of the Riemann functions v₁, v₂ with cached constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannEval {
    pub l: f64,
    pub eta: f64,
    pub xi: f64,
    v2_pref: f64,
}

impl RiemannEval {
    pub fn new(l: f64, eta: f64, xi: f64) -> Result<Self> {
        if !(l >= -0.5) {
            return Err(Error::Domain(format!("l must be >= -1/2, got {l}")));
        }
        if !(0.0 < eta && eta <= xi) {
            return Err(Error::Domain(format!("need 0 < eta <= xi, got eta={eta}, xi={xi}")));
        }
        let v2_pref = if is_int(l) {
            0.0
        } else {
            gamma_fn(1.0 + l)? * rgamma(-l) / gamma_fn(2.0 + 2.0 * l)?
        };
        Ok(RiemannEval { l, eta, xi, v2_pref })
    }

    /// v₁ without region checks; caller guarantees s < η < z ≤ ξ.
    #[inline]
    pub fn v1_raw(&self, z: f64, s: f64) -> f64 {
        let (l, eta, xi) = (self.l, self.eta, self.xi);
        if l == 0.0 {
            return 1.0;
        }
        let sigma = (z - xi) * (s - eta) / ((z - eta) * (s - xi));
        let pre = ((z - eta) * (xi - s) / ((z - s) * (z - s))).powf(l);
        pre * hyp2f1(-l, -l, 1.0, sigma).unwrap_or(f64::NAN)
    }

    /// v₂ without region checks; caller guarantees s ≤ z < η.
    #[inline]
    pub fn v2_raw(&self, z: f64, s: f64) -> f64 {
        if self.v2_pref == 0.0 || z == s {
            return 0.0;
        }
        let (l, eta, xi) = (self.l, self.eta, self.xi);
        let sigma = (z - s) * (eta - xi) / ((z - eta) * (s - xi));
        let pre = self.v2_pref
            * (z - s)
            * (xi - eta).powf(1.0 + 2.0 * l)
            * ((eta - z) * (xi - s)).powf(-l - 1.0);
        pre * hyp2f1(1.0 + l, 1.0 + l, 2.0 + 2.0 * l, sigma).unwrap_or(f64::NAN)
    }

    /// v₁ from the differences z−η, ξ−s, z−s, ξ−z, η−s, for callers that
    /// hold them without cancellation.
    #[inline]
    pub fn v1_diff(&self, zme: f64, xms: f64, zms: f64, xmz: f64, ems: f64) -> f64 {
        let l = self.l;
        if l == 0.0 {
            return 1.0;
        }
        let sigma = -(xmz * ems) / (zme * xms);
        let pre = (zme * xms / (zms * zms)).powf(l);
        pre * hyp2f1(-l, -l, 1.0, sigma).unwrap_or(f64::NAN)
    }

    /// v₂ from the differences η−z, ξ−s, z−s, ξ−η.
    #[inline]
    pub fn v2_diff(&self, emz: f64, xms: f64, zms: f64, xme: f64) -> f64 {
        if self.v2_pref == 0.0 || zms == 0.0 {
            return 0.0;
        }
        let l = self.l;
        let sigma = -(zms * xme) / (emz * xms);
        let pre = self.v2_pref * zms * xme.powf(1.0 + 2.0 * l) * (emz * xms).powf(-l - 1.0);
        pre * hyp2f1(1.0 + l, 1.0 + l, 2.0 + 2.0 * l, sigma).unwrap_or(f64::NAN)
    }

    /// True when v₂ vanishes identically (integer l).
    pub fn v2_vanishes(&self) -> bool {
        self.v2_pref == 0.0
    }

    /// v on either side of the line z = η.
    #[inline]
    pub fn v_raw(&self, z: f64, s: f64) -> f64 {
        if z > self.eta {
            self.v1_raw(z, s)
        } else {
            self.v2_raw(z, s)
        }
    }

    fn guard(&self, z: f64, s: f64) -> Result<()> {
        let scale = self.xi.max(f64::MIN_POSITIVE);
        if (z - self.eta).abs() <= GUARD * scale {
            return Err(Error::Singularity(format!("z={z} on the line z=eta={}", self.eta)));
        }
        if z > self.eta && (z - s).abs() <= GUARD * scale {
            return Err(Error::Singularity(format!("z={z} on the line z=s")));
        }
        Ok(())
    }
}

/// v₁(z, s; η, ξ) in the region s < η < z ≤ ξ (v₁(P) = 1 at (ξ, η) is the limit s → η).
pub fn v1(z: f64, s: f64, ev: &RiemannEval) -> Result<f64> {
    if !(0.0 <= s && s <= ev.eta && ev.eta < z && z <= ev.xi) {
        return Err(Error::Domain(format!("v1 needs s <= eta < z <= xi, got z={z}, s={s}")));
    }
    ev.guard(z, s)?;
    Ok(ev.v1_raw(z, s))
}

/// v₂(z, s; η, ξ) in the region s ≤ z < η; identically zero for integer l.
pub fn v2(z: f64, s: f64, ev: &RiemannEval) -> Result<f64> {
    if !(0.0 <= s && s <= z && z < ev.eta) {
        return Err(Error::Domain(format!("v2 needs 0 <= s <= z < eta, got z={z}, s={s}")));
    }
    ev.guard(z, s)?;
    Ok(ev.v2_raw(z, s))
}

/// v = v₁ for z > η and v₂ for z < η.
pub fn v_combined(z: f64, s: f64, ev: &RiemannEval) -> Result<f64> {
    if z > ev.eta {
        v1(z, s, ev)
    } else {
        v2(z, s, ev)
    }
}

/// Constants C₁..C₄ of the v₁/v₂ envelopes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VEnvelopeConsts {
    pub c: [f64; 4],
}

impl Default for VEnvelopeConsts {
    fn default() -> Self {
        VEnvelopeConsts { c: [1.0; 4] }
    }
}

/// Which of the four envelope rows applies at (z, s).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeRegion {
    V1Far,
    V1Log,
    V2Far,
    V2Log,
}

pub fn envelope_region(z: f64, s: f64, ev: &RiemannEval) -> Result<EnvelopeRegion> {
    let cp = CharPoint::new(s, ev.eta, ev.xi)?;
    Ok(if z > ev.eta {
        if z >= cp.z1 {
            EnvelopeRegion::V1Far
        } else {
            EnvelopeRegion::V1Log
        }
    } else if z <= cp.z2 {
        EnvelopeRegion::V2Far
    } else {
        EnvelopeRegion::V2Log
    })
}

/// Envelope with unit constants, one row per region.
pub fn envelope_shape(z: f64, s: f64, ev: &RiemannEval) -> Result<(EnvelopeRegion, f64)> {
    let (l, eta, xi) = (ev.l, ev.eta, ev.xi);
    ev.guard(z, s)?;
    let region = envelope_region(z, s, ev)?;
    let v = match region {
        EnvelopeRegion::V1Far => ((z - eta) * (xi - s)).powf(l) * (z - s).powf(-2.0 * l),
        EnvelopeRegion::V1Log => {
            let lg = ((xi - z) * (eta - s) / ((z - eta) * (xi - s))).ln();
            (z - s).powf(-2.0 * l) * ((xi - z) * (eta - s)).powf(l) * (lg + 1.0)
        }
        EnvelopeRegion::V2Far => {
            (xi - eta).powf(1.0 + 2.0 * l) * (z - s) * ((xi - s) * (eta - z)).powf(-l - 1.0)
        }
        EnvelopeRegion::V2Log => {
            let lg = ((z - s) * (xi - eta) / ((eta - z) * (xi - s))).ln();
            (xi - eta).powf(l) * (z - s).powf(-l) * (lg + 1.0)
        }
    };
    Ok((region, v))
}

/// Right-hand envelope of the v₁/v₂ estimates with calibrated constants.
pub fn bound_v1v2(z: f64, s: f64, ev: &RiemannEval, consts: &VEnvelopeConsts) -> Result<f64> {
    let (region, shape) = envelope_shape(z, s, ev)?;
    let c = match region {
        EnvelopeRegion::V1Far => consts.c[0],
        EnvelopeRegion::V1Log => consts.c[1],
        EnvelopeRegion::V2Far => consts.c[2],
        EnvelopeRegion::V2Log => consts.c[3],
    };
    Ok(c * shape)
}

/// 1 - t for the v₃ argument, computed without cancellation.
pub fn v3_one_minus_t(z: f64, s: f64, xi: f64, eta: f64) -> f64 {
    (z * z - s * s) / (z * z - eta * eta) * ((xi * xi - eta * eta) / (xi * xi - s * s))
}

/// The v₃ hypergeometric argument t.
pub fn v3_t(z: f64, s: f64, xi: f64, eta: f64) -> f64 {
    (z * z - xi * xi) / (z * z - eta * eta) * ((eta * eta - s * s) / (xi * xi - s * s))
}

/// v₃ without ordering checks; caller guarantees 0 ≤ s ≤ η < ξ ≤ z.
#[inline]
pub fn v3_raw(z: f64, s: f64, xi: f64, eta: f64, l: f64) -> f64 {
    if l == 0.0 {
        return 1.0;
    }
    let t = v3_t(z, s, xi, eta);
    let pre = ((z * z - eta * eta) / (z * z - s * s) * ((xi * xi - s * s) / (xi * xi - eta * eta))).powf(l);
    pre * hyp2f1(-l, -l, 1.0, t).unwrap_or(f64::NAN)
}

/// v₃ from the factors z²−ξ², z²−η², z²−s², ξ²−s², ξ²−η², η²−s², each
/// formed by the caller as a product of differences.
pub fn v3_diff(zx: f64, ze: f64, zs: f64, xs: f64, xe: f64, es: f64, l: f64) -> f64 {
    if l == 0.0 {
        return 1.0;
    }
    let t = (zx / ze) * (es / xs);
    ((ze / zs) * (xs / xe)).powf(l) * hyp2f1(-l, -l, 1.0, t).unwrap_or(f64::NAN)
}

/// v₃(z, s; ξ, η) for 0 ≤ s ≤ η < ξ ≤ z.
pub fn v3(z: f64, s: f64, xi: f64, eta: f64, l: f64) -> Result<f64> {
    if !(0.0 <= s && s <= eta && eta < xi && xi <= z) {
        return Err(Error::Domain(format!(
            "v3 needs 0 <= s <= eta < xi <= z, got z={z}, s={s}, xi={xi}, eta={eta}"
        )));
    }
    if !(l >= -0.5) {
        return Err(Error::Domain(format!("l must be >= -1/2, got {l}")));
    }
    Ok(v3_raw(z, s, xi, eta, l))
}

/// Envelope of v₃: C (ξ²/(ξ²-η²))^l, or (C/β)(ξ²/(ξ²-η²))^{-1/2+β} at l = -1/2.
pub fn bound_v3(xi: f64, eta: f64, l: f64, beta: f64, c: f64) -> Result<f64> {
    if !(0.0 <= eta && eta < xi) {
        return Err(Error::Domain(format!("need 0 <= eta < xi, got eta={eta}, xi={xi}")));
    }
    let r = xi * xi / (xi * xi - eta * eta);
    if l == -0.5 {
        if !(beta > 0.0 && beta <= 0.5) {
            return Err(Error::Domain(format!("beta must lie in (0, 1/2], got {beta}")));
        }
        Ok(c / beta * r.powf(-0.5 + beta))
    } else {
        Ok(c * r.powf(l))
    }
}

/// Adjoint operator M applied to `v` at (z, s) by second-order central differences.
pub fn adjoint_residual<F: Fn(f64, f64) -> f64>(v: F, l: f64, z: f64, s: f64, h: f64) -> f64 {
    let vzs = (v(z + h, s + h) - v(z + h, s - h) - v(z - h, s + h) + v(z - h, s - h)) / (4.0 * h * h);
    let vz = (v(z + h, s) - v(z - h, s)) / (2.0 * h);
    let vs = (v(z, s + h) - v(z, s - h)) / (2.0 * h);
    let d = z - s;
    vzs - l / d * vz + l / d * vs + 2.0 * l / (d * d) * v(z, s)
}

/// Operator L applied to `u` at (z, s) by second-order central differences.
pub fn l_operator_residual<F: Fn(f64, f64) -> f64>(u: F, l: f64, z: f64, s: f64, h: f64) -> f64 {
    let uzs = (u(z + h, s + h) - u(z + h, s - h) - u(z - h, s + h) + u(z - h, s - h)) / (4.0 * h * h);
    let uz = (u(z + h, s) - u(z - h, s)) / (2.0 * h);
    let us = (u(z, s + h) - u(z, s - h)) / (2.0 * h);
    let d = z - s;
    uzs + l / d * uz - l / d * us
}

/// The v₃ operator ∂²/∂z∂s + 4l(l+1)zs/(z²-s²)² by central differences.
pub fn v3_operator_residual<F: Fn(f64, f64) -> f64>(v: F, l: f64, z: f64, s: f64, h: f64) -> f64 {
    let vzs = (v(z + h, s + h) - v(z + h, s - h) - v(z - h, s + h) + v(z - h, s - h)) / (4.0 * h * h);
    let d = z * z - s * s;
    vzs + 4.0 * l * (l + 1.0) * z * s / (d * d) * v(z, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abscissae() {
        assert!((char_z1(0.0, 1.0, 2.0).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!((char_z2(0.0, 1.0, 2.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((1.0 - char_z2(0.0, 1.0, 2.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((char_z1(0.999_999, 1.0, 2.0).unwrap() - 1.0).abs() < 1e-5);
        assert!(char_z1(1.0, 1.0, 2.0).is_err());
        // σ₁(z₁) = -1 and σ₂(z₂) = -1
        let (s, eta, xi) = (0.3, 1.1, 1.9);
        let z1 = char_z1(s, eta, xi).unwrap();
        let z2 = char_z2(s, eta, xi).unwrap();
        assert!(((z1 - xi) * (s - eta) / ((z1 - eta) * (s - xi)) + 1.0).abs() < 1e-14);
        assert!(((z2 - s) * (eta - xi) / ((z2 - eta) * (s - xi)) + 1.0).abs() < 1e-14);
        assert!(eta < z1 && z1 < xi && s <= z2 && z2 <= eta);
    }

    #[test]
    fn v1_at_p_and_v2_on_diagonal() {
        for &l in &[-0.5, 0.0, 0.5, 1.0, 2.0, 1.3] {
            let ev = RiemannEval::new(l, 1.0, 2.0).unwrap();
            assert!((v1(2.0, 1.0, &ev).unwrap() - 1.0).abs() < 1e-15);
            assert_eq!(v2(0.4, 0.4, &ev).unwrap(), 0.0);
        }
        let ev = RiemannEval::new(1.0, 1.0, 2.0).unwrap();
        assert_eq!(v2(0.5, 0.1, &ev).unwrap(), 0.0);
        assert!(v2(1.0, 0.1, &ev).is_err());
    }

    #[test]
    fn v1_polynomial_case() {
        let ev = RiemannEval::new(1.0, 1.0, 2.0).unwrap();
        let (z, s) = (1.6, 0.2);
        let sigma = (z - 2.0) * (s - 1.0) / ((z - 1.0) * (s - 2.0));
        assert!(sigma > -1.0 && sigma < 0.0);
        let expect = (z - 1.0) * (2.0 - s) / ((z - s) * (z - s)) * (1.0 + sigma);
        assert!((v1(z, s, &ev).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn v3_boundary_rows() {
        for &l in &[-0.5, 0.0, 0.5, 1.0, 2.0] {
            assert!((v3(2.0, 0.3, 2.0, 1.0, l).unwrap() - 1.0).abs() < 1e-15);
            assert!((v3(3.7, 1.0, 2.0, 1.0, l).unwrap() - 1.0).abs() < 1e-15);
        }
        let (z, s, xi, eta) = (3.0, 0.5, 2.0, 1.0);
        let t = v3_t(z, s, xi, eta);
        assert!((1.0 - t - v3_one_minus_t(z, s, xi, eta)).abs() < 1e-14);
        let expect = ((z * z - eta * eta) / (z * z - s * s) * (xi * xi - s * s) / (xi * xi - eta * eta)) * (1.0 + t);
        assert!((v3(z, s, xi, eta, 1.0).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn v3_envelope_edges() {
        assert!((bound_v3(2.0, 0.0, 1.5, 0.5, 3.0).unwrap() - 3.0).abs() < 1e-15);
        let b = bound_v3(2.0, 1.0, -0.5, 0.1, 1.0).unwrap();
        assert!((b - 10.0 * (4.0f64 / 3.0).powf(-0.4)).abs() < 1e-14);
        assert!(bound_v3(2.0, 1.0, -0.5, 0.0, 1.0).is_err());
        assert!(bound_v3(2.0, 1.0, -0.5, 0.6, 1.0).is_err());
    }

    #[test]
    fn guard_band() {
        let ev = RiemannEval::new(0.5, 1.0, 2.0).unwrap();
        assert!(matches!(v1(1.0 + 1e-15, 0.2, &ev), Err(Error::Singularity(_))));
        assert!(matches!(v2(1.0 - 1e-15, 0.2, &ev), Err(Error::Singularity(_))));
    }
}
