//! Potentials q(x) with closed-form integrals, tails, moments and norms
//! where available and quadrature fallbacks otherwise.

use crate::error::{Error, Result};
use crate::quadrature::{integrate_1d, SingKind, SingularitySpec};
use std::fmt;
use std::sync::Arc;

const QUAD_TOL: f64 = 1e-12;

/// Piecewise-linear tabulated potential, constant to the left of the first
/// node and zero to the right of the last one.
#[derive(Debug, Clone, PartialEq)]
pub struct TablePotential {
    pub x: Vec<f64>,
    pub q: Vec<f64>,
}

impl TablePotential {
    pub fn new(x: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if x.len() < 2 || x.len() != q.len() {
            return Err(Error::Domain("table needs at least two (x, q) pairs of equal length".into()));
        }
        if x.windows(2).any(|w| !(w[0] < w[1])) || x[0] < 0.0 {
            return Err(Error::Domain("table abscissae must be non-negative and increasing".into()));
        }
        Ok(TablePotential { x, q })
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.q[0];
        }
        if t > self.x[n - 1] {
            return 0.0;
        }
        let k = self.x.partition_point(|&xi| xi < t).max(1);
        let (x0, x1) = (self.x[k - 1], self.x[k]);
        let w = (t - x0) / (x1 - x0);
        self.q[k - 1] * (1.0 - w) + self.q[k] * w
    }

    /// Breakpoints of the interpolant inside (a, b).
    fn breaks(&self, a: f64, b: f64) -> Vec<f64> {
        let mut v = vec![a];
        v.extend(self.x.iter().copied().filter(|&t| t > a && t < b));
        v.push(b);
        v
    }

    /// Three-point smoothing of the nodal values, used before C¹-only oracles.
    pub fn mollified(&self) -> TablePotential {
        let n = self.q.len();
        let q = (0..n)
            .map(|i| {
                if i == 0 || i == n - 1 {
                    self.q[i]
                } else {
                    0.25 * self.q[i - 1] + 0.5 * self.q[i] + 0.25 * self.q[i + 1]
                }
            })
            .collect();
        TablePotential { x: self.x.clone(), q }
    }
}

/// User-supplied potential with its smoothness declared by the caller.
#[derive(Clone)]
pub struct CustomPotential {
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub c1: bool,
    /// Exponent γ of the behaviour q ~ x^γ at the origin.
    pub origin_exponent: f64,
}

impl fmt::Debug for CustomPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPotential").field("c1", &self.c1).finish()
    }
}

#[derive(Debug, Clone)]
pub enum Potential {
    Zero,
    Const(f64),
    /// coeff·(shift + x)^exponent.
    Power { coeff: f64, exponent: f64, shift: f64 },
    /// coeff·e^{−rate·x}.
    ExpDecay { coeff: f64, rate: f64 },
    Table(TablePotential),
    Custom(CustomPotential),
}

impl Potential {
    pub fn power(coeff: f64, exponent: f64) -> Self {
        Potential::Power { coeff, exponent, shift: 0.0 }
    }

    pub fn shifted_power(coeff: f64, exponent: f64, shift: f64) -> Self {
        Potential::Power { coeff, exponent, shift }
    }

    pub fn exp_decay(coeff: f64, rate: f64) -> Self {
        Potential::ExpDecay { coeff, rate }
    }

    pub fn custom<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F, c1: bool, origin_exponent: f64) -> Self {
        Potential::Custom(CustomPotential { f: Arc::new(f), c1, origin_exponent })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Const(c) => *c,
            Potential::Power { coeff, exponent, shift } => {
                if *exponent == 0.0 {
                    *coeff
                } else if *exponent == 1.0 {
                    coeff * (shift + x)
                } else {
                    coeff * (shift + x).powf(*exponent)
                }
            }
            Potential::ExpDecay { coeff, rate } => coeff * (-rate * x).exp(),
            Potential::Table(t) => t.eval(x),
            Potential::Custom(c) => (c.f)(x),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Potential::Zero => true,
            Potential::Const(c) => *c == 0.0,
            Potential::Power { coeff, .. } | Potential::ExpDecay { coeff, .. } => *coeff == 0.0,
            Potential::Table(t) => t.q.iter().all(|&v| v == 0.0),
            Potential::Custom(_) => false,
        }
    }

    /// q multiplied by a constant factor.
    pub fn scaled(&self, f: f64) -> Potential {
        match self {
            Potential::Zero => Potential::Zero,
            Potential::Const(c) => Potential::Const(c * f),
            Potential::Power { coeff, exponent, shift } => {
                Potential::Power { coeff: coeff * f, exponent: *exponent, shift: *shift }
            }
            Potential::ExpDecay { coeff, rate } => Potential::ExpDecay { coeff: coeff * f, rate: *rate },
            Potential::Table(t) => Potential::Table(TablePotential {
                x: t.x.clone(),
                q: t.q.iter().map(|v| v * f).collect(),
            }),
            Potential::Custom(c) => {
                let g = c.f.clone();
                Potential::Custom(CustomPotential {
                    f: Arc::new(move |x| f * g(x)),
                    c1: c.c1,
                    origin_exponent: c.origin_exponent,
                })
            }
        }
    }

    /// Exponent γ of q ~ x^γ as x → 0.
    pub fn origin_exponent(&self) -> f64 {
        match self {
            Potential::Power { exponent, shift, .. } if *shift == 0.0 => *exponent,
            Potential::Custom(c) => c.origin_exponent,
            _ => 0.0,
        }
    }

    /// True when q is continuously differentiable on [a, ∞).
    pub fn is_c1_from(&self, a: f64) -> bool {
        match self {
            Potential::Zero | Potential::Const(_) | Potential::ExpDecay { .. } => true,
            Potential::Power { exponent, shift, .. } => {
                shift + a > 0.0 || *exponent == 0.0 || *exponent >= 1.0
            }
            Potential::Table(_) => false,
            Potential::Custom(c) => c.c1,
        }
    }

    /// True when the potential is a finite sum of powers with non-negative
    /// integer exponents, i.e. analytic at the origin.
    pub fn is_analytic_at_origin(&self) -> bool {
        match self {
            Potential::Zero | Potential::Const(_) | Potential::ExpDecay { .. } => true,
            Potential::Power { exponent, shift, .. } => {
                *shift > 0.0 || (*exponent >= 0.0 && *exponent == exponent.round())
            }
            Potential::Table(_) => false,
            Potential::Custom(c) => c.c1 && c.origin_exponent == 0.0,
        }
    }

    fn quad(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        let g = self.origin_exponent();
        let sing = if a == 0.0 && g != 0.0 && g > -1.0 {
            SingularitySpec::left(SingKind::Algebraic(g.min(0.0)))
        } else {
            SingularitySpec::none()
        };
        if let Potential::Table(t) = self {
            let br = t.breaks(a, b);
            let mut s = 0.0;
            for w in br.windows(2) {
                s += integrate_1d(&f, w[0], w[1], SingularitySpec::none(), QUAD_TOL)?;
            }
            return Ok(s);
        }
        integrate_1d(f, a, b, sing, QUAD_TOL)
    }

    /// ∫_a^b q for 0 ≤ a ≤ b.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        if a > b {
            return Ok(-self.integral(b, a)?);
        }
        match self {
            Potential::Zero => Ok(0.0),
            Potential::Const(c) => Ok(c * (b - a)),
            Potential::Power { coeff, exponent, shift } => {
                let e1 = exponent + 1.0;
                if e1 == 0.0 {
                    if shift + a <= 0.0 {
                        return Err(Error::Divergence("∫ x^{-1} diverges at the origin".into()));
                    }
                    return Ok(coeff * ((shift + b) / (shift + a)).ln());
                }
                if shift + a <= 0.0 && e1 < 0.0 {
                    return Err(Error::Divergence(format!("∫ x^{exponent} diverges at the origin")));
                }
                Ok(coeff * ((shift + b).powf(e1) - (shift + a).powf(e1)) / e1)
            }
            Potential::ExpDecay { coeff, rate } => {
                if *rate == 0.0 {
                    return Ok(coeff * (b - a));
                }
                Ok(coeff * (-rate * a).exp() * (-(-rate * (b - a)).exp_m1()) / rate)
            }
            _ => self.quad(a, b, |t| self.eval(t)),
        }
    }

    /// ∫_x^∞ q.
    pub fn tail(&self, x: f64) -> Result<f64> {
        match self {
            Potential::Zero => Ok(0.0),
            Potential::Const(c) if *c == 0.0 => Ok(0.0),
            Potential::Const(_) => Err(Error::Tail("a constant potential has no finite tail".into())),
            Potential::Power { coeff, exponent, shift } => {
                if *exponent >= -1.0 {
                    return Err(Error::Tail(format!("x^{exponent} is not integrable at infinity")));
                }
                Ok(coeff * (shift + x).powf(exponent + 1.0) / (-exponent - 1.0))
            }
            Potential::ExpDecay { coeff, rate } => {
                if *rate <= 0.0 {
                    return Err(Error::Tail("non-decaying exponential".into()));
                }
                Ok(coeff * (-rate * x).exp() / rate)
            }
            Potential::Table(t) => {
                let end = *t.x.last().unwrap();
                if x >= end {
                    Ok(0.0)
                } else {
                    self.integral(x, end)
                }
            }
            Potential::Custom(_) => numeric_tail(|t| self.eval(t), x),
        }
    }

    /// σ̃_j(x) = ∫_x^∞ y^j |q(y)| dy for j ∈ {0, 1}.
    pub fn abs_moment(&self, j: u32, x: f64) -> Result<f64> {
        if j > 1 {
            return Err(Error::Domain(format!("moment order must be 0 or 1, got {j}")));
        }
        let jf = j as f64;
        match self {
            Potential::Zero => Ok(0.0),
            Potential::Const(c) if *c == 0.0 => Ok(0.0),
            Potential::Const(_) => Err(Error::Tail("a constant potential has no finite moments".into())),
            Potential::Power { coeff, exponent, shift } => {
                let (c, e, s) = (coeff.abs(), *exponent, *shift);
                if e + jf >= -1.0 {
                    return Err(Error::Tail(format!("y^{j}·y^{e} is not integrable at infinity")));
                }
                let m0 = (s + x).powf(e + 1.0) / (-e - 1.0);
                if j == 0 {
                    Ok(c * m0)
                } else {
                    Ok(c * ((s + x).powf(e + 2.0) / (-e - 2.0) - s * m0))
                }
            }
            Potential::ExpDecay { coeff, rate } => {
                if *rate <= 0.0 {
                    return Err(Error::Tail("non-decaying exponential".into()));
                }
                let base = coeff.abs() * (-rate * x).exp() / rate;
                Ok(if j == 0 { base } else { base * (x + 1.0 / rate) })
            }
            Potential::Table(t) => {
                let end = *t.x.last().unwrap();
                if x >= end {
                    return Ok(0.0);
                }
                self.quad(x, end, |y| y.powi(j as i32) * self.eval(y).abs())
            }
            Potential::Custom(_) => numeric_tail(|y| y.powi(j as i32) * self.eval(y).abs(), x),
        }
    }

    /// σ̃₀(z)/σ̃₀(ξ), evaluated without forming either factor when both underflow.
    pub fn moment0_ratio(&self, z: f64, xi: f64) -> Result<f64> {
        match self {
            Potential::Power { exponent, shift, .. } => Ok(((shift + z) / (shift + xi)).powf(exponent + 1.0)),
            Potential::ExpDecay { rate, .. } => Ok((-rate * (z - xi)).exp()),
            _ => {
                let d = self.abs_moment(0, xi)?;
                if d == 0.0 {
                    return Ok(0.0);
                }
                Ok(self.abs_moment(0, z)? / d)
            }
        }
    }

    /// q(z)/σ̃₀(ξ), the normalised weight of the decaying-potential integrals.
    pub fn q_over_moment0(&self, z: f64, xi: f64) -> Result<f64> {
        match self {
            Potential::Power { coeff, exponent, shift } => {
                Ok(coeff.signum() * (-exponent - 1.0) * (shift + z).powf(*exponent) / (shift + xi).powf(exponent + 1.0))
            }
            Potential::ExpDecay { coeff, rate } => Ok(coeff.signum() * rate * (-rate * (z - xi)).exp()),
            _ => {
                let d = self.abs_moment(0, xi)?;
                if d == 0.0 {
                    return Ok(0.0);
                }
                Ok(self.eval(z) / d)
            }
        }
    }

    /// (∫_0^r |q|^p z^{−w} dz)^{1/p}.
    pub fn lp_norm(&self, p: f64, r: f64, w: f64) -> Result<f64> {
        if !(p >= 1.0) || !(r > 0.0) {
            return Err(Error::Domain(format!("need p >= 1 and r > 0, got p={p}, r={r}")));
        }
        let closed = match self {
            Potential::Zero => Some(0.0),
            Potential::Const(c) => {
                if *c == 0.0 {
                    Some(0.0)
                } else if w >= 1.0 {
                    return Err(Error::Divergence(format!("∫ z^{{-{w}}} diverges at the origin")));
                } else {
                    Some(c.abs().powf(p) * r.powf(1.0 - w) / (1.0 - w))
                }
            }
            Potential::Power { coeff, exponent, shift } if *shift == 0.0 => {
                let e = p * exponent - w + 1.0;
                if e <= 0.0 {
                    return Err(Error::Divergence(format!(
                        "|q|^p z^(-w) ~ z^({}) is not integrable at the origin",
                        e - 1.0
                    )));
                }
                Some(coeff.abs().powf(p) * r.powf(e) / e)
            }
            _ => None,
        };
        let integral = match closed {
            Some(v) => v,
            None => {
                let g = p * self.origin_exponent() - w;
                if g <= -1.0 {
                    return Err(Error::Divergence(format!("integrand ~ z^{g} at the origin")));
                }
                let f = |z: f64| self.eval(z).abs().powf(p) * z.powf(-w);
                let sing = if g != 0.0 {
                    SingularitySpec::left(SingKind::Algebraic(g.min(0.0)))
                } else {
                    SingularitySpec::none()
                };
                integrate_1d(f, 0.0, r, sing, QUAD_TOL)
                    .map_err(|e| Error::Divergence(format!("weighted L^p norm: {e}")))?
            }
        };
        Ok(integral.powf(1.0 / p))
    }
}

/// ∫_x^∞ f by doubling panels until a panel contributes below 1e−14 of the total.
pub(crate) fn numeric_tail(f: impl Fn(f64) -> f64, x: f64) -> Result<f64> {
    let mut total = 0.0;
    let mut a = x;
    let mut w = 1.0f64.max(x.abs());
    for _ in 0..60 {
        let part = integrate_1d(&f, a, a + w, SingularitySpec::none(), QUAD_TOL)?;
        total += part;
        if part.abs() <= 1e-14 * total.abs().max(1e-300) {
            return Ok(total);
        }
        a += w;
        w *= 2.0;
    }
    Err(Error::Tail(format!("tail integral from {x} does not settle")))
}
