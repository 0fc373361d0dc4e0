//! Free and perturbed regular and Jost solutions, the two transformation
//! operators applied to the free ones, direct ODE integrations used as
//! independent references, and a finite-difference residual of
//!   −u″ + (l(l+1)/x² + q) u = k² u.

use crate::bessel::{hankel_f, hankel_g, hankel_g_deriv, regular};
use crate::error::{Error, Result};
use crate::glkernel::{GlKernel, PotentialSpec};
use crate::makernel::{sigma_moment, BoundParamsMA, DecayPotentialSpec, MaKernel};
use crate::potential::Potential;
use crate::quadrature::{gauss_legendre, integrate_de, tanh_sinh_rule, DeNode};
use num_complex::Complex64 as C64;
use ode_solvers::{Dopri5, OutputType, SVector, System};
use rayon::prelude::*;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Momentum k and energy z = k².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    pub k: C64,
    pub z_energy: C64,
}

impl SpectralPoint {
    pub fn new(k: C64) -> Self {
        SpectralPoint { k, z_energy: k * k }
    }

    pub fn real(k: f64) -> Self {
        Self::new(C64::new(k, 0.0))
    }

    fn check_jost(&self) -> Result<()> {
        if self.k == C64::new(0.0, 0.0) {
            return Err(Error::Domain("Jost solutions need k != 0".into()));
        }
        if self.k.im < 0.0 {
            return Err(Error::Domain(format!("Jost solutions need Im k >= 0, got k = {}", self.k)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionKind {
    RegularFree,
    RegularPerturbed,
    JostFree,
    JostPerturbed,
}

#[derive(Debug, Clone)]
pub struct SolutionSample {
    pub x_nodes: Vec<f64>,
    pub values: Vec<C64>,
    pub kind: SolutionKind,
}

/// Anything that carries the potential q of the equation.
pub trait HasPotential {
    fn potential(&self) -> &Potential;
}

impl HasPotential for Potential {
    fn potential(&self) -> &Potential {
        self
    }
}

impl HasPotential for PotentialSpec {
    fn potential(&self) -> &Potential {
        &self.q
    }
}

impl HasPotential for DecayPotentialSpec {
    fn potential(&self) -> &Potential {
        &self.q
    }
}

fn check_pos(x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain(format!("need x > 0, got {x}")));
    }
    Ok(())
}

/// φ_l(k², x) = k^{−l−1} ĵ_l(kx), ~ √π (x/2)^{l+1}/Γ(l+3/2) as x → 0.
pub fn phi_free(l: f64, pt: SpectralPoint, x: f64) -> Result<C64> {
    check_pos(x)?;
    Ok(regular(l, pt.k, x).0)
}

/// f_l(k, x) = e^{ilπ/2} ĥ⁺_l(kx).
pub fn jost_free(l: f64, pt: SpectralPoint, x: f64) -> Result<C64> {
    check_pos(x)?;
    pt.check_jost()?;
    Ok(hankel_f(l, pt.k * x))
}

fn free_sample(kind: SolutionKind, xs: &[f64], f: impl Fn(f64) -> Result<C64> + Sync) -> Result<SolutionSample> {
    let values = xs.par_iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    Ok(SolutionSample { x_nodes: xs.to_vec(), values, kind })
}

pub fn phi_free_sample(l: f64, pt: SpectralPoint, xs: &[f64]) -> Result<SolutionSample> {
    free_sample(SolutionKind::RegularFree, xs, |x| phi_free(l, pt, x))
}

pub fn jost_free_sample(l: f64, pt: SpectralPoint, xs: &[f64]) -> Result<SolutionSample> {
    free_sample(SolutionKind::JostFree, xs, |x| jost_free(l, pt, x))
}

/// φ = φ_l + ∫₀^x B(x, y) φ_l(y) dy for one kernel and many spectral points.
///
/// The integral runs over y = x·t with a fixed tanh-sinh rule in t, so the
/// result is a smooth function of x.
pub struct GlTransform {
    pub kernel: GlKernel,
    rule: Vec<DeNode>,
}

impl GlTransform {
    pub fn new(pot: &PotentialSpec, l: f64, tol: f64) -> Result<Self> {
        Ok(Self::from_kernel(GlKernel::new(pot, l, tol)?))
    }

    pub fn from_kernel(kernel: GlKernel) -> Self {
        GlTransform { kernel, rule: tanh_sinh_rule(1.0 / 16.0, 3.5, 1e-300) }
    }

    /// φ(k², x) for each point in `pts`.
    pub fn apply_many(&self, pts: &[SpectralPoint], x: f64) -> Result<Vec<C64>> {
        check_pos(x)?;
        let l = self.kernel.l;
        let mut out: Vec<C64> = pts.iter().map(|p| regular(l, p.k, x).0).collect();
        if self.kernel.pot.q.is_zero() {
            return Ok(out);
        }
        for n in &self.rule {
            let y = x * n.from_left;
            if n.from_right * x <= 0.0 {
                continue;
            }
            let wb = x * n.weight * self.kernel.b(x, y)?;
            for (o, p) in out.iter_mut().zip(pts) {
                *o += regular(l, p.k, y).0 * wb;
            }
        }
        Ok(out)
    }

    pub fn apply(&self, pt: SpectralPoint, x: f64) -> Result<C64> {
        Ok(self.apply_many(&[pt], x)?[0])
    }

    /// Samples φ on `xs` for each point; one sample per point.
    pub fn sample(&self, pts: &[SpectralPoint], xs: &[f64]) -> Result<Vec<SolutionSample>> {
        let rows = xs.par_iter().map(|&x| self.apply_many(pts, x)).collect::<Result<Vec<_>>>()?;
        Ok((0..pts.len())
            .map(|i| SolutionSample {
                x_nodes: xs.to_vec(),
                values: rows.iter().map(|r| r[i]).collect(),
                kind: SolutionKind::RegularPerturbed,
            })
            .collect())
    }
}

pub fn apply_gl(pot: &PotentialSpec, l: f64, pt: SpectralPoint, x: f64, tol: f64) -> Result<C64> {
    GlTransform::new(pot, l, tol)?.apply(pt, x)
}

/// Near the diagonal the smoothed kernel is used; beyond y − x = near_width the
/// table interpolant.
const NEAR_WIDTH: f64 = 2.0;
/// Exponential tables at l ≠ 0 converge slowly in x; widen the smoothed band to
/// this many decay lengths.
const EXP_NEAR_DECAYS: f64 = 8.0;
const PANEL_NODES: usize = 16;
/// Largest truncation point the tail search may return.
const MAX_REACH: f64 = 1e5;

/// f = f_l + ∫_x^∞ K(x, y) f_l(y) dy for one kernel, truncated at a point where
/// the bound_K tail is below tol/10 relative to |f_l(k, x)|.
pub struct MaTransform {
    pub kernel: MaKernel,
    gl: (Vec<f64>, Vec<f64>),
    near_width: f64,
}

struct FarNodes {
    /// Panel breakpoints b_j = j·panel.
    panel: f64,
    first: usize,
    y: Vec<f64>,
    w: Vec<f64>,
    f: Vec<Vec<C64>>,
}

impl MaTransform {
    pub fn new(pot: &DecayPotentialSpec, params: &BoundParamsMA, tol: f64) -> Result<Self> {
        Ok(Self::from_kernel(MaKernel::new(pot, params, tol)?))
    }

    pub fn from_kernel(kernel: MaKernel) -> Self {
        let near_width = match kernel.pot.q {
            Potential::ExpDecay { rate, .. } if rate > 0.0 && kernel.pot.l != 0.0 => EXP_NEAR_DECAYS / rate,
            _ => NEAR_WIDTH,
        };
        MaTransform { kernel, gl: gauss_legendre(PANEL_NODES), near_width }
    }

    /// ∫_a^∞ bound_K(x, y) dy.
    fn bound_tail(&self, x: f64, a: f64) -> Result<f64> {
        let pot = &self.kernel.pot;
        let params = &self.kernel.params;
        let l = pot.l;
        let (c, e) = if l == -0.5 { (params.c_l / params.beta, -0.5 + params.beta) } else { (params.c_l, l) };
        let xa = 0.5 * (x + a);
        let s1x = sigma_moment(1, x, pot, 1e-12)?;
        // ∫_a^∞ σ̃₀((x+y)/2) dy = 2 ∫_{xa}^∞ (y − xa)|q(y)| dy
        let rest = 2.0 * (sigma_moment(1, xa, pot, 1e-12)? - xa * sigma_moment(0, xa, pot, 1e-12)?).max(0.0);
        Ok(c * (2.0 / x).powf(e) * (c * s1x).exp() * rest)
    }

    /// sup_{y ≥ a} |f_l(k, y)| ≤ e^{−Im k·a}·max(1, |f_l(k, a) e^{−ika}|).
    fn jost_sup(&self, pt: SpectralPoint, a: f64) -> f64 {
        (-pt.k.im * a).exp() * hankel_g(self.kernel.pot.l, pt.k * a).norm().max(1.0)
    }

    /// Truncation point y_max with tail below tol/10·|f_l(k, x)|.
    pub fn reach(&self, pt: SpectralPoint, x: f64) -> Result<f64> {
        pt.check_jost()?;
        let target = 0.1 * self.kernel.tol * hankel_f(self.kernel.pot.l, pt.k * x).norm();
        let ok = |d: f64| -> Result<bool> { Ok(self.bound_tail(x, x + d)? * self.jost_sup(pt, x + d) <= target) };
        let mut hi = 1.0;
        while !ok(hi)? {
            hi *= 2.0;
            if hi > MAX_REACH {
                return Err(Error::Truncation(format!(
                    "bound_K tail at x = {x} stays above {target:e} up to y = {}",
                    x + MAX_REACH
                )));
            }
        }
        let mut lo = 0.5 * hi;
        if hi == 1.0 {
            return Ok(x + hi);
        }
        for _ in 0..20 {
            let mid = 0.5 * (lo + hi);
            if ok(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(x + hi)
    }

    fn panel_length(pts: &[SpectralPoint]) -> f64 {
        let kmax = pts.iter().map(|p| p.k.norm()).fold(0.0, f64::max);
        (std::f64::consts::PI / kmax).min(2.0)
    }

    fn far_nodes(&self, pts: &[SpectralPoint], x_min: f64, y_max: f64) -> FarNodes {
        let panel = Self::panel_length(pts);
        let first = ((x_min + self.near_width) / panel).floor() as usize;
        let last = (y_max / panel).ceil() as usize;
        let (mut y, mut w) = (Vec::new(), Vec::new());
        for j in first..last {
            let (a, b) = (j as f64 * panel, (j + 1) as f64 * panel);
            for (t, wt) in self.gl.0.iter().zip(&self.gl.1) {
                y.push(0.5 * (a + b) + 0.5 * (b - a) * t);
                w.push(0.5 * (b - a) * wt);
            }
        }
        let l = self.kernel.pot.l;
        let f = pts.iter().map(|p| y.par_iter().map(|&yy| hankel_f(l, p.k * yy)).collect()).collect();
        FarNodes { panel, first, y, w, f }
    }

    fn gl_panels(&self, a: f64, b: f64, n: usize, out: &mut Vec<(f64, f64)>) {
        let h = (b - a) / n as f64;
        for j in 0..n {
            let (pa, pb) = (a + j as f64 * h, a + (j + 1) as f64 * h);
            for (t, wt) in self.gl.0.iter().zip(&self.gl.1) {
                out.push((0.5 * (pa + pb) + 0.5 * h * t, 0.5 * h * wt));
            }
        }
    }

    fn apply_with(&self, pts: &[SpectralPoint], x: f64, far: &FarNodes) -> Result<Vec<C64>> {
        let l = self.kernel.pot.l;
        let mut out: Vec<C64> = pts.iter().map(|p| hankel_f(l, p.k * x)).collect();
        if self.kernel.pot.q.is_zero() {
            return Ok(out);
        }
        let mut near = Vec::new();
        let n_near = (self.near_width / far.panel).ceil() as usize;
        self.gl_panels(x, x + self.near_width, n_near, &mut near);
        for &(y, w) in &near {
            let kw = w * self.kernel.k(x, y)?;
            for (o, p) in out.iter_mut().zip(pts) {
                *o += hankel_f(l, p.k * y) * kw;
            }
        }
        // partial panel up to the next fixed breakpoint, then the shared nodes
        let start = x + self.near_width;
        let j0 = (start / far.panel).floor() as usize + 1;
        let mut part = Vec::new();
        self.gl_panels(start, j0 as f64 * far.panel, 1, &mut part);
        for &(y, w) in &part {
            let kw = w * self.kernel.k_table(x, y)?;
            for (o, p) in out.iter_mut().zip(pts) {
                *o += hankel_f(l, p.k * y) * kw;
            }
        }
        let skip = (j0 - far.first) * PANEL_NODES;
        for (i, (&y, &w)) in far.y.iter().zip(&far.w).enumerate().skip(skip) {
            let kw = w * self.kernel.k_table(x, y)?;
            for (o, fp) in out.iter_mut().zip(&far.f) {
                *o += fp[i] * kw;
            }
        }
        Ok(out)
    }

    fn common_reach(&self, pts: &[SpectralPoint], xs: &[f64]) -> Result<f64> {
        let mut y_max: f64 = 0.0;
        for p in pts {
            for &x in xs {
                y_max = y_max.max(self.reach(*p, x)?);
            }
        }
        Ok(y_max)
    }

    fn check_xs(&self, xs: &[f64]) -> Result<()> {
        for &x in xs {
            if !(x >= self.kernel.pot.x_floor * (1.0 - 1e-12)) {
                return Err(Error::Domain(format!("need x >= x_floor = {}, got {x}", self.kernel.pot.x_floor)));
            }
        }
        Ok(())
    }

    pub fn apply_many(&self, pts: &[SpectralPoint], x: f64) -> Result<Vec<C64>> {
        self.check_xs(&[x])?;
        let y_max = self.common_reach(pts, &[x])?;
        let far = self.far_nodes(pts, x, y_max);
        self.apply_with(pts, x, &far)
    }

    pub fn apply(&self, pt: SpectralPoint, x: f64) -> Result<C64> {
        Ok(self.apply_many(&[pt], x)?[0])
    }

    /// Samples f on `xs` for each point, with one truncation point for the
    /// whole sample so the values are smooth in x.
    pub fn sample(&self, pts: &[SpectralPoint], xs: &[f64]) -> Result<Vec<SolutionSample>> {
        if xs.is_empty() {
            return Err(Error::Grid("empty node list".into()));
        }
        self.check_xs(xs)?;
        let y_max = self.common_reach(pts, xs)?;
        let x_min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let far = self.far_nodes(pts, x_min, y_max);
        let rows = xs.par_iter().map(|&x| self.apply_with(pts, x, &far)).collect::<Result<Vec<_>>>()?;
        Ok((0..pts.len())
            .map(|i| SolutionSample {
                x_nodes: xs.to_vec(),
                values: rows.iter().map(|r| r[i]).collect(),
                kind: SolutionKind::JostPerturbed,
            })
            .collect())
    }
}

pub fn apply_ma(pot: &DecayPotentialSpec, params: &BoundParamsMA, pt: SpectralPoint, x: f64, tol: f64) -> Result<C64> {
    MaTransform::new(pot, params, tol)?.apply(pt, x)
}

type State = SVector<f64, 4>;

fn pack(u: C64, du: C64) -> State {
    State::new(u.re, u.im, du.re, du.im)
}

/// u″ = (l(l+1)/x² + q − k²) u.
struct RadialEq<'a> {
    q: &'a Potential,
    cl: f64,
    z: C64,
}

impl System<f64, State> for RadialEq<'_> {
    fn system(&self, x: f64, y: &State, dy: &mut State) {
        let u = C64::new(y[0], y[1]);
        let a = (self.cl / (x * x) + self.q.eval(x)) - self.z;
        let d2 = a * u;
        dy[0] = y[2];
        dy[1] = y[3];
        dy[2] = d2.re;
        dy[3] = d2.im;
    }
}

/// g = e^{−ikx} f with g″ = (l(l+1)/x² + q) g − 2ik g′.
struct JostEq<'a> {
    q: &'a Potential,
    cl: f64,
    k: C64,
}

impl System<f64, State> for JostEq<'_> {
    fn system(&self, x: f64, y: &State, dy: &mut State) {
        let g = C64::new(y[0], y[1]);
        let dg = C64::new(y[2], y[3]);
        let d2 = g * (self.cl / (x * x) + self.q.eval(x)) - 2.0 * I * self.k * dg;
        dy[0] = y[2];
        dy[1] = y[3];
        dy[2] = d2.re;
        dy[3] = d2.im;
    }
}

fn integrate<S: System<f64, State>>(sys: S, x0: f64, x1: f64, y0: State, tol: f64) -> Result<State> {
    let atol = tol * y0.norm() * 1e-6;
    let mut solver = Dopri5::from_param(
        sys,
        x0,
        x1,
        x1 - x0,
        y0,
        tol,
        atol.max(1e-300),
        0.9,
        0.04,
        0.2,
        10.0,
        (x1 - x0).abs(),
        0.0,
        1_000_000,
        1000,
        OutputType::Sparse,
    );
    solver.integrate().map_err(|e| Error::Stiffness(format!("{e:?} integrating from {x0} to {x1}")))?;
    solver.y_out().last().copied().ok_or_else(|| Error::Stiffness("no output".into()))
}

/// Start of the regular-solution integration.
pub const REGULAR_X0: f64 = 1e-4;

/// Free Green's function of the k = 0 equation for the regular problem and
/// its x-derivative: g(x, y) = (x^{l+1} y^{−l} − y^{l+1} x^{−l})/(2l+1).
fn green0(l: f64, x: f64, y: f64) -> (f64, f64) {
    if l == -0.5 {
        let r = (x / y).ln();
        ((x * y).sqrt() * r, (y / x).sqrt() * (0.5 * r + 1.0))
    } else {
        let c = 2.0 * l + 1.0;
        let a = x.powf(l + 1.0) * y.powf(-l);
        let b = y.powf(l + 1.0) * x.powf(-l);
        ((a - b) / c, ((l + 1.0) * a / x + l * b / x) / c)
    }
}

/// φ and φ′ at x₀ with one Lippmann–Schwinger correction.
fn regular_start(q: &Potential, l: f64, pt: SpectralPoint, x0: f64) -> Result<(C64, C64)> {
    let (u, du) = regular(l, pt.k, x0);
    if q.is_zero() {
        return Ok((u, du));
    }
    let part = |deriv: bool, imag: bool| {
        integrate_de(
            |y| {
                let g = green0(l, x0, y);
                let p = regular(l, pt.k, y).0;
                let v = if imag { p.im } else { p.re };
                (if deriv { g.1 } else { g.0 }) * q.eval(y) * v
            },
            0.0,
            x0,
            1e-12,
        )
    };
    let du0 = C64::new(part(false, false)?, part(false, true)?);
    let du1 = C64::new(part(true, false)?, part(true, true)?);
    Ok((u + du0, du + du1))
}

/// The regular solution at x_eval by adaptive Dormand–Prince integration from x₀ = 1e−4.
pub fn direct_regular(pot: &PotentialSpec, l: f64, pt: SpectralPoint, x_eval: f64, tol: f64) -> Result<C64> {
    Ok(direct_regular_pair(pot, l, pt, x_eval, tol)?.0)
}

/// (φ, φ′) at x_eval.
pub fn direct_regular_pair(pot: &PotentialSpec, l: f64, pt: SpectralPoint, x_eval: f64, tol: f64) -> Result<(C64, C64)> {
    check_pos(x_eval)?;
    if x_eval > pot.domain_cap {
        return Err(Error::Domain(format!("need x <= L = {}, got {x_eval}", pot.domain_cap)));
    }
    let x0 = REGULAR_X0.min(0.5 * x_eval);
    let (u, du) = regular_start(&pot.q, l, pt, x0)?;
    let sys = RadialEq { q: &pot.q, cl: l * (l + 1.0), z: pt.z_energy };
    let y = integrate(sys, x0, x_eval, pack(u, du), tol)?;
    Ok((C64::new(y[0], y[1]), C64::new(y[2], y[3])))
}

/// Smallest x_∞ ≥ x_eval + 1 on a doubling ladder with σ̃₀(x_∞) < tol/100.
fn jost_start(pot: &DecayPotentialSpec, x_eval: f64, tol: f64) -> Result<f64> {
    let mut d: f64 = 1.0;
    loop {
        let x = x_eval + d;
        if sigma_moment(0, x, pot, 1e-12)? < 0.01 * tol {
            return Ok(x);
        }
        d *= 2.0;
        if d > 1e7 {
            return Err(Error::Tail(format!("σ̃₀ stays above {:e} up to x = {x}", 0.01 * tol)));
        }
    }
}

/// The Jost solution at x_eval, integrated backward from x_∞ with free data.
pub fn direct_jost(pot: &DecayPotentialSpec, pt: SpectralPoint, x_eval: f64, tol: f64) -> Result<C64> {
    Ok(direct_jost_pair(pot, pt, x_eval, tol)?.0)
}

/// (f, f′) at x_eval.
pub fn direct_jost_pair(pot: &DecayPotentialSpec, pt: SpectralPoint, x_eval: f64, tol: f64) -> Result<(C64, C64)> {
    if !(x_eval >= pot.x_floor * (1.0 - 1e-12)) {
        return Err(Error::Domain(format!("need x >= x_floor = {}, got {x_eval}", pot.x_floor)));
    }
    if pt.k == C64::new(0.0, 0.0) {
        return Err(Error::Domain("Jost solutions need k != 0".into()));
    }
    let l = pot.l;
    let k = pt.k;
    let x_inf = jost_start(pot, x_eval, tol)?;
    let g0 = hankel_g(l, k * x_inf);
    let dg0 = k * hankel_g_deriv(l, k * x_inf);
    let sys = JostEq { q: &pot.q, cl: l * (l + 1.0), k };
    let y = integrate(sys, x_inf, x_eval, pack(g0, dg0), tol)?;
    let (g, dg) = (C64::new(y[0], y[1]), C64::new(y[2], y[3]));
    let e = (I * k * x_eval).exp();
    Ok((g * e, (dg + I * k * g) * e))
}

/// max over interior nodes of |u″ + (k² − l(l+1)/x² − q) u| divided by the
/// local scale (|k²| + |V|)·√(|u|² + |u′|²/(|k²| + |V|)) + |u″|, with u″, u′
/// central differences; nodes must be uniformly spaced.
pub fn ode_residual<P: HasPotential + ?Sized>(sample: &SolutionSample, pot: &P, l: f64, pt: SpectralPoint) -> Result<f64> {
    let xs = &sample.x_nodes;
    let u = &sample.values;
    if xs.len() < 5 || u.len() != xs.len() {
        return Err(Error::Grid(format!("need >= 5 nodes with one value each, got {} and {}", xs.len(), u.len())));
    }
    let h = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    if !(h > 0.0) {
        return Err(Error::Grid("nodes must be increasing".into()));
    }
    for (i, &x) in xs.iter().enumerate() {
        if (x - (xs[0] + i as f64 * h)).abs() > 1e-9 * h.max(x.abs() * 1e-3) {
            return Err(Error::Grid(format!("node {i} at {x} breaks uniform spacing {h}")));
        }
    }
    if u.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Grid("non-finite sample value".into()));
    }
    let q = pot.potential();
    let cl = l * (l + 1.0);
    let mut worst: f64 = 0.0;
    for i in 1..xs.len() - 1 {
        let x = xs[i];
        let v = cl / (x * x) + q.eval(x);
        let d2 = (u[i + 1] - u[i] * 2.0 + u[i - 1]) / (h * h);
        let d1 = (u[i + 1] - u[i - 1]) / (2.0 * h);
        let r = (d2 + (pt.z_energy - v) * u[i]).norm();
        let a = pt.z_energy.norm() + v.abs();
        let scale = a * (u[i].norm_sqr() + d1.norm_sqr() / a.max(1e-300)).sqrt() + d2.norm();
        if scale > 0.0 {
            worst = worst.max(r / scale);
        } else if r > 0.0 {
            worst = f64::INFINITY;
        }
    }
    Ok(worst)
}

/// n uniformly spaced nodes centred at c with spacing h.
pub fn uniform_nodes(c: f64, h: f64, n: usize) -> Vec<f64> {
    let m = (n as f64 - 1.0) / 2.0;
    (0..n).map(|i| c + (i as f64 - m) * h).collect()
}
