//! Gelfand–Levitan kernel B(x, y) on 0 < y ≤ x ≤ L.
//!
//! In the characteristic variables z = (x+y)²/4, s = (x−y)²/4 the function
//! u(z, s) = (z−s)^l B(x, y) solves a Volterra equation whose kernel is the
//! Riemann function v. Writing a = √ξ, b = √η for the evaluation point and
//! substituting z = z̃², s = s̃² removes the (zs)^{−1/2} factor:
//!
//!   u₀(ξ, η)     = ½ ∫₀^a v(t², 0) q(t) t^{2l} dt
//!   u_{n+1}(ξ, η) = ∫₀^b ∫_{s̃}^a v(z̃², s̃²) q(z̃+s̃) u_n(z̃², s̃²) dz̃ ds̃
//!
//! with v = v₂ for z̃ < b and v = v₁ for z̃ > b.
//!
//! [`GlKernel`] tabulates G = B/τ^{l+1} (τ = y/x) on a Chebyshev grid and
//! iterates the discretised operator; point values re-apply the exact
//! operator to the tabulated sum so the interpolation error enters only
//! through one smoothing integral.

use crate::cheb::{eval2, Cheb};
use crate::error::{Error, Result};
use crate::goursat::{Domain, Lattice};
use crate::potential::Potential;
use crate::quadrature::{integrate_de, integrate_triangle, tanh_sinh_rule, DeNode, Region};
use crate::riemann::RiemannEval;
use rayon::prelude::*;
use std::sync::Arc;

pub const N_MAX: usize = 30;

/// Potential together with the integrability class it is used in.
#[derive(Clone)]
pub struct PotentialSpec {
    pub q: Potential,
    pub p: f64,
    /// True iff l = −½, where norms carry the weight z^{−p/p′}.
    pub weighted: bool,
    pub domain_cap: f64,
    pub analytic_norm: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
}

impl std::fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PotentialSpec")
            .field("q", &self.q)
            .field("p", &self.p)
            .field("weighted", &self.weighted)
            .field("domain_cap", &self.domain_cap)
            .finish()
    }
}

/// p > 1 and p′ = p/(p−1).
pub fn dual_exponent(p: f64) -> f64 {
    p / (p - 1.0)
}

/// Checks the (l, p) pair against the three admissible classes.
pub fn check_class(l: f64, p: f64) -> Result<()> {
    if !(l >= -0.5) {
        return Err(Error::Domain(format!("l must be >= -1/2, got {l}")));
    }
    if l >= 0.0 {
        if !(p > 1.0) {
            return Err(Error::Domain(format!("l >= 0 requires p > 1, got p = {p}")));
        }
    } else if l > -0.5 {
        let pmin = 1.0 / (2.0 * l + 1.0);
        if !(p > pmin) {
            return Err(Error::Domain(format!("-1/2 < l < 0 requires p > 1/(2l+1) = {pmin}, got p = {p}")));
        }
    } else if !(p > 2.0 && p.is_finite()) {
        return Err(Error::Domain(format!(
            "l = -1/2 requires 2 < p < inf with the weight z^(-p/p'), got p = {p}"
        )));
    }
    Ok(())
}

impl PotentialSpec {
    pub fn new(q: Potential, l: f64, p: f64, domain_cap: f64) -> Result<Self> {
        check_class(l, p)?;
        if !(domain_cap > 0.0) {
            return Err(Error::Domain(format!("L must be positive, got {domain_cap}")));
        }
        Ok(PotentialSpec { q, p, weighted: l == -0.5, domain_cap, analytic_norm: None })
    }

    pub fn p_dual(&self) -> f64 {
        dual_exponent(self.p)
    }

    fn weight_exponent(&self) -> f64 {
        if self.weighted {
            self.p / self.p_dual()
        } else {
            0.0
        }
    }
}

/// Constants of the B estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParamsGL {
    pub alpha: f64,
    pub c_tilde: f64,
}

impl BoundParamsGL {
    /// Upper end of the admissible α range.
    pub fn alpha_max(l: f64, p: f64) -> f64 {
        let pd = dual_exponent(p);
        if l == -0.5 {
            -0.5 + 1.0 / pd
        } else if l < 0.0 {
            l + 0.5 / pd
        } else {
            0.5 / pd
        }
    }

    /// α at half its upper limit, C̃ = 1.
    pub fn default_for(l: f64, p: f64) -> Self {
        BoundParamsGL { alpha: 0.5 * Self::alpha_max(l, p), c_tilde: 1.0 }
    }

    pub fn validate(&self, l: f64, p: f64) -> Result<()> {
        let hi = Self::alpha_max(l, p);
        if !(self.alpha > 0.0 && self.alpha < hi) {
            return Err(Error::Domain(format!("alpha must lie in (0, {hi}), got {}", self.alpha)));
        }
        if !(self.c_tilde >= 0.0) {
            return Err(Error::Domain(format!("c_tilde must be non-negative, got {}", self.c_tilde)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterateTrace {
    pub sup_norms: Vec<f64>,
    pub tail_estimate: f64,
    pub n_terms: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMethod {
    RiemannSeries,
    GoursatFixedPoint,
}

impl KernelMethod {
    pub fn name(&self) -> &'static str {
        match self {
            KernelMethod::RiemannSeries => "RiemannSeries",
            KernelMethod::GoursatFixedPoint => "GoursatFixedPoint",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelGrid {
    pub l: f64,
    pub nodes: Vec<(f64, f64)>,
    pub values: Vec<f64>,
    pub method: KernelMethod,
    pub tol: f64,
}

/// (∫₀^r |q|^p z^{−w})^{1/p}, w = p/p′ in the weighted class and 0 otherwise.
pub fn lp_norm_partial(pot: &PotentialSpec, r: f64) -> Result<f64> {
    if !(r > 0.0 && r <= pot.domain_cap * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!("need 0 < r <= L = {}, got {r}", pot.domain_cap)));
    }
    if let Some(f) = &pot.analytic_norm {
        return Ok(f(r));
    }
    pot.q.lp_norm(pot.p, r, pot.weight_exponent())
}

/// B(x, x) = ½ ∫₀^x q.
#[allow(non_snake_case)]
pub fn diag_B(x: f64, pot: &PotentialSpec) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("need x > 0, got {x}")));
    }
    Ok(0.5 * pot.q.integral(0.0, x)?)
}

/// Right-hand side of the B estimate at (x, y).
#[allow(non_snake_case)]
pub fn bound_B(x: f64, y: f64, pot: &PotentialSpec, l: f64, params: &BoundParamsGL) -> Result<f64> {
    if !(0.0 < y && y <= x) {
        return Err(Error::Domain(format!("need 0 < y <= x, got x={x}, y={y}")));
    }
    params.validate(l, pot.p)?;
    let mut pd = pot.p_dual();
    // the I₄ estimate degenerates on (−l−1)p′ + 1 = 0
    if ((-l - 1.0) * pd + 1.0).abs() < 1e-12 {
        pd += 1e-9;
    }
    let norm = lp_norm_partial(pot, x)?;
    let a = params.alpha;
    let grow = x.powf(1.0 + 1.0 / pd);
    if pot.weighted {
        let m = pot.domain_cap.max(1.0).powf(0.5 / pd);
        Ok((x * y).powf(1.0 / pd - a) / a * norm * x.powf(2.0 * a) * m * (params.c_tilde * m * grow * norm / a).exp())
    } else {
        Ok((x * y).powf(0.5 / pd - a) / a * norm * x.powf(2.0 * a) * (params.c_tilde * grow * norm / a).exp())
    }
}

/// Smallest c ≥ 0 (to relative precision 1e−6) with ok(c), for ok monotone in c.
pub(crate) fn smallest_constant(ok: impl Fn(f64) -> Result<bool>) -> Result<f64> {
    if ok(0.0)? {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while !ok(hi)? {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NonConvergence("no finite constant satisfies the bound".into()));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Smallest C̃ with |B| ≤ bound_B at every sample (x, y, |B|), for fixed α.
pub fn fit_c_tilde(samples: &[(f64, f64, f64)], pot: &PotentialSpec, l: f64, alpha: f64) -> Result<f64> {
    smallest_constant(|c| {
        let params = BoundParamsGL { alpha, c_tilde: c };
        for &(x, y, b) in samples {
            if b.abs() > bound_B(x, y, pot, l, &params)? {
                return Ok(false);
            }
        }
        Ok(true)
    })
}

/// v(t², 0; η, ξ) from a = √ξ, b = √η and the distances of t to b.
fn v_boundary(ev: &RiemannEval, t: f64, a: f64, b: f64, xy: f64) -> f64 {
    if t < b {
        ev.v2_diff((b - t) * (b + t), a * a, t * t, xy)
    } else {
        ev.v1_diff((t - b) * (t + b), a * a, t * t, (a - t) * (a + t), b * b)
    }
}

fn check_point(xi: f64, eta: f64) -> Result<()> {
    if !(0.0 < eta && eta < xi) {
        return Err(Error::Domain(format!("need 0 < eta < xi, got xi={xi}, eta={eta}")));
    }
    Ok(())
}

/// u₀(ξ, η) by adaptive quadrature on both sides of z = η.
pub fn u0(xi: f64, eta: f64, pot: &PotentialSpec, l: f64, tol: f64) -> Result<f64> {
    check_point(xi, eta)?;
    if pot.q.is_zero() {
        return Ok(0.0);
    }
    let (a, b) = (xi.sqrt(), eta.sqrt());
    let xy = xi - eta;
    let ev = RiemannEval::new(l, eta, xi)?;
    let f = |t: f64| 0.5 * v_boundary(&ev, t, a, b, xy) * pot.q.eval(t) * t.powf(2.0 * l);
    let lo = if ev.v2_vanishes() { 0.0 } else { integrate_de(f, 0.0, b, tol)? };
    let hi = integrate_de(f, b, a, tol)?;
    Ok(lo + hi)
}

/// One successive-approximation step at (ξ, η) for a callable u_n(z, s),
/// integrated adaptively over {0 < s < η, s < z < ξ}.
pub fn u_iterate<F: Fn(f64, f64) -> f64 + Sync>(
    prev: F,
    pot: &PotentialSpec,
    l: f64,
    xi: f64,
    eta: f64,
    tol: f64,
) -> Result<f64> {
    check_point(xi, eta)?;
    let ev = RiemannEval::new(l, eta, xi)?;
    let f = |z: f64, s: f64| {
        if s <= 0.0 || z <= s || z == eta {
            return 0.0;
        }
        let v = ev.v_raw(z, s);
        if !v.is_finite() {
            return 0.0;
        }
        0.25 / (z * s).sqrt() * v * pot.q.eval(z.sqrt() + s.sqrt()) * prev(z, s)
    };
    integrate_triangle(f, Region::GL { eta, xi }, tol)
}

/// Fit ρ from iterate ratios ratio_n = sup[n+1]/sup[n] ≈ ρ/(n+1) over the given range.
pub fn fit_rho(sup: &[f64], range: std::ops::Range<usize>) -> f64 {
    range
        .filter(|&n| n + 1 < sup.len() && sup[n] > 0.0)
        .map(|n| sup[n + 1] / sup[n] * (n + 1) as f64)
        .fold(0.0, f64::max)
}

/// Quadrature point of the smoothing integral: weight (all factors but G) and (x′, τ′).
#[derive(Clone, Copy)]
struct QPt {
    w: f64,
    xp: f64,
    omt: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct GlTableConfig {
    pub nx: usize,
    pub nt: usize,
    pub grade_x: f64,
    pub grade_t: f64,
    pub h: f64,
    pub tmax: f64,
}

impl GlTableConfig {
    pub fn for_potential(q: &Potential) -> Self {
        let (gx, gt) = if q.is_analytic_at_origin() { (1.0, 2.0) } else { (4.0, 4.0) };
        GlTableConfig { nx: 24, nt: 20, grade_x: gx, grade_t: gt, h: 0.25, tmax: 3.0 }
    }
}

/// Tabulated successive-approximation solver for one (q, l) pair on (0, L].
pub struct GlKernel {
    pub pot: PotentialSpec,
    pub l: f64,
    pub tol: f64,
    cfg: GlTableConfig,
    cx: Cheb,
    ct: Cheb,
    outer: Vec<DeNode>,
    inner: Vec<DeNode>,
    line: Vec<DeNode>,
    /// Σ G_n at the table nodes, row-major in x.
    sum: Vec<f64>,
    trace: IterateTrace,
}

impl GlKernel {
    pub fn new(pot: &PotentialSpec, l: f64, tol: f64) -> Result<Self> {
        Self::with_config(pot, l, tol, GlTableConfig::for_potential(&pot.q))
    }

    pub fn with_config(pot: &PotentialSpec, l: f64, tol: f64, cfg: GlTableConfig) -> Result<Self> {
        check_class(l, pot.p)?;
        if !(tol > 0.0) {
            return Err(Error::Domain(format!("tol must be positive, got {tol}")));
        }
        let mut k = GlKernel {
            pot: pot.clone(),
            l,
            tol,
            cfg,
            cx: Cheb::new(cfg.nx),
            ct: Cheb::new(cfg.nt),
            outer: tanh_sinh_rule(cfg.h, cfg.tmax, 1e-300),
            inner: tanh_sinh_rule(cfg.h, cfg.tmax, 1e-300),
            line: tanh_sinh_rule(0.5 * cfg.h, cfg.tmax + 0.5, 1e-300),
            sum: vec![0.0; cfg.nx * cfg.nt],
            trace: IterateTrace::default(),
        };
        k.build()?;
        Ok(k)
    }

    pub fn trace(&self) -> &IterateTrace {
        &self.trace
    }

    fn node(&self, i: usize, j: usize) -> (f64, f64, f64) {
        let x = self.pot.domain_cap * self.cx.nodes[i].powf(self.cfg.grade_x);
        let omt = (1.0 - self.ct.nodes[j]).powf(self.cfg.grade_t);
        (x, 1.0 - omt, omt)
    }

    /// Factor x^{2l} τ^{2l+1} relating u and G.
    fn u_factor(&self, x: f64, t: f64) -> f64 {
        x.powf(2.0 * self.l) * t.powf(2.0 * self.l + 1.0)
    }

    fn to_unit(&self, xp: f64, omt: f64) -> (f64, f64) {
        let xs = (xp / self.pot.domain_cap).powf(1.0 / self.cfg.grade_x).min(1.0);
        let ws = 1.0 - omt.powf(1.0 / self.cfg.grade_t);
        (xs, ws)
    }

    /// u₀ at (x, y) from the fixed boundary rule.
    fn u0_fixed(&self, x: f64, y: f64, ev: &RiemannEval) -> f64 {
        if self.pot.q.is_zero() {
            return 0.0;
        }
        let (a, b) = (0.5 * (x + y), 0.5 * (x - y));
        let xy = x * y;
        let l2 = 2.0 * self.l;
        let mut s = 0.0;
        for nd in &self.line {
            let t = b + y * nd.from_left;
            let v = ev.v1_diff(y * nd.from_left * (t + b), a * a, t * t, y * nd.from_right * (a + t), b * b);
            s += y * nd.weight * v * self.pot.q.eval(t) * t.powf(l2);
        }
        if !ev.v2_vanishes() {
            for nd in &self.line {
                let t = b * nd.from_left;
                let v = ev.v2_diff(b * nd.from_right * (b + t), a * a, t * t, xy);
                s += b * nd.weight * v * self.pot.q.eval(t) * t.powf(l2);
            }
        }
        0.5 * s
    }

    /// Quadrature points of the iterate integral at (x, y), y < x.
    fn qpoints(&self, x: f64, y: f64, ev: &RiemannEval) -> Vec<QPt> {
        let (a, b) = (0.5 * (x + y), 0.5 * (x - y));
        let l2 = 2.0 * self.l;
        let mut out = Vec::with_capacity(self.outer.len() * self.inner.len() * 2);
        let q = &self.pot.q;
        let mut push = |w: f64, zt: f64, st: f64, zms_t: f64| {
            let xp = zt + st;
            let tp = zms_t / xp;
            let omt = 2.0 * st / xp;
            let qv = q.eval(xp);
            if qv == 0.0 || w == 0.0 {
                return;
            }
            let f = w * qv * xp.powf(l2) * tp.powf(l2 + 1.0);
            if f.is_finite() {
                out.push(QPt { w: f, xp, omt });
            }
        };
        for o in &self.outer {
            let st = b * o.from_left;
            let bms = b * o.from_right;
            let ems = bms * (b + st);
            let ams = y + bms;
            let xms = ams * (a + st);
            for nd in &self.inner {
                // v₁ leg, z̃ ∈ [b, a]
                let zt = b + y * nd.from_left;
                let zmb = y * nd.from_left;
                let zms_t = zmb + bms;
                let v = ev.v1_diff(zmb * (zt + b), xms, zms_t * (zt + st), y * nd.from_right * (a + zt), ems);
                push(b * o.weight * y * nd.weight * v, zt, st, zms_t);
            }
            if !ev.v2_vanishes() {
                for nd in &self.inner {
                    // v₂ leg, z̃ ∈ [s̃, b]
                    let zms_t = bms * nd.from_left;
                    let zt = st + zms_t;
                    let v = ev.v2_diff(bms * nd.from_right * (b + zt), xms, zms_t * (zt + st), x * y);
                    push(b * o.weight * bms * nd.weight * v, zt, st, zms_t);
                }
            }
        }
        out
    }

    fn build(&mut self) -> Result<()> {
        let (nx, nt) = (self.cfg.nx, self.cfg.nt);
        let nn = nx * nt;
        if self.pot.q.is_zero() {
            self.trace = IterateTrace { sup_norms: vec![0.0], tail_estimate: 0.0, n_terms: 1 };
            return Ok(());
        }
        let rows: Vec<Result<(f64, f64, Vec<f64>)>> = (0..nn)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / nt, k % nt);
                let (x, t, _) = self.node(i, j);
                let y = t * x;
                let (a, b) = (0.5 * (x + y), 0.5 * (x - y));
                let ev = RiemannEval::new(self.l, b * b, a * a)?;
                let fac = self.u_factor(x, t);
                let g0 = self.u0_fixed(x, y, &ev) / fac;
                let mut row = vec![0.0; nn];
                let mut bx = vec![0.0; nx];
                let mut bt = vec![0.0; nt];
                for p in self.qpoints(x, y, &ev) {
                    let (xs, ws) = self.to_unit(p.xp, p.omt);
                    self.cx.basis(xs, &mut bx);
                    self.ct.basis(ws, &mut bt);
                    let w = p.w / fac;
                    for (ii, &vx) in bx.iter().enumerate() {
                        let f = w * vx;
                        if f == 0.0 {
                            continue;
                        }
                        let r = &mut row[ii * nt..(ii + 1) * nt];
                        for (slot, &vt) in r.iter_mut().zip(&bt) {
                            *slot += f * vt;
                        }
                    }
                }
                Ok((g0, fac, row))
            })
            .collect();
        let mut g = Vec::with_capacity(nn);
        let mut fac = Vec::with_capacity(nn);
        let mut m = Vec::with_capacity(nn);
        for r in rows {
            let (a, b, c) = r?;
            g.push(a);
            fac.push(b);
            m.push(c);
        }
        if g.iter().any(|v| !v.is_finite()) || m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Convergence("non-finite entries in the iterate operator".into()));
        }
        let sup = |g: &[f64]| g.iter().zip(&fac).map(|(a, f)| (a * f).abs()).fold(0.0, f64::max);
        let mut sum = g.clone();
        let mut sups = vec![sup(&g)];
        let scale = sups[0];
        let mut tail = f64::INFINITY;
        let mut converged = scale == 0.0;
        while !converged && sups.len() <= N_MAX {
            g = m.par_iter().map(|row| row.iter().zip(&g).map(|(a, b)| a * b).sum()).collect();
            for (s, v) in sum.iter_mut().zip(&g) {
                *s += v;
            }
            let n = sups.len();
            sups.push(sup(&g));
            if sups[n] == 0.0 {
                tail = 0.0;
                converged = true;
                break;
            }
            if n >= 3 {
                let rho = fit_rho(&sups, n - 3..n);
                if (n + 1) as f64 > rho {
                    tail = sups[n] * rho / ((n + 1) as f64 - rho);
                    converged = tail <= self.tol * scale;
                }
            }
        }
        if !converged {
            return Err(Error::NonConvergence(format!(
                "iterates not below tol after {N_MAX} terms (last sup {:e})",
                sups.last().unwrap()
            )));
        }
        self.trace = IterateTrace { n_terms: sups.len(), sup_norms: sups, tail_estimate: tail };
        self.sum = sum;
        Ok(())
    }

    fn table_g(&self, x: f64, omt: f64) -> f64 {
        let (xs, ws) = self.to_unit(x, omt);
        let mut bx = vec![0.0; self.cfg.nx];
        let mut bt = vec![0.0; self.cfg.nt];
        eval2(&self.cx, &self.ct, &self.sum, xs, ws, &mut bx, &mut bt)
    }

    fn check_xy(&self, x: f64, y: f64) -> Result<()> {
        if !(0.0 < y && y <= x && x <= self.pot.domain_cap * (1.0 + 1e-12)) {
            return Err(Error::Domain(format!(
                "need 0 < y <= x <= L = {}, got x={x}, y={y}",
                self.pot.domain_cap
            )));
        }
        Ok(())
    }

    /// u(ξ, η) with ξ−η = xy passed separately to avoid cancellation.
    fn u_xy(&self, x: f64, y: f64) -> Result<f64> {
        let (a, b) = (0.5 * (x + y), 0.5 * (x - y));
        let ev = RiemannEval::new(self.l, b * b, a * a)?;
        let mut bx = vec![0.0; self.cfg.nx];
        let mut bt = vec![0.0; self.cfg.nt];
        let mut acc = Vec::new();
        for p in self.qpoints(x, y, &ev) {
            let (xs, ws) = self.to_unit(p.xp, p.omt);
            acc.push(p.w * eval2(&self.cx, &self.ct, &self.sum, xs, ws, &mut bx, &mut bt));
        }
        Ok(self.u0_fixed(x, y, &ev) + crate::quadrature::pairwise_sum(&acc))
    }

    /// u(ξ, η) for 0 < η < ξ.
    pub fn u(&self, xi: f64, eta: f64) -> Result<f64> {
        check_point(xi, eta)?;
        let (a, b) = (xi.sqrt(), eta.sqrt());
        self.u_xy(a + b, a - b)
    }

    /// B(x, y) with the smoothing integral.
    pub fn b(&self, x: f64, y: f64) -> Result<f64> {
        self.check_xy(x, y)?;
        if y == x {
            return diag_B(x, &self.pot);
        }
        if self.pot.q.is_zero() {
            return Ok(0.0);
        }
        Ok((x * y).powf(-self.l) * self.u_xy(x, y)?)
    }

    /// B(x, y) from the table interpolant alone.
    pub fn b_table(&self, x: f64, y: f64) -> Result<f64> {
        self.check_xy(x, y)?;
        if self.pot.q.is_zero() {
            return Ok(0.0);
        }
        let t = y / x;
        Ok(t.powf(self.l + 1.0) * self.table_g(x, (x - y) / x))
    }
}

/// u(ξ, η) and the iterate trace.
pub fn solve_u(xi: f64, eta: f64, pot: &PotentialSpec, l: f64, tol: f64) -> Result<(f64, IterateTrace)> {
    let k = GlKernel::new(pot, l, tol)?;
    Ok((k.u(xi, eta)?, k.trace.clone()))
}

/// B(x, y) for 0 < y ≤ x ≤ L. Builds the table per call; use [`GlKernel`] for many points.
#[allow(non_snake_case)]
pub fn kernel_B(x: f64, y: f64, pot: &PotentialSpec, l: f64, tol: f64) -> Result<f64> {
    if y == x {
        return diag_B(x, pot);
    }
    GlKernel::new(pot, l, tol)?.b(x, y)
}

/// B on the uniform lattice {(ih, jh): 0 < j ≤ i, ih ≤ L} by fixed-point sweeps
/// of the Goursat integral equation
///   B(x, y) = ½ ∫_{(x−y)/2}^{(x+y)/2} q + ½ ∬_R [q(x̃) + l(l+1)(1/x̃² − 1/ỹ²)] B,
/// R = {x−y < x̃+ỹ < x+y, 0 < x̃−ỹ < x−y}, in the unknown g = B (x/y)^{l+1}.
#[allow(non_snake_case)]
pub fn solve_B_goursat(pot: &PotentialSpec, l: f64, grid_step: f64, cap: f64) -> Result<KernelGrid> {
    if !(grid_step > 0.0 && cap > 0.0) {
        return Err(Error::Domain("grid_step and L must be positive".into()));
    }
    let n = (cap / grid_step).round() as usize;
    if n < 2 || ((n as f64) * grid_step - cap).abs() > 1e-9 * cap {
        return Err(Error::Grid(format!("L = {cap} is not a multiple of grid_step = {grid_step}")));
    }
    let h = grid_step;
    let ll = l * (l + 1.0);
    let q = &pot.q;
    if !q.is_c1_from(0.0) && !matches!(q, Potential::Table(_)) {
        return Err(Error::Domain("the lattice oracle needs a C¹ potential".into()));
    }
    let weight = move |i: f64, j: f64| {
        if j <= 0.0 {
            return 0.0;
        }
        let (xt, yt) = (i * h, j * h);
        let v = q.eval(xt) + if ll == 0.0 { 0.0 } else { ll * (1.0 / (xt * xt) - 1.0 / (yt * yt)) };
        0.5 * h * h * v * (yt / xt).powf(l + 1.0)
    };
    let diag = |t: f64| if t == 0.0 { 0.0 } else { 0.5 * q.integral(0.0, t * h).unwrap_or(f64::NAN) };
    let source = |i: usize, j: usize| 0.5 * q.integral((i - j) as f64 * 0.5 * h, (i + j) as f64 * 0.5 * h).unwrap_or(f64::NAN);
    let scale = |i: usize, j: usize| (i as f64 / j as f64).powf(l + 1.0);
    let lat = Lattice {
        n,
        domain: Domain::Inside,
        weight: &weight,
        diag: &diag,
        source: &source,
        scale: &scale,
        extrapolate_bottom: true,
    };
    let sol = lat.solve(h * h, 200)?;
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    for i in 1..=n {
        for j in 1..=i {
            let g = sol.g[i * (n + 1) + j];
            nodes.push((i as f64 * h, j as f64 * h));
            values.push(g * (j as f64 / i as f64).powf(l + 1.0));
        }
    }
    Ok(KernelGrid { l, nodes, values, method: KernelMethod::GoursatFixedPoint, tol: 10.0 * h * h })
}

/// B on the lattice nodes of `solve_B_goursat` computed from the series solver.
#[allow(non_snake_case)]
pub fn kernel_grid_B(k: &GlKernel, nodes: &[(f64, f64)]) -> Result<KernelGrid> {
    let values = nodes.par_iter().map(|&(x, y)| k.b(x, y)).collect::<Result<Vec<_>>>()?;
    Ok(KernelGrid { l: k.l, nodes: nodes.to_vec(), values, method: KernelMethod::RiemannSeries, tol: k.tol })
}
