//! Marchenko kernel K(x, y) on x_floor ≤ x ≤ y.
//!
//! With ξ = (x+y)/2, η = (y−x)/2 the function w(ξ, η) = K(x, y) solves
//!
//!   w(ξ, η) = ½ ∫_ξ^∞ v₃(z, 0; ξ, η) q(z) dz + ∫_ξ^∞ ∫₀^η q(z−s) v₃(z, s; ξ, η) w(z, s) ds dz.
//!
//! The iterates are reported as w̃_n = P^{e} w_n with P = ξ²/(ξ²−η²) and
//! e = −l (e = ½−β at l = −½), the normalisation of the factorial estimates.
//!
//! [`MaKernel`] tabulates W = w/(σ̃₀(ξ) P^l F(−l, −l; 1; η²/ξ²)) over (x, y−x) on a Chebyshev grid
//! in rationally mapped coordinates covering [x_floor, ∞) × [0, ∞).

use crate::cheb::{eval2, Cheb};
use crate::error::{Error, Result};
use crate::glkernel::{fit_rho, smallest_constant, IterateTrace, KernelGrid, KernelMethod, N_MAX};
use crate::goursat::{Domain, Lattice};
use crate::potential::{numeric_tail, Potential};
use crate::quadrature::{half_line_rule, integrate_de, integrate_triangle, pairwise_sum, tanh_sinh_rule, DeNode, Region};
use crate::riemann::v3_diff;
use crate::specfun::hyp2f1;
use rayon::prelude::*;
use std::sync::Arc;

pub type MomentFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Decaying potential with the angular parameter it is used with.
#[derive(Clone)]
pub struct DecayPotentialSpec {
    pub q: Potential,
    pub l: f64,
    /// Closed forms for σ̃₀ and σ̃₁.
    pub analytic_moments: Option<(MomentFn, MomentFn)>,
    pub x_floor: f64,
}

impl std::fmt::Debug for DecayPotentialSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DecayPotentialSpec")
            .field("q", &self.q)
            .field("l", &self.l)
            .field("x_floor", &self.x_floor)
            .finish()
    }
}

pub const DEFAULT_X_FLOOR: f64 = 0.1;

/// Checks ∫₁^∞ (x + x^l)|q| < ∞.
fn check_decay(q: &Potential, l: f64) -> Result<()> {
    let m = l.max(1.0);
    match q {
        Potential::Zero | Potential::Table(_) => Ok(()),
        Potential::Const(c) if *c == 0.0 => Ok(()),
        Potential::Const(_) => Err(Error::Domain("a nonzero constant is not integrable at infinity".into())),
        Potential::Power { exponent, .. } => {
            if exponent + m < -1.0 {
                Ok(())
            } else {
                Err(Error::Domain(format!(
                    "∫₁^∞ (x + x^l)|q| diverges for q ~ x^{exponent} at l = {l}"
                )))
            }
        }
        Potential::ExpDecay { rate, .. } => {
            if *rate > 0.0 {
                Ok(())
            } else {
                Err(Error::Domain(format!("exponential rate must be positive, got {rate}")))
            }
        }
        Potential::Custom(_) => {
            let v = numeric_tail(|x| (x + x.powf(l)) * q.eval(x).abs(), 1.0)?;
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain("∫₁^∞ (x + x^l)|q| is not finite".into()))
            }
        }
    }
}

impl DecayPotentialSpec {
    pub fn new(q: Potential, l: f64) -> Result<Self> {
        Self::with_floor(q, l, DEFAULT_X_FLOOR)
    }

    pub fn with_floor(q: Potential, l: f64, x_floor: f64) -> Result<Self> {
        if !(l >= -0.5) {
            return Err(Error::Domain(format!("l must be >= -1/2, got {l}")));
        }
        if !(x_floor > 0.0) {
            return Err(Error::Domain(format!("x_floor must be positive, got {x_floor}")));
        }
        check_decay(&q, l)?;
        Ok(DecayPotentialSpec { q, l, analytic_moments: None, x_floor })
    }

    fn sigma0(&self, x: f64) -> Result<f64> {
        match &self.analytic_moments {
            Some((s0, _)) => Ok(s0(x)),
            None => self.q.abs_moment(0, x),
        }
    }

    /// σ̃₀(z)/σ̃₀(ξ) for z ≥ ξ.
    fn sigma0_ratio(&self, z: f64, xi: f64, s0_xi: f64) -> Result<f64> {
        match (&self.analytic_moments, &self.q) {
            (None, Potential::Power { .. }) | (None, Potential::ExpDecay { .. }) => self.q.moment0_ratio(z, xi),
            _ => {
                if s0_xi == 0.0 {
                    Ok(0.0)
                } else {
                    Ok(self.sigma0(z)? / s0_xi)
                }
            }
        }
    }

    /// q(z)/σ̃₀(ξ).
    fn q_over_sigma0(&self, z: f64, xi: f64, s0_xi: f64) -> Result<f64> {
        match (&self.analytic_moments, &self.q) {
            (None, Potential::Power { .. }) | (None, Potential::ExpDecay { .. }) => self.q.q_over_moment0(z, xi),
            _ => {
                if s0_xi == 0.0 {
                    Ok(0.0)
                } else {
                    Ok(self.q.eval(z) / s0_xi)
                }
            }
        }
    }

    fn check_x(&self, x: f64) -> Result<()> {
        if !(x >= self.x_floor * (1.0 - 1e-12)) {
            return Err(Error::Domain(format!("need x >= x_floor = {}, got {x}", self.x_floor)));
        }
        Ok(())
    }
}

/// Constants of the K estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParamsMA {
    /// Only used at l = −½.
    pub beta: f64,
    pub c_l: f64,
}

impl Default for BoundParamsMA {
    fn default() -> Self {
        BoundParamsMA { beta: 0.5, c_l: 1.0 }
    }
}

impl BoundParamsMA {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 0.5) {
            return Err(Error::Domain(format!("beta must lie in (0, 1/2], got {}", self.beta)));
        }
        if !(self.c_l >= 0.0) {
            return Err(Error::Domain(format!("c_l must be non-negative, got {}", self.c_l)));
        }
        Ok(())
    }

    /// Exponent e with w̃ = (ξ²/(ξ²−η²))^e w.
    pub fn tilde_exponent(&self, l: f64) -> f64 {
        if l == -0.5 {
            0.5 - self.beta
        } else {
            -l
        }
    }
}

/// (ξ²/(ξ²−η²))^e, the factor turning w into w̃.
pub fn tilde_factor(xi: f64, eta: f64, l: f64, params: &BoundParamsMA) -> f64 {
    let e = params.tilde_exponent(l);
    if e == 0.0 {
        return 1.0;
    }
    (xi * xi / ((xi - eta) * (xi + eta))).powf(e)
}

/// w̃ from w.
pub fn to_tilde(w: f64, xi: f64, eta: f64, l: f64, params: &BoundParamsMA) -> f64 {
    w * tilde_factor(xi, eta, l, params)
}

/// w from w̃.
pub fn from_tilde(wt: f64, xi: f64, eta: f64, l: f64, params: &BoundParamsMA) -> f64 {
    wt / tilde_factor(xi, eta, l, params)
}

/// σ̃_j(x) = ∫_x^∞ y^j |q(y)| dy.
pub fn sigma_moment(j: u32, x: f64, pot: &DecayPotentialSpec, _tol: f64) -> Result<f64> {
    pot.check_x(x)?;
    if j > 1 {
        return Err(Error::Domain(format!("moment order must be 0 or 1, got {j}")));
    }
    match &pot.analytic_moments {
        Some((s0, s1)) => Ok(if j == 0 { s0(x) } else { s1(x) }),
        None => pot.q.abs_moment(j, x),
    }
}

fn check_point(xi: f64, eta: f64, pot: &DecayPotentialSpec) -> Result<()> {
    if !(0.0 <= eta && eta < xi) {
        return Err(Error::Domain(format!("need 0 <= eta < xi, got xi={xi}, eta={eta}")));
    }
    pot.check_x(xi - eta)
}

/// Truncation point z with σ̃₀(z) ≤ frac·σ̃₀(ξ).
fn truncation(pot: &DecayPotentialSpec, xi: f64, frac: f64) -> Result<f64> {
    let s0 = pot.sigma0(xi)?;
    if s0 == 0.0 {
        return Ok(xi);
    }
    let mut w = 1.0f64.max(0.1 * xi);
    for _ in 0..200 {
        let z = xi + w;
        if pot.sigma0_ratio(z, xi, s0)? <= frac {
            return Ok(z);
        }
        w *= 1.5;
    }
    Err(Error::Tail(format!("σ̃₀ does not fall below {frac:e}·σ̃₀({xi})")))
}

/// w̃₀(ξ, η) by adaptive quadrature on [ξ, zmax].
pub fn w0(xi: f64, eta: f64, pot: &DecayPotentialSpec, params: &BoundParamsMA, tol: f64) -> Result<f64> {
    check_point(xi, eta, pot)?;
    params.validate()?;
    if pot.q.is_zero() {
        return Ok(0.0);
    }
    let l = pot.l;
    if eta == 0.0 {
        return Ok(0.5 * pot.q.tail(xi)?);
    }
    let s0 = pot.sigma0(xi)?;
    let zmax = truncation(pot, xi, tol / 10.0)?;
    let (x, y) = (xi - eta, xi + eta);
    let f = |z: f64| {
        let dz = z - xi;
        let v = v3_diff(dz * (z + xi), (z - eta) * (z + eta), z * z, xi * xi, x * y, eta * eta, l);
        v * pot.q.eval(z)
    };
    let i = integrate_de(f, xi, zmax, tol * s0.max(1e-300))?;
    Ok(to_tilde(0.5 * i, xi, eta, l, params))
}

/// One iterate w̃_{n+1}(ξ, η) from a callable w̃_n(z, s). The integrand uses
/// w_n = w̃_n·(z²/(z²−s²))^{−e}, so the recursion is exact for w.
pub fn w_iterate<F: Fn(f64, f64) -> f64 + Sync>(
    prev: F,
    pot: &DecayPotentialSpec,
    params: &BoundParamsMA,
    xi: f64,
    eta: f64,
    tol: f64,
) -> Result<f64> {
    check_point(xi, eta, pot)?;
    params.validate()?;
    if pot.q.is_zero() || eta == 0.0 {
        return Ok(0.0);
    }
    let l = pot.l;
    let zmax = truncation(pot, xi, tol / 10.0)?;
    let (x, y) = (xi - eta, xi + eta);
    let f = |z: f64, s: f64| {
        let (dz, ds) = (z - xi, eta - s);
        let v = v3_diff(dz * (z + xi), (z - eta) * (z + eta), (z - s) * (z + s), (xi - s) * (xi + s), x * y, ds * (eta + s), l);
        let p = prev(z, s);
        if p == 0.0 {
            return 0.0;
        }
        pot.q.eval(z - s) * v * from_tilde(p, z, s, l, params)
    };
    let i = integrate_triangle(f, Region::MA { eta, xi, zmax }, tol)?;
    Ok(to_tilde(i, xi, eta, l, params))
}

/// w(ξ, η) from the tabulated series, with its iterate trace.
pub fn solve_w(xi: f64, eta: f64, pot: &DecayPotentialSpec, params: &BoundParamsMA, tol: f64) -> Result<(f64, IterateTrace)> {
    check_point(xi, eta, pot)?;
    let k = MaKernel::new(pot, params, tol)?;
    Ok((k.w(xi, eta)?, k.trace.clone()))
}

/// K(x, y) for x_floor ≤ x ≤ y. Builds the table per call; use [`MaKernel`] for many points.
#[allow(non_snake_case)]
pub fn kernel_K(x: f64, y: f64, pot: &DecayPotentialSpec, params: &BoundParamsMA, tol: f64) -> Result<f64> {
    pot.check_x(x)?;
    if !(y >= x) {
        return Err(Error::Domain(format!("need x <= y, got x={x}, y={y}")));
    }
    if y == x {
        return diag_K(x, pot);
    }
    MaKernel::new(pot, params, tol)?.k(x, y)
}

/// K(x, x) = ½ ∫_x^∞ q.
#[allow(non_snake_case)]
pub fn diag_K(x: f64, pot: &DecayPotentialSpec) -> Result<f64> {
    pot.check_x(x)?;
    Ok(0.5 * pot.q.tail(x)?)
}

/// Right-hand side of the K estimate at (x, y).
#[allow(non_snake_case)]
pub fn bound_K(x: f64, y: f64, pot: &DecayPotentialSpec, params: &BoundParamsMA) -> Result<f64> {
    params.validate()?;
    pot.check_x(x)?;
    if !(y >= x) {
        return Err(Error::Domain(format!("need x <= y, got x={x}, y={y}")));
    }
    let xi = 0.5 * (x + y);
    let s0 = sigma_moment(0, xi, pot, 1e-12)?;
    if s0 == 0.0 {
        return Ok(0.0);
    }
    let ds1 = sigma_moment(1, x, pot, 1e-12)? - sigma_moment(1, xi, pot, 1e-12)?;
    let l = pot.l;
    let (c, e) = if l == -0.5 { (params.c_l / params.beta, -0.5 + params.beta) } else { (params.c_l, l) };
    Ok(c * (2.0 / x).powf(e) * s0 * (c * ds1.max(0.0)).exp())
}

/// Smallest C_l with |K| ≤ bound_K at every sample (x, y, |K|), for fixed β.
pub fn fit_c_l(samples: &[(f64, f64, f64)], pot: &DecayPotentialSpec, beta: f64) -> Result<f64> {
    smallest_constant(|c| {
        let params = BoundParamsMA { beta, c_l: c };
        for &(x, y, k) in samples {
            if k.abs() > bound_K(x, y, pot, &params)? {
                return Ok(false);
            }
        }
        Ok(true)
    })
}

/// K on the lattice {(x_min + jh, x_min + ih): 0 ≤ j ≤ i ≤ N}, y ≤ y_max, by
/// fixed-point sweeps of the Goursat integral equation
///   K(x, y) = ½ ∫_{(x+y)/2}^∞ q + ½ ∬_{R′} [q(x̃) + l(l+1)(1/x̃² − 1/ỹ²)] K,
/// R′ = {x̃+ỹ > x+y, 0 < ỹ−x̃ < y−x}, truncated at ỹ = y_max.
#[allow(non_snake_case)]
pub fn solve_K_goursat(pot: &DecayPotentialSpec, grid_step: f64, x_min: f64, y_max: f64) -> Result<KernelGrid> {
    pot.check_x(x_min)?;
    if !(grid_step > 0.0 && y_max > x_min) {
        return Err(Error::Domain("need grid_step > 0 and y_max > x_min".into()));
    }
    let span = y_max - x_min;
    let n = (span / grid_step).round() as usize;
    if n < 2 || ((n as f64) * grid_step - span).abs() > 1e-9 * span {
        return Err(Error::Grid(format!("y_max − x_min = {span} is not a multiple of grid_step = {grid_step}")));
    }
    let q = &pot.q;
    if !q.is_c1_from(x_min) && !matches!(q, Potential::Table(_)) {
        return Err(Error::Domain("the lattice oracle needs a C¹ potential".into()));
    }
    // certify the tail is usable before sweeping
    q.tail(x_min)?;
    let h = grid_step;
    let ll = pot.l * (pot.l + 1.0);
    // lattice coordinates: I along y, J along x
    let weight = move |i: f64, j: f64| {
        let (xt, yt) = (x_min + j * h, x_min + i * h);
        let v = q.eval(xt) + if ll == 0.0 { 0.0 } else { ll * (1.0 / (xt * xt) - 1.0 / (yt * yt)) };
        0.5 * h * h * v
    };
    let diag = |t: f64| 0.5 * q.tail(x_min + t * h).unwrap_or(f64::NAN);
    let source = |i: usize, j: usize| 0.5 * q.tail(x_min + (i + j) as f64 * 0.5 * h).unwrap_or(f64::NAN);
    let scale = |_: usize, _: usize| 1.0;
    let lat = Lattice {
        n,
        domain: Domain::Outside,
        weight: &weight,
        diag: &diag,
        source: &source,
        scale: &scale,
        extrapolate_bottom: false,
    };
    let sol = lat.solve(h * h, 200)?;
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    for i in 0..=n {
        for j in 0..=i {
            nodes.push((x_min + j as f64 * h, x_min + i as f64 * h));
            values.push(sol.g[i * (n + 1) + j]);
        }
    }
    Ok(KernelGrid { l: pot.l, nodes, values, method: KernelMethod::GoursatFixedPoint, tol: 10.0 * h * h })
}

/// K on given nodes (x, y), x ≤ y, from a table solver.
#[allow(non_snake_case)]
pub fn kernel_grid_K(k: &MaKernel, nodes: &[(f64, f64)]) -> Result<KernelGrid> {
    let values = nodes.par_iter().map(|&(x, y)| k.k(x, y)).collect::<Result<Vec<_>>>()?;
    Ok(KernelGrid { l: k.pot.l, nodes: nodes.to_vec(), values, method: KernelMethod::RiemannSeries, tol: k.tol })
}

/// F(−l, −l; 1; η²/ξ²), the z → ∞ limit of the hypergeometric factor of v₃(z, 0).
fn f_inf(l: f64, eta: f64, xi: f64) -> f64 {
    if l == 0.0 {
        return 1.0;
    }
    let r = eta / xi;
    hyp2f1(-l, -l, 1.0, r * r).unwrap_or(f64::NAN)
}

/// Map of a unit Chebyshev coordinate onto [0, ∞).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HalfLineMap {
    /// c·u/(1−u), turning algebraic decay into powers of 1−u.
    Rational(f64),
    /// −c·ln(1−u), turning exponential decay into powers of 1−u.
    Log(f64),
    /// (x + c)·u/(1−u) for the y − x coordinate at base point x.
    Relative(f64),
}

impl HalfLineMap {
    fn forward(&self, u: f64, x: f64) -> f64 {
        match *self {
            HalfLineMap::Rational(c) => c * u / (1.0 - u),
            HalfLineMap::Log(c) => -c * (-u).ln_1p(),
            HalfLineMap::Relative(c) => (x + c) * u / (1.0 - u),
        }
    }

    fn inverse(&self, a: f64, x: f64) -> f64 {
        match *self {
            HalfLineMap::Rational(c) => a / (c + a),
            HalfLineMap::Log(c) => -(-a / c).exp_m1(),
            HalfLineMap::Relative(c) => a / (x + c + a),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MaTableConfig {
    pub nx: usize,
    pub nd: usize,
    /// Maps for x − x_floor and y − x.
    pub map_x: HalfLineMap,
    pub map_d: HalfLineMap,
    pub hz: f64,
    pub tmax_z: f64,
    pub hs: f64,
    pub tmax_s: f64,
    /// Table values carry the extra factor (ξ/x)^norm_a and, if norm_f, F(−l,−l;1;η²/ξ²).
    pub norm_a: f64,
    pub norm_f: bool,
}

impl MaTableConfig {
    /// Exponential decay is tabulated on log maps in x; for l > 0 the algebraic
    /// structure in y − x needs the relative map.
    pub fn for_potential(q: &Potential, l: f64) -> Self {
        let (map_x, map_d) = match q {
            Potential::ExpDecay { rate, .. } if *rate > 0.0 && l <= 0.0 => {
                (HalfLineMap::Log(2.0 / rate), HalfLineMap::Log(4.0 / rate))
            }
            Potential::ExpDecay { rate, .. } if *rate > 0.0 => (HalfLineMap::Log(2.0 / rate), HalfLineMap::Relative(2.0)),
            _ => (HalfLineMap::Rational(2.0), HalfLineMap::Rational(4.0)),
        };
        MaTableConfig { nx: 24, nd: 24, map_x, map_d, hz: 0.1, tmax_z: 3.5, hs: 0.2, tmax_s: 3.2, norm_a: 0.0, norm_f: true }
    }
}

#[derive(Clone, Copy)]
struct QPt {
    w: f64,
    xp: f64,
    d: f64,
}

/// Tabulated successive-approximation solver for one decaying potential.
pub struct MaKernel {
    pub pot: DecayPotentialSpec,
    pub params: BoundParamsMA,
    pub tol: f64,
    cfg: MaTableConfig,
    cu: Cheb,
    cv: Cheb,
    zrule: Vec<(f64, f64)>,
    srule: Vec<DeNode>,
    /// Σ W_n at the table nodes, row-major in x.
    sum: Vec<f64>,
    trace: IterateTrace,
}

impl MaKernel {
    pub fn new(pot: &DecayPotentialSpec, params: &BoundParamsMA, tol: f64) -> Result<Self> {
        Self::with_config(pot, params, tol, MaTableConfig::for_potential(&pot.q, pot.l))
    }

    pub fn with_config(pot: &DecayPotentialSpec, params: &BoundParamsMA, tol: f64, cfg: MaTableConfig) -> Result<Self> {
        params.validate()?;
        if !(tol > 0.0) {
            return Err(Error::Domain(format!("tol must be positive, got {tol}")));
        }
        let mut k = MaKernel {
            pot: pot.clone(),
            params: *params,
            tol,
            cfg,
            cu: Cheb::new(cfg.nx),
            cv: Cheb::new(cfg.nd),
            zrule: half_line_rule(cfg.hz, cfg.tmax_z, 1.0),
            srule: tanh_sinh_rule(cfg.hs, cfg.tmax_s, 1e-300),
            sum: vec![0.0; cfg.nx * cfg.nd],
            trace: IterateTrace::default(),
        };
        k.build()?;
        Ok(k)
    }

    pub fn trace(&self) -> &IterateTrace {
        &self.trace
    }

    fn node(&self, i: usize, j: usize) -> (f64, f64) {
        let x = self.pot.x_floor + self.cfg.map_x.forward(self.cu.nodes[i], 0.0);
        (x, self.cfg.map_d.forward(self.cv.nodes[j], x))
    }

    fn to_unit(&self, xp: f64, d: f64) -> (f64, f64) {
        (self.cfg.map_x.inverse((xp - self.pot.x_floor).max(0.0), 0.0), self.cfg.map_d.inverse(d, xp))
    }

    fn fnorm(&self, eta: f64, xi: f64) -> f64 {
        if self.cfg.norm_f {
            f_inf(self.pot.l, eta, xi)
        } else {
            1.0
        }
    }

    /// (x/ξ)^a at base point x and offset d.
    fn extra(&self, x: f64, d: f64) -> f64 {
        if self.cfg.norm_a == 0.0 {
            1.0
        } else {
            (x / (x + 0.5 * d)).powf(self.cfg.norm_a)
        }
    }

    /// Length scale of the z-integrands at ξ: the e-folding length of σ̃₀.
    fn z_scale(&self, xi: f64, s0: f64) -> f64 {
        let r = self.pot.q_over_sigma0(xi, xi, s0).unwrap_or(0.0).abs();
        if r > 0.0 && r.is_finite() {
            (1.0 / r).clamp(0.05, 50.0)
        } else {
            1.0
        }
    }

    /// W₀ at (x, y) from the fixed rule.
    fn w0_fixed(&self, x: f64, y: f64, s0: f64) -> Result<f64> {
        let (xi, eta) = (0.5 * (x + y), 0.5 * (y - x));
        let l = self.pot.l;
        let c = self.z_scale(xi, s0);
        let fi = self.fnorm(eta, xi) * self.extra(x, y - x);
        let mut acc = Vec::with_capacity(self.zrule.len());
        for &(t, wt) in &self.zrule {
            let dz = c * t;
            let z = xi + dz;
            let qn = self.pot.q_over_sigma0(z, xi, s0)?;
            if qn == 0.0 {
                continue;
            }
            let ze = (x + dz) * (z + eta);
            let v = if l == 0.0 {
                1.0
            } else {
                let tt = dz * (z + xi) / ze * (eta * eta) / (xi * xi);
                (ze / (z * z)).powf(l) * hyp2f1(-l, -l, 1.0, tt).unwrap_or(f64::NAN)
            };
            acc.push(0.5 * c * wt * v * qn / fi);
        }
        Ok(pairwise_sum(&acc))
    }

    /// Quadrature points of the iterate integral at (x, y), y > x, in W normalisation.
    fn qpoints(&self, x: f64, y: f64, s0: f64) -> Result<Vec<QPt>> {
        let (xi, eta) = (0.5 * (x + y), 0.5 * (y - x));
        let l = self.pot.l;
        let c = self.z_scale(xi, s0);
        let fi = self.fnorm(eta, xi) * self.extra(x, y - x);
        let mut out = Vec::with_capacity(self.zrule.len() * self.srule.len());
        for &(t, wt) in &self.zrule {
            let dz = c * t;
            let z = xi + dz;
            let r0 = self.pot.sigma0_ratio(z, xi, s0)?;
            if r0 == 0.0 {
                continue;
            }
            let ze = (x + dz) * (z + eta);
            let zx = dz * (z + xi);
            for nd in &self.srule {
                let s = eta * nd.from_left;
                let ems = eta * nd.from_right;
                let xp = x + dz + ems;
                let qv = self.pot.q.eval(xp);
                if qv == 0.0 {
                    continue;
                }
                let zs = xp * (z + s);
                let f = if l == 0.0 {
                    self.extra(xp, 2.0 * s) / fi
                } else {
                    let xs = (x + ems) * (xi + s);
                    let es = ems * (eta + s);
                    let tt = (zx / ze) * (es / xs);
                    // v₃ times (P(z,s)/P(ξ,η))^l
                    let g = (ze / zs) * (xs / zs) * (z * z) / (xi * xi);
                    g.powf(l) * hyp2f1(-l, -l, 1.0, tt).unwrap_or(f64::NAN) * self.fnorm(s, z) * self.extra(xp, 2.0 * s) / fi
                };
                let w = c * wt * eta * nd.weight * qv * r0 * f;
                if w != 0.0 && w.is_finite() {
                    out.push(QPt { w, xp, d: 2.0 * s });
                }
            }
        }
        Ok(out)
    }

    fn build(&mut self) -> Result<()> {
        let (nx, nd) = (self.cfg.nx, self.cfg.nd);
        let nn = nx * nd;
        if self.pot.q.is_zero() {
            self.trace = IterateTrace { sup_norms: vec![0.0], tail_estimate: 0.0, n_terms: 1 };
            return Ok(());
        }
        let rows: Vec<Result<(f64, Vec<f64>)>> = (0..nn)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / nd, k % nd);
                let (x, d) = self.node(i, j);
                let y = x + d;
                let s0 = self.pot.sigma0(0.5 * (x + y))?;
                if s0 == 0.0 {
                    return Ok((0.0, vec![0.0; nn]));
                }
                let g0 = self.w0_fixed(x, y, s0)?;
                let mut row = vec![0.0; nn];
                let mut bx = vec![0.0; nx];
                let mut bd = vec![0.0; nd];
                for p in self.qpoints(x, y, s0)? {
                    let (us, vs) = self.to_unit(p.xp, p.d);
                    self.cu.basis(us, &mut bx);
                    self.cv.basis(vs, &mut bd);
                    for (ii, &vx) in bx.iter().enumerate() {
                        let f = p.w * vx;
                        if f == 0.0 {
                            continue;
                        }
                        let r = &mut row[ii * nd..(ii + 1) * nd];
                        for (slot, &vd) in r.iter_mut().zip(&bd) {
                            *slot += f * vd;
                        }
                    }
                }
                Ok((g0, row))
            })
            .collect();
        let mut g = Vec::with_capacity(nn);
        let mut m = Vec::with_capacity(nn);
        for r in rows {
            let (a, b) = r?;
            g.push(a);
            m.push(b);
        }
        if g.iter().any(|v| !v.is_finite()) || m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Convergence("non-finite entries in the iterate operator".into()));
        }
        let sup = |g: &[f64]| g.iter().map(|a| a.abs()).fold(0.0, f64::max);
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

    fn check_xy(&self, x: f64, y: f64) -> Result<()> {
        self.pot.check_x(x)?;
        if !(y >= x && y.is_finite()) {
            return Err(Error::Domain(format!("need x <= y, got x={x}, y={y}")));
        }
        Ok(())
    }

    /// σ̃₀(ξ) P^l F(−l, −l; 1; η²/ξ²) at (x, y).
    fn norm(&self, x: f64, y: f64) -> Result<f64> {
        let l = self.pot.l;
        let (xi, eta) = (0.5 * (x + y), 0.5 * (y - x));
        if l == 0.0 {
            return Ok(self.pot.sigma0(xi)? * self.extra(x, y - x));
        }
        let p = xi * xi / (x * y);
        Ok(self.pot.sigma0(xi)? * p.powf(l) * self.fnorm(eta, xi) * self.extra(x, y - x))
    }

    /// K(x, y) with the smoothing integral.
    pub fn k(&self, x: f64, y: f64) -> Result<f64> {
        self.check_xy(x, y)?;
        if y == x {
            return diag_K(x, &self.pot);
        }
        if self.pot.q.is_zero() {
            return Ok(0.0);
        }
        let s0 = self.pot.sigma0(0.5 * (x + y))?;
        if s0 == 0.0 {
            return Ok(0.0);
        }
        let mut bx = vec![0.0; self.cfg.nx];
        let mut bd = vec![0.0; self.cfg.nd];
        let mut acc = Vec::new();
        for p in self.qpoints(x, y, s0)? {
            let (us, vs) = self.to_unit(p.xp, p.d);
            acc.push(p.w * eval2(&self.cu, &self.cv, &self.sum, us, vs, &mut bx, &mut bd));
        }
        Ok(self.norm(x, y)? * (self.w0_fixed(x, y, s0)? + pairwise_sum(&acc)))
    }

    /// K(x, y) from the table interpolant alone.
    pub fn k_table(&self, x: f64, y: f64) -> Result<f64> {
        self.check_xy(x, y)?;
        if self.pot.q.is_zero() {
            return Ok(0.0);
        }
        let (us, vs) = self.to_unit(x, y - x);
        let mut bx = vec![0.0; self.cfg.nx];
        let mut bd = vec![0.0; self.cfg.nd];
        Ok(self.norm(x, y)? * eval2(&self.cu, &self.cv, &self.sum, us, vs, &mut bx, &mut bd))
    }

    /// w(ξ, η) = K(ξ−η, ξ+η).
    pub fn w(&self, xi: f64, eta: f64) -> Result<f64> {
        check_point(xi, eta, &self.pot)?;
        self.k(xi - eta, xi + eta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tilde_round_trip() {
        let p = BoundParamsMA::default();
        for &l in &[-0.5, 0.0, 1.0, 2.5] {
            let w = 0.37;
            let back = from_tilde(to_tilde(w, 3.0, 1.2, l, &p), 3.0, 1.2, l, &p);
            assert!((back - w).abs() < 1e-15);
        }
    }

    #[test]
    fn decay_class() {
        assert!(DecayPotentialSpec::new(Potential::power(1.0, -1.5), 1.0).is_err());
        assert!(DecayPotentialSpec::new(Potential::Const(1.0), 0.0).is_err());
        assert!(DecayPotentialSpec::new(Potential::shifted_power(1.0, -4.0, 1.0), 2.0).is_ok());
        assert!(DecayPotentialSpec::new(Potential::shifted_power(1.0, -4.0, 1.0), 3.0).is_err());
    }
}
