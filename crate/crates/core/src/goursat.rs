//! Lattice fixed-point solver shared by the two Goursat-form kernel oracles.
//!
//! Nodes (I, J) with 0 ≤ J ≤ I ≤ N live on a unit lattice. The integration
//! domains are unions of diamonds cut by the lines I ± J = integer; diamond
//! (n, m) covers n < I+J < n+1, m < I−J < m+1. Each diamond is split along
//! its lattice edge into two triangles whose third vertices are cell
//! centres. The unknown is interpolated linearly on each triangle, centre
//! values being the average of the four cell corners.

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use rayon::prelude::*;

/// Integration region of node (i, j) in diamond indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// n ∈ [i−j, i+j), m ∈ [0, i−j).
    Inside,
    /// n ≥ i+j (truncated at the lattice edge), m ∈ [0, i−j).
    Outside,
}

pub struct Lattice<'a> {
    pub n: usize,
    pub domain: Domain,
    /// Weight in lattice coordinates (I, J), already including the Jacobian h².
    pub weight: &'a (dyn Fn(f64, f64) -> f64 + Sync),
    /// Exact value on the diagonal at lattice abscissa t.
    pub diag: &'a (dyn Fn(f64) -> f64 + Sync),
    /// Source term of node (i, j).
    pub source: &'a (dyn Fn(usize, usize) -> f64 + Sync),
    /// Factor turning the integral equation value into the unknown at (i, j).
    pub scale: &'a (dyn Fn(usize, usize) -> f64 + Sync),
    /// Extrapolate row J = 0 from J = 1, 2 instead of solving it.
    pub extrapolate_bottom: bool,
}

pub struct Solution {
    /// Row-major values g[I·(N+1) + J] for J ≤ I.
    pub g: Vec<f64>,
}

#[derive(Clone, Copy)]
enum Vtx {
    Node(usize, usize),
    /// Centre of the cell [i, i+1] × [j, j+1].
    Centre(usize, usize),
}


fn coords(v: Vtx) -> (f64, f64) {
    match v {
        Vtx::Node(i, j) => (i as f64, j as f64),
        Vtx::Centre(i, j) => (i as f64 + 0.5, j as f64 + 0.5),
    }
}

/// Vertices (v1, v2, v3, v4) of diamond (n, m), as doubled lattice coordinates.
fn diamond(n: usize, m: usize) -> [(usize, usize); 4] {
    [(n + m, n - m), (n + m + 1, n + 1 - m), (n + m + 1, n - m - 1), (n + m + 2, n - m)]
}

/// Triangle k ∈ {0, 1} of diamond (n, m): the lattice edge plus one centre.
fn tri_vertices(n: usize, m: usize, k: usize) -> [Vtx; 3] {
    let d = diamond(n, m);
    let (p, q, r1, r2) = if (n + m) % 2 == 0 { (d[0], d[3], d[1], d[2]) } else { (d[1], d[2], d[0], d[3]) };
    [vtx(p), vtx(q), vtx(if k == 0 { r1 } else { r2 })]
}

fn vtx(p: (usize, usize)) -> Vtx {
    if p.0 % 2 == 0 {
        Vtx::Node(p.0 / 2, p.1 / 2)
    } else {
        Vtx::Centre(p.0 / 2, p.1 / 2)
    }
}

/// P1 moments ∫ w λ_k over a triangle. Triangles with a vertex on J = 0 use a
/// quadratic radial Duffy map from that vertex, which absorbs weights up to r^{-3/2}.
fn moments(t: [(f64, f64); 3], w: &(dyn Fn(f64, f64) -> f64 + Sync), gl: &(Vec<f64>, Vec<f64>)) -> [f64; 3] {
    let apex = (0..3).find(|&k| t[k].1 == 0.0);
    let (a, b, c, order) = match apex {
        Some(0) | None => (t[0], t[1], t[2], [0, 1, 2]),
        Some(1) => (t[1], t[2], t[0], [1, 2, 0]),
        _ => (t[2], t[0], t[1], [2, 0, 1]),
    };
    let area2 = ((b.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (b.1 - a.1)).abs();
    let duffy_sq = apex.is_some();
    let (x, wt) = gl;
    let mut m = [0.0; 3];
    for (&xr, &wr) in x.iter().zip(wt) {
        let rho = 0.5 * (xr + 1.0);
        let (r, jr) = if duffy_sq { (rho * rho, 2.0 * rho * rho * rho) } else { (rho, rho) };
        for (&xt, &wtt) in x.iter().zip(wt) {
            let s = 0.5 * (xt + 1.0);
            let px = a.0 + r * ((1.0 - s) * (b.0 - a.0) + s * (c.0 - a.0));
            let py = a.1 + r * ((1.0 - s) * (b.1 - a.1) + s * (c.1 - a.1));
            let f = w(px, py) * area2 * jr * 0.25 * wr * wtt;
            // barycentrics: λ_b = r(1−s), λ_c = r s, λ_a = 1 − r
            m[0] += f * (1.0 - r);
            m[1] += f * r * (1.0 - s);
            m[2] += f * r * s;
        }
    }
    let mut out = [0.0; 3];
    for k in 0..3 {
        out[order[k]] = m[k];
    }
    out
}

impl Lattice<'_> {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.n + 1) + j
    }

    fn diamond_valid(&self, n: usize, m: usize) -> bool {
        n > m && n + m + 2 <= 2 * self.n
    }

    fn value(&self, g: &[f64], v: Vtx) -> f64 {
        match v {
            Vtx::Node(i, j) => g[self.idx(i, j)],
            Vtx::Centre(i, j) => {
                if i == j {
                    (self.diag)(i as f64 + 0.5)
                } else {
                    0.25 * (g[self.idx(i, j)] + g[self.idx(i + 1, j)] + g[self.idx(i, j + 1)] + g[self.idx(i + 1, j + 1)])
                }
            }
        }
    }

    /// P1 moments of the two triangles of every valid diamond, by row n.
    fn triangles(&self) -> Vec<Vec<[f64; 3]>> {
        let gl = gauss_legendre(10);
        let nm = self.n;
        (0..2 * nm)
            .into_par_iter()
            .map(|n| {
                let mut row = Vec::new();
                for m in 0..nm {
                    if !self.diamond_valid(n, m) {
                        continue;
                    }
                    for k in 0..2 {
                        row.push(moments(tri_vertices(n, m, k).map(coords), self.weight, &gl));
                    }
                }
                row
            })
            .collect()
    }

    fn diamond_sum(&self, tris: &[Vec<[f64; 3]>], g: &[f64], n: usize, m: usize) -> f64 {
        if !self.diamond_valid(n, m) {
            return 0.0;
        }
        let mut s = 0.0;
        for (k, mom) in tris[n][2 * m..2 * m + 2].iter().enumerate() {
            for (v, w) in tri_vertices(n, m, k).iter().zip(mom) {
                s += w * self.value(g, *v);
            }
        }
        s
    }

    fn row_prefix(&self, tris: &[Vec<[f64; 3]>], g: &[f64], n: usize) -> Vec<f64> {
        let mut r = vec![0.0; self.n + 1];
        for m in 0..self.n {
            r[m + 1] = r[m] + self.diamond_sum(tris, g, n, m);
        }
        r
    }

    /// Row J = 0 from g even in J: g(i,0) = (4g(i,1) − g(i,2))/3 for i ≥ 2, and
    /// g(1,0) from the quadratic through the origin and (2, 0), (3, 0).
    fn update_bottom(&self, g: &mut [f64], i: usize) {
        if !self.extrapolate_bottom || i < 2 {
            return;
        }
        g[self.idx(i, 0)] = (4.0 * g[self.idx(i, 1)] - g[self.idx(i, 2)]) / 3.0;
        if i <= 3 && self.n >= 3 {
            g[self.idx(1, 0)] = g[self.idx(2, 0)] - g[self.idx(3, 0)] / 3.0;
        }
    }

    /// Gauss–Seidel passes in dependence order. Anti-diagonals S = i+j are
    /// visited towards the far end of the domains (increasing S for Inside,
    /// decreasing for Outside), nodes on one anti-diagonal by increasing
    /// distance d = i−j from the diagonal. Each node's coupling to itself
    /// is affine and solved exactly; only the cell-centre averages reach
    /// the next anti-diagonal, so few passes are needed.
    pub fn solve(&self, tol: f64, max_sweeps: usize) -> Result<Solution> {
        let nn = self.n;
        let nd = 2 * nn;
        let tris = self.triangles();
        let mut g = vec![0.0; (nn + 1) * (nn + 1)];
        for i in 0..=nn {
            g[self.idx(i, i)] = (self.diag)(i as f64);
        }
        let jmin = if self.extrapolate_bottom { 1 } else { 0 };
        let inside = self.domain == Domain::Inside;
        for sweep in 1..=max_sweeps {
            let mut diff: f64 = 0.0;
            // cumulative sums over final rows: Inside Σ_{n<k}, Outside Σ_{n≥k}
            let mut cum = vec![vec![0.0; nn + 1]; nd + 2];
            let order: Vec<usize> = if inside { (2..=nd).collect() } else { (0..=nd).rev().collect() };
            for &s in &order {
                let recent: [isize; 2] = if inside { [s as isize - 2, s as isize - 1] } else { [s as isize, s as isize + 1] };
                let mut run = [0.0f64; 2];
                let mut ptr = [0usize; 2];
                let dmin = if s % 2 == 0 { 2 } else { 1 };
                let mut d = dmin;
                while d <= s && d <= nd - s {
                    let (i, j) = ((s + d) / 2, (s - d) / 2);
                    if j < jmin {
                        break;
                    }
                    let lo = d.saturating_sub(3);
                    for r in 0..2 {
                        let n = recent[r];
                        while ptr[r] < lo {
                            if n >= 0 && (!inside || n as usize >= d) {
                                run[r] += self.diamond_sum(&tris, &g, n as usize, ptr[r]);
                            }
                            ptr[r] += 1;
                        }
                    }
                    let fin = if inside {
                        let top = s.saturating_sub(2).max(d);
                        cum[top][d] - cum[d][d]
                    } else {
                        cum[(s + 2).min(nd + 1)][d]
                    };
                    let src = (self.source)(i, j);
                    let sc = (self.scale)(i, j);
                    let k = self.idx(i, j);
                    let old = g[k];
                    let eval = |t: f64, g: &mut Vec<f64>| {
                        g[k] = t;
                        if j <= 2 {
                            self.update_bottom(g, i);
                        }
                        let mut acc = fin + run[0] + run[1];
                        for r in 0..2 {
                            let n = recent[r];
                            if n < 0 || (inside && (n as usize) < d) {
                                continue;
                            }
                            for m in lo..d {
                                acc += self.diamond_sum(&tris, g, n as usize, m);
                            }
                        }
                        sc * (src + acc)
                    };
                    let f0 = eval(0.0, &mut g);
                    let f1 = eval(1.0, &mut g);
                    let slope = f1 - f0;
                    if !(slope < 1.0) {
                        return Err(Error::NonConvergence(format!("lattice self-coupling {slope} >= 1 at node ({i}, {j})")));
                    }
                    let v = f0 / (1.0 - slope);
                    g[k] = v;
                    if j <= 2 {
                        self.update_bottom(&mut g, i);
                    }
                    diff = diff.max((v - old).abs());
                    d += 2;
                }
                // a row becomes final once no later anti-diagonal touches it
                if inside {
                    if s >= 2 {
                        let n = s - 2;
                        let r = self.row_prefix(&tris, &g, n);
                        for dd in 0..=nn {
                            cum[n + 1][dd] = cum[n][dd] + r[dd];
                        }
                    }
                } else if s + 1 <= nd {
                    let n = s + 1;
                    let r = self.row_prefix(&tris, &g, n);
                    for dd in 0..=nn {
                        cum[n][dd] = cum[n + 1][dd] + r[dd];
                    }
                }
            }
            if !diff.is_finite() {
                return Err(Error::NonConvergence(format!("lattice pass {sweep} produced non-finite values")));
            }
            if diff < tol {
                return Ok(Solution { g });
            }
        }
        Err(Error::NonConvergence(format!("lattice iteration did not settle in {max_sweeps} passes")))
    }
}
