//! Chebyshev first-kind nodes on [0, 1] and barycentric Lagrange bases,
//! used by the tabulated kernel solvers.

use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct Cheb {
    pub nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Cheb {
    pub fn new(n: usize) -> Self {
        let nodes = (0..n)
            .map(|i| {
                let th = (2 * i + 1) as f64 * PI / (2 * n) as f64;
                // (1 - cos θ)/2 without cancellation near 0
                let h = (0.5 * th).sin();
                h * h
            })
            .collect();
        let weights = (0..n)
            .map(|i| {
                let th = (2 * i + 1) as f64 * PI / (2 * n) as f64;
                if i % 2 == 0 { th.sin() } else { -th.sin() }
            })
            .collect();
        Cheb { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Lagrange basis values at t, written into `out`.
    pub fn basis(&self, t: f64, out: &mut [f64]) {
        let mut sum = 0.0;
        for (i, (&x, &w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let d = t - x;
            if d == 0.0 {
                out.iter_mut().for_each(|o| *o = 0.0);
                out[i] = 1.0;
                return;
            }
            out[i] = w / d;
            sum += out[i];
        }
        out.iter_mut().for_each(|o| *o /= sum);
    }
}

/// Tensor-product interpolant of row-major values (outer index along `a`).
pub fn eval2(a: &Cheb, b: &Cheb, values: &[f64], s: f64, t: f64, ba: &mut [f64], bb: &mut [f64]) -> f64 {
    a.basis(s, ba);
    b.basis(t, bb);
    let nb = b.len();
    let mut acc = 0.0;
    for (i, &wa) in ba.iter().enumerate() {
        if wa == 0.0 {
            continue;
        }
        let row = &values[i * nb..(i + 1) * nb];
        let mut r = 0.0;
        for (v, w) in row.iter().zip(bb.iter()) {
            r += v * w;
        }
        acc += wa * r;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_smooth_function() {
        let c = Cheb::new(20);
        let vals: Vec<f64> = c.nodes.iter().map(|&x| (3.0 * x).exp()).collect();
        let mut b = vec![0.0; 20];
        for &t in &[0.0, 0.123, 0.5, 0.999, 1.0] {
            c.basis(t, &mut b);
            let s: f64 = b.iter().zip(&vals).map(|(a, v)| a * v).sum();
            assert!((s - (3.0 * t).exp()).abs() < 1e-12, "{t}");
        }
    }
}
