use proptest::prelude::*;
use transmute::cli::gl_bounds;
use transmute::glkernel::*;
use transmute::potential::Potential;
use transmute::riemann::{v1, v2, RiemannEval};

fn spec(q: Potential, l: f64) -> PotentialSpec {
    PotentialSpec::new(q, l, if l == -0.5 { 3.0 } else { 2.0 }, 1.0).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Richardson extrapolation of the O(h²) lattice oracle at a common node.
fn goursat_at(pot: &PotentialSpec, l: f64, x: f64, y: f64) -> f64 {
    let at = |h: f64| {
        let g = solve_B_goursat(pot, l, h, 1.0).unwrap();
        let i = g.nodes.iter().position(|&(a, b)| (a - x).abs() < 1e-9 && (b - y).abs() < 1e-9).unwrap();
        g.values[i]
    };
    let (c, f) = (at(0.025), at(0.0125));
    (4.0 * f - c) / 3.0
}

#[test]
fn lp_norms() {
    assert!(rel(lp_norm_partial(&spec(Potential::Const(1.0), 0.0), 1.0).unwrap(), 1.0) < 1e-12);
    assert_eq!(lp_norm_partial(&spec(Potential::Zero, 0.0), 1.0).unwrap(), 0.0);
    let n = lp_norm_partial(&spec(Potential::power(1.0, -0.25), 0.0), 1.0).unwrap();
    assert!(rel(n, 2f64.sqrt()) < 1e-10, "{n}");
}

#[test]
fn class_constraints() {
    assert!(check_class(0.0, 1.0).is_err());
    assert!(check_class(-0.25, 1.5).is_err()); // needs p > 2
    assert!(check_class(-0.25, 2.5).is_ok());
    assert!(check_class(-0.5, 2.0).is_err());
    assert!(check_class(-0.5, 3.0).is_ok());
    assert!(check_class(-0.6, 3.0).is_err());
    let pd = dual_exponent(2.0);
    assert_eq!(pd, 2.0);
    assert!(BoundParamsGL { alpha: 0.5 / pd, c_tilde: 1.0 }.validate(0.0, 2.0).is_err());
    assert!(BoundParamsGL { alpha: 0.2, c_tilde: 1.0 }.validate(0.0, 2.0).is_ok());
    // −½ < l < 0: α < l + 1/(2p′)
    assert!(BoundParamsGL { alpha: 0.2, c_tilde: 1.0 }.validate(-0.1, 2.0).is_err());
    // l = −½: α < −½ + 1/p′
    assert!(BoundParamsGL { alpha: 0.1, c_tilde: 1.0 }.validate(-0.5, 3.0).is_ok());
    assert!(BoundParamsGL { alpha: 0.2, c_tilde: 1.0 }.validate(-0.5, 3.0).is_err());
}

#[test]
fn diagonal_values() {
    assert!(rel(diag_B(0.7, &spec(Potential::Const(1.0), 0.0)).unwrap(), 0.35) < 1e-14);
    assert_eq!(diag_B(0.7, &spec(Potential::Zero, 0.0)).unwrap(), 0.0);
    assert!(rel(diag_B(1.0, &spec(Potential::power(1.0, 1.0), 0.0)).unwrap(), 0.25) < 1e-14);
    let pot = spec(Potential::power(1.0, 1.0), 1.0);
    assert_eq!(kernel_B(0.6, 0.6, &pot, 1.0, 1e-8).unwrap(), diag_B(0.6, &pot).unwrap());
}

#[test]
fn u0_against_midpoint_brute_force() {
    let pot = spec(Potential::Const(1.0), 0.0);
    assert_eq!(u0(1.0, 0.5, &spec(Potential::Zero, 0.0), 0.0, 1e-10).unwrap(), 0.0);
    // l = 0: v vanishes below z = η and is 1 above, so u₀ = ½(√ξ − √η) for q ≡ 1
    assert!(rel(u0(1.0, 0.5, &pot, 0.0, 1e-12).unwrap(), 0.5 * (1.0 - 0.5f64.sqrt())) < 1e-10);
    // u₀ = ½ ∫₀^√ξ v(t², 0) t^{2l} dt with 10⁶ midpoint panels
    let (xi, eta) = (1.0f64, 0.5);
    for &l in &[0.0, 1.0] {
        let ev = RiemannEval::new(l, eta, xi).unwrap();
        let n = 1_000_000;
        let h = xi.sqrt() / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            let t: f64 = (i as f64 + 0.5) * h;
            let z = t * t;
            let v = if z < eta { v2(z, 0.0, &ev).unwrap() } else { v1(z, 0.0, &ev).unwrap() };
            s += 0.5 * v * t.powf(2.0 * l) * h;
        }
        let got = u0(xi, eta, &spec(Potential::Const(1.0), l), l, 1e-12).unwrap();
        assert!(rel(got, s) < 1e-5, "l={l}: {got} vs {s}");
    }
}

#[test]
fn iterate_degenerate_inputs() {
    let pot = spec(Potential::Const(1.0), 1.0);
    assert_eq!(u_iterate(|_, _| 0.0, &pot, 1.0, 0.25, 0.16, 1e-8).unwrap(), 0.0);
    let zero = spec(Potential::Zero, 1.0);
    assert_eq!(u_iterate(|_, _| 1.0, &zero, 1.0, 0.25, 0.16, 1e-8).unwrap(), 0.0);
    let (u, tr) = solve_u(0.25, 0.16, &zero, 1.0, 1e-8).unwrap();
    assert_eq!(u, 0.0);
    assert_eq!(tr.n_terms, 1);
}

#[test]
fn small_potential_is_perturbative() {
    let pot = spec(Potential::Const(0.01), 0.0);
    for &(xi, eta) in &[(0.25, 0.01), (0.5, 0.2), (1.0, 0.5), (0.9, 0.85)] {
        let (u, _) = solve_u(xi, eta, &pot, 0.0, 1e-10).unwrap();
        let first = u0(xi, eta, &pot, 0.0, 1e-12).unwrap();
        assert!((u - first).abs() <= 0.02 * first.abs(), "({xi}, {eta}): {u} vs {first}");
    }
}

#[test]
fn series_matches_lattice_oracle() {
    // ξ = 0.25, η = 0.16 is (x, y) = (0.9, 0.1)
    let pot = spec(Potential::Const(1.0), 1.0);
    let (u, _) = solve_u(0.25, 0.16, &pot, 1.0, 1e-10).unwrap();
    let b = u / (0.9f64 * 0.1).powf(1.0);
    let g = goursat_at(&pot, 1.0, 0.9, 0.1);
    assert!(rel(b, g) < 1e-4, "{b} vs {g}");
    let pot = spec(Potential::Const(1.0), 0.0);
    let b = kernel_B(0.8, 0.4, &pot, 0.0, 1e-10).unwrap();
    let g = goursat_at(&pot, 0.0, 0.8, 0.4);
    assert!(rel(b, g) < 1e-4, "{b} vs {g}");
}

#[test]
fn lattice_oracle_basics() {
    let g = solve_B_goursat(&spec(Potential::Zero, 1.0), 1.0, 0.05, 1.0).unwrap();
    assert!(g.values.iter().all(|&v| v == 0.0));
    assert_eq!(g.method, KernelMethod::GoursatFixedPoint);
    let h = 0.05;
    let pot = spec(Potential::power(1.0, 1.0), 0.0);
    let g = solve_B_goursat(&pot, 0.0, h, 1.0).unwrap();
    for (&(x, y), &v) in g.nodes.iter().zip(&g.values) {
        assert!(y > 0.0 && y <= x && x <= 1.0 + 1e-12);
        if x == y {
            assert!((v - 0.25 * x * x).abs() <= h * h, "{x}: {v}");
        }
    }
    let k = GlKernel::new(&pot, 0.0, 1e-8).unwrap();
    let s = kernel_grid_B(&k, &g.nodes).unwrap();
    let sup = g.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let d = s.values.iter().zip(&g.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / sup;
    assert!(d <= (10.0 * h * h).max(1e-4), "{d}");
    assert!(solve_B_goursat(&pot, 0.0, 0.3, 1.0).is_err());
}

#[test]
fn frozen_power_series_oracle() {
    // B from the power-series solution of the Goursat problem, summed in extended precision
    let text = include_str!("data/b_series.csv");
    let mut worst: f64 = 0.0;
    let mut cache: Vec<(String, f64, GlKernel)> = Vec::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let l: f64 = f[1].parse().unwrap();
        let (x, y, want): (f64, f64, f64) = (f[2].parse().unwrap(), f[3].parse().unwrap(), f[4].parse().unwrap());
        if !cache.iter().any(|(n, m, _)| n == f[0] && *m == l) {
            let q = if f[0] == "one" { Potential::Const(1.0) } else { Potential::power(1.0, 1.0) };
            cache.push((f[0].to_string(), l, GlKernel::new(&spec(q, l), l, 1e-10).unwrap()));
        }
        let k = &cache.iter().find(|(n, m, _)| n == f[0] && *m == l).unwrap().2;
        worst = worst.max(rel(k.b(x, y).unwrap(), want));
    }
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn bound_formula() {
    let pot = spec(Potential::Const(1.0), 0.0);
    let p = BoundParamsGL { alpha: 0.125, c_tilde: 1.0 };
    assert_eq!(bound_B(0.5, 0.2, &spec(Potential::Zero, 0.0), 0.0, &p).unwrap(), 0.0);
    let (b1, b2) = (bound_B(0.8, 1e-3, &pot, 0.0, &p).unwrap(), bound_B(0.8, 1e-2, &pot, 0.0, &p).unwrap());
    let slope = (b2 / b1).ln() / 10f64.ln();
    assert!((slope - (0.25 - 0.125)).abs() < 1e-12, "{slope}");
    assert!(bound_B(0.5, 0.6, &pot, 0.0, &p).is_err());
    assert!(bound_B(0.5, 0.2, &pot, 0.0, &BoundParamsGL { alpha: 0.3, c_tilde: 1.0 }).is_err());
}

#[test]
fn calibrated_bound_holds() {
    let pot = spec(Potential::Const(1.0), 0.0);
    let mut fine = Vec::new();
    for i in 1..=30 {
        for j in 1..=30 {
            let x = i as f64 / 30.0;
            fine.push((x, x * j as f64 / 30.0));
        }
    }
    let t = gl_bounds(&pot, 0.0, 0.125, 1e-8, &fine).unwrap();
    assert!(t.max_ratio() <= 1.0, "{}", t.max_ratio());
    assert_eq!(t.coarse_nodes, 100);
}

#[test]
fn iterates_decay_factorially() {
    for &l in &[-0.5, 0.0, 1.0, 2.0] {
        let k = GlKernel::new(&spec(Potential::Const(1.0), l), l, 1e-10).unwrap();
        let s = &k.trace().sup_norms;
        assert!(s.len() >= 3 && k.trace().tail_estimate <= 1e-9 * s[0]);
        let rho = fit_rho(s, 2..4);
        for n in 2..s.len() - 1 {
            assert!(s[n + 1] / s[n] <= 1.2 * rho / (n + 1) as f64, "l={l} n={n}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn diagonal_limit_of_series(c in 0.1f64..2.0, a in 0.0f64..2.0, l in prop::sample::select(vec![0.0, 1.0, 2.0])) {
        let pot = spec(Potential::power(c, a), l);
        let k = GlKernel::new(&pot, l, 1e-10).unwrap();
        for &x in &[0.3, 1.0] {
            let d = diag_B(x, &pot).unwrap();
            prop_assert!(rel(k.b(x, x * (1.0 - 1e-10)).unwrap(), d) < 1e-7);
        }
    }

    #[test]
    fn kernel_is_linear_to_first_order(c in 1e-4f64..1e-3, x in 0.2f64..1.0, t in 0.05f64..0.95, l in prop::sample::select(vec![0.0, 1.0])) {
        // for tiny q, B ≈ c·B₁ with B₁ independent of c
        let (k1, k2) = (GlKernel::new(&spec(Potential::Const(c), l), l, 1e-12).unwrap(), GlKernel::new(&spec(Potential::Const(2.0 * c), l), l, 1e-12).unwrap());
        let (b1, b2) = (k1.b(x, t * x).unwrap(), k2.b(x, t * x).unwrap());
        prop_assert!((b2 / b1 - 2.0).abs() < 10.0 * c);
    }
}
