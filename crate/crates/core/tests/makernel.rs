use proptest::prelude::*;
use transmute::cli::ma_bounds;
use transmute::makernel::*;
use transmute::potential::Potential;

fn exp_pot(l: f64) -> DecayPotentialSpec {
    DecayPotentialSpec::new(Potential::exp_decay(1.0, 1.0), l).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Richardson extrapolation of the O(h²) lattice oracle at (x, y), lattice from x.
fn goursat_at(pot: &DecayPotentialSpec, x: f64, y: f64) -> f64 {
    let at = |h: f64| {
        let g = solve_K_goursat(pot, h, x, x + 12.0).unwrap();
        let i = g.nodes.iter().position(|&(a, b)| (a - x).abs() < 1e-9 && (b - y).abs() < 1e-9).unwrap();
        g.values[i]
    };
    let (c, f) = (at(0.05), at(0.025));
    (4.0 * f - c) / 3.0
}

#[test]
fn moments() {
    let pot = DecayPotentialSpec::with_floor(Potential::exp_decay(1.0, 1.0), 0.0, 1e-14).unwrap();
    for &x in &[1e-14, 0.5, 3.0, 10.0] {
        assert!(rel(sigma_moment(0, x, &pot, 1e-12).unwrap(), (-x).exp()) < 1e-12);
        assert!(rel(sigma_moment(1, x, &pot, 1e-12).unwrap(), (x + 1.0) * (-x).exp()) < 1e-12);
    }
    assert!(rel(sigma_moment(1, 1e-14, &pot, 1e-12).unwrap(), 1.0) < 1e-13);
    let zero = DecayPotentialSpec::new(Potential::Zero, 0.0).unwrap();
    assert_eq!(sigma_moment(0, 1.0, &zero, 1e-12).unwrap(), 0.0);
    assert!(sigma_moment(2, 1.0, &pot, 1e-12).is_err());
    let alg = DecayPotentialSpec::new(Potential::shifted_power(1.0, -4.0, 1.0), 1.0).unwrap();
    // σ̃₀ = (1+x)^{−3}/3, σ̃₁ = (1+x)^{−2}/2 − (1+x)^{−3}/3
    for &x in &[0.5, 2.0, 8.0] {
        let u: f64 = 1.0 + x;
        assert!(rel(sigma_moment(0, x, &alg, 1e-12).unwrap(), u.powi(-3) / 3.0) < 1e-10);
        assert!(rel(sigma_moment(1, x, &alg, 1e-12).unwrap(), u.powi(-2) / 2.0 - u.powi(-3) / 3.0) < 1e-10);
    }
}

#[test]
fn decay_class_enforced() {
    let e = DecayPotentialSpec::new(Potential::power(1.0, -1.5), 1.0).err().unwrap();
    assert!(e.to_string().contains("(x + x^l)|q|"), "{e}");
    assert!(DecayPotentialSpec::new(Potential::Const(1.0), 0.0).is_err());
    assert!(DecayPotentialSpec::new(Potential::power(1.0, -3.5), 2.0).is_ok());
    assert!(DecayPotentialSpec::new(Potential::exp_decay(1.0, 1.0), -0.6).is_err());
    assert!(BoundParamsMA { beta: 0.6, c_l: 1.0 }.validate().is_err());
    assert!(BoundParamsMA { beta: 0.0, c_l: 1.0 }.validate().is_err());
}

#[test]
fn boundary_row_and_degenerate_inputs() {
    let p = BoundParamsMA::default();
    let zero = DecayPotentialSpec::new(Potential::Zero, 1.0).unwrap();
    assert_eq!(w0(2.0, 0.5, &zero, &p, 1e-10).unwrap(), 0.0);
    assert_eq!(kernel_K(1.0, 2.0, &zero, &p, 1e-8).unwrap(), 0.0);
    let pot = exp_pot(1.0);
    assert_eq!(w_iterate(|_, _| 0.0, &pot, &p, 2.0, 0.5, 1e-8).unwrap(), 0.0);
    assert_eq!(w_iterate(|_, _| 1.0, &zero, &p, 2.0, 0.5, 1e-8).unwrap(), 0.0);
    for &xi in &[0.5f64, 2.0, 6.0] {
        let want = 0.5 * (-xi).exp();
        assert!(rel(w0(xi, 0.0, &pot, &p, 1e-12).unwrap(), want) < 1e-10);
        let (w, _) = solve_w(xi, 0.0, &pot, &p, 1e-10).unwrap();
        assert!(rel(w, want) < 1e-10);
        assert!(rel(diag_K(xi, &pot).unwrap(), want) < 1e-12);
        assert_eq!(kernel_K(xi, xi, &pot, &p, 1e-8).unwrap(), diag_K(xi, &pot).unwrap());
    }
}

#[test]
fn series_matches_lattice_oracle() {
    let p = BoundParamsMA::default();
    // (ξ, η) = (3, 0.5) is (x, y) = (2.5, 3.5)
    let pot = exp_pot(0.0);
    let (w, _) = solve_w(3.0, 0.5, &pot, &p, 1e-10).unwrap();
    let g = goursat_at(&pot, 2.5, 3.5);
    assert!(rel(w, g) < 1e-4, "{w} vs {g}");
    let pot = exp_pot(1.0);
    let k = kernel_K(2.0, 3.0, &pot, &p, 1e-10).unwrap();
    let g = goursat_at(&pot, 2.0, 3.0);
    assert!(rel(k, g) < 1e-4, "{k} vs {g}");
}

#[test]
fn lattice_oracle_basics() {
    let zero = DecayPotentialSpec::new(Potential::Zero, 0.0).unwrap();
    assert!(solve_K_goursat(&zero, 0.1, 1.0, 5.0).unwrap().values.iter().all(|&v| v == 0.0));
    let h = 0.05;
    let pot = exp_pot(0.0);
    let g = solve_K_goursat(&pot, h, 1.0, 13.0).unwrap();
    let mut worst: f64 = 0.0;
    let (mut nodes, mut vals) = (Vec::new(), Vec::new());
    for (&(x, y), &v) in g.nodes.iter().zip(&g.values) {
        assert!(1.0 - 1e-12 <= x && x <= y && y <= 13.0 + 1e-9);
        if x == y && x < 5.0 {
            worst = worst.max((v - 0.5 * (-x).exp()).abs() / (0.5 * (-x).exp()));
        }
        if y <= 5.0 {
            nodes.push((x, y));
            vals.push(v);
        }
    }
    assert!(worst <= h * h, "{worst}");
    let k = MaKernel::new(&pot, &BoundParamsMA::default(), 1e-8).unwrap();
    let s = kernel_grid_K(&k, &nodes).unwrap();
    let sup = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let d = s.values.iter().zip(&vals).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / sup;
    assert!(d <= (10.0 * h * h).max(1e-4), "{d}");
}

#[test]
fn bound_formula() {
    let p = BoundParamsMA { beta: 0.5, c_l: 1.0 };
    let zero = DecayPotentialSpec::new(Potential::Zero, 1.0).unwrap();
    assert_eq!(bound_K(1.0, 2.0, &zero, &p).unwrap(), 0.0);
    let pot = exp_pot(1.0);
    // far out the bound decays like σ̃₀((x+y)/2) = e^{−(x+y)/2}, up to factors tending to 1
    let r = bound_K(1.0, 42.0, &pot, &p).unwrap() / bound_K(1.0, 40.0, &pot, &p).unwrap();
    assert!(rel(r, (-1.0f64).exp()) < 1e-6, "{r}");
    let r = bound_K(1.0, 62.0, &pot, &p).unwrap() / bound_K(1.0, 60.0, &pot, &p).unwrap();
    assert!(rel(r, (-1.0f64).exp()) < 1e-8, "{r}");
    // l = −½: finite for every β, blowing up as β → 0
    let m = exp_pot(-0.5);
    let b: Vec<f64> = [0.5, 0.1, 0.01]
        .iter()
        .map(|&beta| bound_K(1.0, 2.0, &m, &BoundParamsMA { beta, c_l: 1.0 }).unwrap())
        .collect();
    assert!(b.iter().all(|v| v.is_finite()));
    assert!(b[0] < b[1] && b[1] < b[2], "{b:?}");
    // σ̃₀(3/2) = e^{−3/2}, σ̃₁(1) − σ̃₁(3/2) = 2/e − (5/2)e^{−3/2}
    let ds1 = 2.0 * (-1.0f64).exp() - 2.5 * (-1.5f64).exp();
    for (&beta, &got) in [0.5, 0.1, 0.01].iter().zip(&b) {
        let want = 2f64.powf(beta - 0.5) / beta * (-1.5f64).exp() * (ds1 / beta).exp();
        assert!(rel(got, want) < 1e-10, "β={beta}: {got} vs {want}");
    }
}

#[test]
fn first_row_envelope() {
    // |w̃₀| ≤ (C/2) σ̃₀(ξ): C fitted on one grid, validated on another
    let p = BoundParamsMA::default();
    let pot = exp_pot(1.0);
    let ratio = |xi: f64, eta: f64| w0(xi, eta, &pot, &p, 1e-10).unwrap().abs() / (0.5 * sigma_moment(0, xi, &pot, 1e-12).unwrap());
    let mut c: f64 = 0.0;
    for i in 0..5 {
        for j in 0..5 {
            let xi = 1.0 + 2.0 * i as f64;
            c = c.max(ratio(xi, (xi - 0.5) * (j as f64 + 0.5) / 5.0));
        }
    }
    c *= 1.25;
    for i in 0..8 {
        for j in 0..8 {
            let xi = 1.3 + 1.1 * i as f64;
            let eta = (xi - 0.5) * j as f64 / 8.0;
            assert!(ratio(xi, eta) <= c, "({xi}, {eta})");
        }
    }
}

#[test]
fn calibrated_bound_holds() {
    let pot = exp_pot(1.0);
    let mut fine = Vec::new();
    for i in 0..20 {
        let x = 0.5 + 9.5 * i as f64 / 20.0;
        for j in 1..=20 {
            fine.push((x, x + (10.0 - x) * j as f64 / 20.0));
        }
    }
    let t = ma_bounds(&pot, 0.5, 1e-8, 0.5, 10.0, &fine).unwrap();
    assert!(t.max_ratio() <= 1.0, "{}", t.max_ratio());
    assert!(t.fitted > 0.0 && t.used > t.fitted);
}

#[test]
fn iterates_decay_factorially() {
    for &l in &[-0.5, 0.0, 2.0] {
        let k = MaKernel::new(&exp_pot(l), &BoundParamsMA::default(), 1e-10).unwrap();
        let s = &k.trace().sup_norms;
        assert!(s.len() >= 4);
        let rho = (2..4).map(|n| s[n + 1] / s[n] * (n + 1) as f64).fold(0.0, f64::max);
        for n in 2..s.len() - 1 {
            assert!(s[n + 1] / s[n] <= 1.2 * rho / (n + 1) as f64, "l={l} n={n}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tilde_prefactor_round_trip(w in -10.0f64..10.0, xi in 0.2f64..20.0, t in 0.0f64..0.99, l in prop::sample::select(vec![-0.5, 0.0, 0.5, 1.0, 2.0]), beta in 0.01f64..0.5) {
        let p = BoundParamsMA { beta, c_l: 1.0 };
        let eta = t * xi;
        let back = from_tilde(to_tilde(w, xi, eta, l, &p), xi, eta, l, &p);
        prop_assert!((back - w).abs() <= 4.0 * f64::EPSILON * w.abs());
    }

    #[test]
    fn moments_decrease(x1 in 0.1f64..20.0, d in 0.0f64..10.0, j in 0u32..2) {
        let pot = DecayPotentialSpec::new(Potential::shifted_power(1.0, -4.0, 1.0), 1.0).unwrap();
        prop_assert!(sigma_moment(j, x1, &pot, 1e-12).unwrap() >= sigma_moment(j, x1 + d, &pot, 1e-12).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn diagonal_limit_of_series(rate in 0.5f64..2.0, c in 0.2f64..2.0, l in prop::sample::select(vec![0.0, 1.0])) {
        let pot = DecayPotentialSpec::new(Potential::exp_decay(c, rate), l).unwrap();
        let k = MaKernel::new(&pot, &BoundParamsMA::default(), 1e-10).unwrap();
        for &x in &[0.5, 3.0] {
            let want = 0.5 * c / rate * (-rate * x).exp();
            prop_assert!(rel(k.k(x, x * (1.0 + 1e-10)).unwrap(), want) < 1e-7);
        }
    }
}
