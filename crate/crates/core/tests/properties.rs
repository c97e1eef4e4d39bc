use lclab::config::{parse_config, ExperimentConfig, ExperimentKind};
use lclab::coupling::{e_lambda_norm, exact_1d_n_matrix};
use lclab::discrete::{extend, restrict, Grid};
use lclab::fourier::{sobolev_norm, TorusGrid};
use lclab::geometry::{metric_matrix, surface_density, unit_normal, BoundaryChart, Domain1D, Domain2D};
use lclab::linalg::{solve_spd, DenseSymmetricMatrix, SymSparse, TripletBuilder};
use lclab::spectral::{counting_function, weyl_rhs};
use lclab::symbols::{
    char_poly, product_symbol, roots_omega, roots_z, symbol_d, symbol_n, symbol_w, symbol_w_normal_form, tau,
    ParamSymbol,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn signed_xi() -> impl Strategy<Value = f64> {
    (any::<bool>(), -3.0..3.0f64).prop_map(|(s, e)| if s { 10f64.powf(e) } else { -(10f64.powf(e)) })
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    let s = a.norm().max(b.norm());
    if s == 0.0 {
        0.0
    } else {
        (a - b).norm() / s
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn metric_invariants(c1 in -3.0..3.0f64, c2 in -3.0..3.0f64, x in -1.0..1.0f64) {
        for chart in [BoundaryChart::linear(vec![c1]), BoundaryChart::linear(vec![c1, c2])] {
            let xp = vec![x; chart.dim()];
            let m = metric_matrix(&chart, &xp).unwrap();
            prop_assert!((m.det() - 1.0).abs() <= 1e-12, "det {}", m.det());
            prop_assert!(m.min_cholesky_pivot() > 0.0);
            let nu = unit_normal(&chart, &xp).unwrap();
            let len = nu.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((len - 1.0).abs() <= 1e-14);
            let dens = surface_density(&chart, &xp).unwrap();
            prop_assert!(dens >= 1.0);
            prop_assert_eq!(dens == 1.0, c1 == 0.0 && (chart.dim() == 1 || c2 == 0.0));
        }
    }

    #[test]
    fn roots_split_and_solve(c in -2.0..2.0f64, x in -1.0..1.0f64, xi in signed_xi(), le in 0.0..6.0f64) {
        let chart = BoundaryChart::linear(vec![c]);
        let lambda = 10f64.powf(le);
        let (zm, zp) = roots_z(&chart, &[x], &[xi]).unwrap();
        let (wm, wp) = roots_omega(&chart, &[x], &[xi], lambda).unwrap();
        prop_assert!(zm.re < 0.0 && zp.re > 0.0);
        prop_assert!(wm.re < 0.0 && wp.re > 0.0);
        let a = 1.0 + c * c;
        let b = (c * xi).abs();
        for z in [zm, zp] {
            let scale = a * z.norm_sqr() + 2.0 * b * z.norm() + xi * xi;
            prop_assert!(char_poly(&chart, &[x], &[xi], z, 0.0).unwrap().norm() <= 1e-10 * scale);
        }
        for w in [wm, wp] {
            let scale = a * w.norm_sqr() + 2.0 * b * w.norm() + xi * xi + lambda;
            prop_assert!(char_poly(&chart, &[x], &[xi], w, lambda).unwrap().norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn degree_one_homogeneity(c in -2.0..2.0f64, xi in signed_xi(), le in 0.0..6.0f64, t in 0.2..5.0f64) {
        let chart = BoundaryChart::linear(vec![c]);
        let lambda = 10f64.powf(le);
        let x = [0.1];
        let (zm, zp) = roots_z(&chart, &x, &[xi]).unwrap();
        let (zm_t, zp_t) = roots_z(&chart, &x, &[t * xi]).unwrap();
        prop_assert!(rel(zm_t, t * zm) <= 1e-12 && rel(zp_t, t * zp) <= 1e-12);
        let (wm, wp) = roots_omega(&chart, &x, &[xi], lambda).unwrap();
        let (wm_t, wp_t) = roots_omega(&chart, &x, &[t * xi], t * t * lambda).unwrap();
        prop_assert!(rel(wm_t, t * wm) <= 1e-12 && rel(wp_t, t * wp) <= 1e-12);
        prop_assert!(rel(tau(&chart, &x, &[t * xi]).unwrap(), t * zp) <= 1e-12);
    }

    #[test]
    fn w_is_positive_and_both_forms_agree(c in -2.0..2.0f64, xi in signed_xi(), le in 0.0..6.0f64) {
        let chart = BoundaryChart::linear(vec![c]);
        let lambda = 10f64.powf(le);
        let w = symbol_w(&chart, &[0.0], &[xi], lambda).unwrap();
        let v = symbol_w_normal_form(&chart, &[0.0], &[xi], lambda).unwrap();
        prop_assert!(w > 0.0);
        prop_assert!((w - v).abs() <= 1e-12 * w, "{} vs {}", w, v);
        let n = symbol_n(&chart, &[0.0], &[xi], lambda).unwrap();
        prop_assert!(n.re < 0.0);
    }

    #[test]
    fn d_modulus_is_bounded_below(c in -2.0..2.0f64, xi in signed_xi(), le in 0.0..6.0f64) {
        let lambda = 10f64.powf(le);
        let flat = symbol_d(&BoundaryChart::flat(1), &[0.0], &[xi], lambda).unwrap();
        prop_assert!(flat.norm() >= 1.0 - 1e-15);
        let curved = symbol_d(&BoundaryChart::linear(vec![c]), &[0.0], &[xi], lambda).unwrap();
        prop_assert!(curved.norm() >= 1.0 / (1.0 + c * c), "{}", curved.norm());
    }

    #[test]
    fn products_commute_and_associate(x in -1.0..1.0f64, xi in signed_xi(), le in 0.0..4.0f64) {
        let ch = BoundaryChart::flat(1);
        let (a, b, c) = (ParamSymbol::tau(&ch), ParamSymbol::n_symbol(&ch), ParamSymbol::d_symbol(&ch));
        let l = 10f64.powf(le);
        let ab = product_symbol(&a, &b).unwrap().eval(&[x], &[xi], l).unwrap();
        let ba = product_symbol(&b, &a).unwrap().eval(&[x], &[xi], l).unwrap();
        prop_assert!(rel(ab, ba) <= 1e-15);
        let left = product_symbol(&product_symbol(&a, &b).unwrap(), &c).unwrap().eval(&[x], &[xi], l).unwrap();
        let right = product_symbol(&a, &product_symbol(&b, &c).unwrap()).unwrap().eval(&[x], &[xi], l).unwrap();
        prop_assert!(rel(left, right) <= 1e-14);
    }

    #[test]
    fn counting_is_monotone(values in prop::collection::vec(0.0..10.0f64, 1..40), mus in prop::collection::vec(0.0..12.0f64, 2..10)) {
        let mut mus = mus;
        mus.sort_by(f64::total_cmp);
        let counts: Vec<usize> = mus.iter().map(|&m| counting_function(&values, m)).collect();
        prop_assert!(counts.windows(2).all(|w| w[1] <= w[0]));
        let top = values.iter().cloned().fold(0.0, f64::max);
        prop_assert_eq!(counting_function(&values, top), 0);
    }

    #[test]
    fn weyl_rhs_is_nonincreasing(m1 in 1e-4..1e-1f64, m2 in 1e-4..1e-1f64, l1 in 1.0..1e4f64, l2 in 1.0..1e4f64) {
        let d = Domain2D::unit_disk_in_polar();
        let (mlo, mhi) = (m1.min(m2), m1.max(m2));
        let (llo, lhi) = (l1.min(l2), l1.max(l2));
        prop_assert!(weyl_rhs(&d, llo, mhi, 1.0).unwrap() <= weyl_rhs(&d, llo, mlo, 1.0).unwrap() * (1.0 + 1e-12));
        prop_assert!(weyl_rhs(&d, lhi, mlo, 1.0).unwrap() <= weyl_rhs(&d, llo, mlo, 1.0).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn parseval_on_random_fields(seed in any::<u64>(), r in 0.0..2.0f64) {
        let grid = TorusGrid::new(256).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = grid.random_field(r, None, &mut rng).unwrap();
        let a = u.l2_norm();
        let b = sobolev_norm(&grid, &u, 0.0);
        prop_assert!((a - b).abs() <= 1e-12 * a, "{} vs {}", a, b);
    }

    #[test]
    fn restrict_and_extend_are_adjoint(k in 3usize..8, seed in any::<u64>()) {
        let g = Grid::one_d(Domain1D::default(), 1.0 / (1usize << k) as f64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        use rand::Rng;
        let u: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..g.outer_nodes.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lhs: f64 = restrict(&g, &u).unwrap().iter().zip(&v).zip(g.outer_mass()).map(|((a, b), m)| a * b * m).sum();
        let rhs: f64 = u.iter().zip(extend(&g, &v).unwrap()).zip(g.mass()).map(|((a, b), m)| a * b * m).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-14 * (1.0 + lhs.abs()));
    }

    #[test]
    fn dense_spectral_invariants(n in 2usize..30, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let m = DenseSymmetricMatrix::from_fn(n, |i, j| a[i * n + j] + a[j * n + i]).unwrap();
        let ev = m.eigenvalues().unwrap();
        let tr: f64 = ev.iter().sum();
        let fr: f64 = ev.iter().map(|v| v * v).sum();
        prop_assert!((tr - m.trace()).abs() <= 1e-10 * (1.0 + m.frobenius_sq().sqrt()));
        prop_assert!((fr - m.frobenius_sq()).abs() <= 1e-10 * m.frobenius_sq());
    }

    #[test]
    fn spd_solves_meet_the_residual_contract(n in 2usize..200, band in 1usize..6, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            for j in i + 1..(i + 1 + band).min(n) {
                b.add_edge(i, j, rng.random_range(0.1..10.0));
            }
            b.add_sym(i, i, rng.random_range(1e-6..1.0));
        }
        let a: SymSparse = b.build();
        let rhs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = solve_spd(&a, &rhs, 1e-10).unwrap();
        let r: Vec<f64> = a.matvec(&x).iter().zip(&rhs).map(|(p, q)| p - q).collect();
        let norm = |v: &[f64]| v.iter().map(|t| t * t).sum::<f64>().sqrt();
        let a_inf = (0..n).map(|i| a.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        prop_assert!(norm(&r) <= 1e-10 * (a_inf * norm(&x) + norm(&rhs)));
    }

    #[test]
    fn config_round_trip(
        kind in 0usize..11,
        seed in any::<u32>(),
        k in 7u32..12,
        lambdas in prop::collection::btree_set(1u32..1_000_000, 3..8),
        points in 2usize..50,
    ) {
        let kind = ExperimentKind::ALL[kind];
        let mut c = ExperimentConfig::defaults(kind);
        c.seed = seed as u64;
        c.grid.h = 1.0 / (1u64 << k) as f64;
        c.sweep.lambda_sweep = lambdas.iter().map(|&l| l as f64 * 1.5).collect();
        c.mu_grid.points = points;
        let text = c.to_text();
        let back = parse_config(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.to_text(), text);
    }
}

#[test]
fn increasing_lambda_shrinks_the_interior_map() {
    let ell = 0.25;
    let mut prev = f64::INFINITY;
    for lambda in [1.0, 10.0, 1e2, 1e3, 1e4, 1e5] {
        let n = exact_1d_n_matrix(lambda, ell).unwrap();
        assert!(n[0][0] < 0.0 && n[1][1] < 0.0);
        assert!(n[0][0].abs() < prev);
        prev = n[0][0].abs();
        let s = lambda.sqrt() * ell;
        // csch s ≈ 2 e^{−s}
        if s > 5.0 {
            assert!((n[0][1].abs() * lambda.sqrt() / (2.0 * (-s).exp()) - 1.0).abs() < 1e-3);
        }
    }
}

#[test]
fn e_norm_is_nonincreasing_along_a_sweep() {
    let g = Grid::one_d(Domain1D::default(), 1.0 / 512.0).unwrap();
    let norms: Vec<f64> = [1.0, 10.0, 1e2, 1e3, 1e4].iter().map(|&l| e_lambda_norm(&g, l).unwrap()).collect();
    assert!(norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)), "{norms:?}");
}
