use std::sync::Arc;

use poiseuille::linalg::{self, hermitian_part, CMatrix};
use poiseuille::nonlinear::{
    bootstrap_check, direct_convolution, make_initial_data_scaled, nonlinear_terms, velocities, BootstrapFamily,
    InitNorms, InitialShape, PerturbationState, SimConfig, Simulation, Stepper,
};
use poiseuille::operators::{
    accretivity_check, assemble_h, assemble_l, nonlocal_term, velocity_from_vorticity, ModeOperator,
};
use poiseuille::resolvent::{fit_scaling, psi, resolvent_norm};
use poiseuille::spectral::{build_grid, diff_matrix, solve_helmholtz, ChebyshevGrid, FieldMode, C64};
use proptest::prelude::*;

fn grid(n: usize) -> Arc<ChebyshevGrid> {
    Arc::new(build_grid(n).unwrap())
}

fn poly(coeffs: &[f64], y: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * y + c)
}

fn mode(k: i64, g: &ChebyshevGrid, re: &[f64], im: &[f64]) -> FieldMode {
    // Vanishes at both walls.
    let values = g
        .nodes()
        .iter()
        .map(|&y| C64::new(poly(re, y), poly(im, y)) * (1.0 - y * y))
        .collect();
    FieldMode::new(k, values)
}

fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.log10()..hi.log10()).prop_map(|e| 10f64.powf(e))
}

fn coeffs(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, len)
}

fn k_nonzero() -> impl Strategy<Value = i64> {
    prop_oneof![-4i64..=-1, 1i64..=4]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn differentiation_is_exact_on_polynomials(c in coeffs(31)) {
        let g = grid(32);
        let d = diff_matrix(&g, 1).unwrap();
        let vals: Vec<f64> = g.nodes().iter().map(|&y| poly(&c, y)).collect();
        let dc: Vec<f64> = c.iter().enumerate().skip(1).map(|(i, a)| i as f64 * a).collect();
        let exact: Vec<f64> = g.nodes().iter().map(|&y| poly(&dc, y)).collect();
        let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let got = d.apply_real(&vals);
        for (a, b) in got.iter().zip(&exact) {
            prop_assert!((a - b).abs() <= 1e-10 * scale.max(1.0));
        }
    }

    #[test]
    fn quadrature_is_exact_to_degree_n(c in coeffs(33)) {
        let g = grid(32);
        let q: f64 = g.weights().iter().zip(g.nodes()).map(|(w, &y)| w * poly(&c, y)).sum();
        let exact: f64 = c.iter().enumerate().map(|(i, a)| if i % 2 == 0 { 2.0 * a / (i as f64 + 1.0) } else { 0.0 }).sum();
        prop_assert!((q - exact).abs() < 1e-12);
    }

    #[test]
    fn helmholtz_solve_is_a_left_inverse(k in -6i64..=6, re in coeffs(12), im in coeffs(12)) {
        let g = grid(48);
        let f = mode(k, &g, &re, &im);
        let phi = solve_helmholtz(&g, k, &f).unwrap();
        let d2 = diff_matrix(&g, 2).unwrap().apply(&phi.values);
        let scale = f.max_abs().max(1e-12);
        prop_assert!(phi.values[0].norm() == 0.0 && phi.values[g.n()].norm() == 0.0);
        for i in 1..g.n() {
            let back = d2[i] - phi.values[i] * (k * k) as f64;
            prop_assert!((back - f.values[i]).norm() <= 1e-8 * scale);
        }
    }

    #[test]
    fn operator_application_is_linear(
        nu in log_uniform(1e-5, 1e-1), k in k_nonzero(),
        a in coeffs(6), b in coeffs(6), s in -2.0..2.0f64, t in -2.0..2.0f64,
    ) {
        let g = grid(24);
        let op = assemble_l(nu, k, &g).unwrap();
        let f = mode(k, &g, &a, &b);
        let h = mode(k, &g, &b, &a);
        let combo = FieldMode::new(k, f.values.iter().zip(&h.values).map(|(x, y)| x * s + y * t).collect());
        let lhs = op.apply(&combo).unwrap();
        let (af, ah) = (op.apply(&f).unwrap(), op.apply(&h).unwrap());
        let scale = lhs.max_abs().max(af.max_abs()).max(ah.max_abs()).max(1.0);
        for i in 0..g.len() {
            prop_assert!((lhs.values[i] - (af.values[i] * s + ah.values[i] * t)).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn shear_is_skew_in_the_weighted_product(mu in log_uniform(1e-6, 1.0), k in k_nonzero()) {
        let g = grid(32);
        let h = assemble_h(mu, k, &g).unwrap();
        let d = ModeOperator::diffusion(mu, k, g.clone()).unwrap();
        let herm = hermitian_part(&h.weighted());
        let scale = linalg::spectral_norm(&d.weighted()).max(1.0);
        prop_assert!(max_diff(&herm, &hermitian_part(&d.weighted())) <= 1e-10 * scale);
    }

    #[test]
    fn orr_sommerfeld_splits_into_transport_and_nonlocal(nu in log_uniform(1e-6, 1.0), k in k_nonzero()) {
        let g = grid(32);
        let l = assemble_l(nu, k, &g).unwrap();
        let h = assemble_h(nu, k, &g).unwrap();
        let split = l.matrix() - h.matrix();
        prop_assert!(max_diff(&split, &nonlocal_term(&g, k).unwrap()) <= 1e-12);
    }

    #[test]
    fn shifted_solves_vanish_at_walls(
        nu in log_uniform(1e-5, 1e-1), k in k_nonzero(),
        re_shift in 0.0..5.0f64, im_shift in -5.0..5.0f64, a in coeffs(5),
    ) {
        let g = grid(24);
        let op = assemble_l(nu, k, &g).unwrap();
        let rhs = FieldMode::from_fn(k, &g, |y| poly(&a, y) + 0.1);
        let x = op.solve_shifted(C64::new(re_shift, im_shift), &rhs).unwrap();
        prop_assert_eq!(x.values[0], C64::new(0.0, 0.0));
        prop_assert_eq!(x.values[g.n()], C64::new(0.0, 0.0));
    }

    #[test]
    fn advection_diffusion_is_accretive(mu in log_uniform(1e-6, 1e-2), k in prop::sample::select(vec![1i64, 2, 4])) {
        let g = grid(32);
        prop_assert!(accretivity_check(&assemble_h(mu, k, &g).unwrap()) >= -1e-10);
    }

    #[test]
    fn resolvent_bounds(mu in log_uniform(1e-4, 1e-1), k in k_nonzero(), lambda in -3.0..3.0f64) {
        let g = grid(24);
        let op = assemble_h(mu, k, &g).unwrap();
        let r = resolvent_norm(&op, lambda).unwrap();
        // Conjugate symmetry in k and the accretive bound 1 / min Re W.
        let mirrored = resolvent_norm(&assemble_h(mu, -k, &g).unwrap(), lambda).unwrap();
        prop_assert!((r - mirrored).abs() <= 1e-8 * r);
        prop_assert!(r <= (1.0 + 1e-8) / accretivity_check(&op));
        // Spectral containment.
        let shift = C64::new(0.0, k as f64 * lambda);
        let dist = linalg::eigenvalues(&op.weighted()).unwrap().iter().map(|e| (e - shift).norm()).fold(f64::INFINITY, f64::min);
        prop_assert!(r >= (1.0 - 1e-8) / dist);
    }

    #[test]
    fn psi_is_below_sigma_min_at_zero(mu in log_uniform(1e-4, 1e-1), k in 1i64..=3) {
        let g = grid(24);
        let op = assemble_h(mu, k, &g).unwrap();
        let p = psi(&op, [-4.0 * k as f64, 5.0 * k as f64], 41).unwrap();
        prop_assert!(p <= linalg::sigma_min(&op.weighted()) * (1.0 + 1e-12));
    }

    #[test]
    fn fit_recovers_power_laws(exp in -3.0..3.0f64, pref in log_uniform(1e-3, 1e3), scale in log_uniform(1e-2, 1e2)) {
        let xs = [1e-4, 1e-3, 1e-2, 1e-1];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| pref * x.powf(exp)).collect();
        let fit = fit_scaling(&xs, &ys).unwrap();
        prop_assert!((fit.exponent - exp).abs() < 1e-9);
        prop_assert!((fit.prefactor / pref - 1.0).abs() < 1e-8);
        prop_assert!(fit.residual < 1e-8);
        let scaled: Vec<f64> = ys.iter().map(|y| y * scale).collect();
        let fit2 = fit_scaling(&xs, &scaled).unwrap();
        prop_assert!((fit2.exponent - fit.exponent).abs() < 1e-9);
    }

    #[test]
    fn velocity_recovers_vorticity(k in -5i64..=5, re in coeffs(8), im in coeffs(8)) {
        let g = grid(40);
        let w = mode(k, &g, &re, &im);
        let (u1, u2) = velocity_from_vorticity(&w, k, &g).unwrap();
        let d1 = diff_matrix(&g, 1).unwrap();
        let du1 = d1.apply(&u1.values);
        let du2 = d1.apply(&u2.values);
        let ik = C64::new(0.0, k as f64);
        let scale = w.max_abs().max(1e-12);
        prop_assert!(u2.values[0].norm() < 1e-14 && u2.values[g.n()].norm() < 1e-14);
        for i in 1..g.n() {
            // Divergence free and curl equal to ω.
            prop_assert!((ik * u1.values[i] + du2[i]).norm() <= 1e-8 * scale);
            prop_assert!((du1[i] - ik * u2.values[i] - w.values[i]).norm() <= 1e-7 * scale);
        }
        if k == 0 {
            prop_assert!(u2.values.iter().all(|v| v.norm() == 0.0));
        }
    }

    #[test]
    fn dealiased_products_match_direct_convolution(k_max in 1usize..=8, seed in 0u64..1000) {
        let g = grid(16);
        let cfg = SimConfig { k_max, n: 16, seed, ..SimConfig::desk(1e-2, 1e-2) };
        let st = make_initial_data_scaled(&cfg, InitialShape::RandomBand, &g, 1.0, 1.0).unwrap();
        let fast = nonlinear_terms(&st, &g).unwrap();
        let slow = direct_convolution(&st, &g).unwrap();
        prop_assert!(fast.max_difference(&slow) <= 1e-10);
    }

    #[test]
    fn zero_mode_vertical_velocity_vanishes(seed in 0u64..1000) {
        let g = grid(16);
        let cfg = SimConfig { k_max: 4, n: 16, seed, ..SimConfig::desk(1e-2, 1e-2) };
        let st = make_initial_data_scaled(&cfg, InitialShape::RandomBand, &g, 1.0, 1.0).unwrap();
        let (_, u2) = velocities(&st, &g).unwrap();
        prop_assert!(u2[4].values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn bootstrap_is_symmetric_and_partitioned(
        e_half in prop::collection::vec(1e-8..1e-2f64, 7),
        h_half in prop::collection::vec(1e-8..1e-2f64, 7),
        nu in log_uniform(1e-4, 1e-1), mu in log_uniform(1e-4, 1e-1),
    ) {
        let kk = 6i64;
        let mirror = |half: &[f64]| -> Vec<f64> { (-kk..=kk).map(|k| half[k.unsigned_abs() as usize]).collect() };
        let (e, h) = (mirror(&e_half), mirror(&h_half));
        let init = InitNorms { k_max: 6, omega: mirror(&e_half), theta: mirror(&h_half) };
        let r = bootstrap_check(&e, &h, nu, mu, &init).unwrap();
        prop_assert_eq!(r.rows.len(), 5 * 13);
        for k in 1..=kk {
            for f in BootstrapFamily::ALL {
                let at = |k: i64| r.rows.iter().find(|row| row.k == k && row.family == f).unwrap();
                let (a, b) = (at(k), at(-k));
                prop_assert_eq!(a.applies, b.applies);
                if a.applies {
                    prop_assert!((a.realized_c - b.realized_c).abs() <= 1e-12 * (1.0 + a.realized_c.abs()));
                }
            }
        }
        for k in -kk..=kk {
            let applicable: Vec<_> = r.applicable().filter(|row| row.k == k).collect();
            prop_assert_eq!(applicable.len(), 2);
            prop_assert!(applicable.iter().all(|row| row.realized_c.is_finite() && row.realized_c >= 0.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn stepping_preserves_reality_walls_and_ledger_order(seed in 0u64..1000, steps in 5usize..40) {
        let cfg = SimConfig { k_max: 4, n: 16, seed, horizon: 10.0, ..SimConfig::desk(1e-2, 1e-2) };
        let stepper = Stepper::new(&cfg).unwrap();
        let g = stepper.grid().clone();
        let init = make_initial_data_scaled(&cfg, InitialShape::RandomBand, &g, 1e-3, 1e-3).unwrap();
        let mut sim = Simulation::new(&stepper, init).unwrap();
        let mut prev = sim.ledger().clone();
        for _ in 0..steps {
            sim.step().unwrap();
            let now = sim.ledger();
            for k in 0..=4 {
                prop_assert!(now.omega_linf[k] >= prev.omega_linf[k]);
                prop_assert!(now.omega_l2_sq[k] >= prev.omega_l2_sq[k]);
                prop_assert!(now.velocity_l2_sq[k] >= prev.velocity_l2_sq[k]);
                prop_assert!(now.theta_linf[k] >= prev.theta_linf[k]);
                prop_assert!(now.theta_l2_sq[k] >= prev.theta_l2_sq[k]);
            }
            prev = now.clone();
        }
        let st: &PerturbationState = sim.state();
        prop_assert!(st.reality_defect() <= 1e-15 * (1.0 + st.norm(&g)));
        prop_assert_eq!(st.boundary_defect(), 0.0);
    }
}
