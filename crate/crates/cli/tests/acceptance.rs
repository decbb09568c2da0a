//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` still run and still print FAIL;
//! they only stop short of failing the process. Any other FAIL does.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use poiseuille::evolution::{decay_rate, gearhart_pruss_check};
use poiseuille::linalg;
use poiseuille::nonlinear::{
    bootstrap_check, direct_convolution, make_initial_data, make_initial_data_scaled, nonlinear_terms, run,
    step_count, transport_skew_residual, BootstrapFamily, InitialShape, PerturbationState, RunOptions, SimConfig,
    Simulation, Stepper,
};
use poiseuille::operators::{accretivity_check, assemble_h, assemble_l};
use poiseuille::resolvent::{
    default_lambda_range, fit_scaling, linspace, psi, psi_bound_constant, sup_resolvent, verify_os_bounds,
    DEFAULT_SAMPLES, OS_BOUND_KEYS,
};
use poiseuille::spectral::{build_grid, solve_helmholtz, ChebyshevGrid, FieldMode, C64};
use poiseuille_cli::commands::threshold_points;
use poiseuille_cli::Config;

/// Criteria that fail on this discretization for understood reasons.
const KNOWN_FAILURES: &[&str] = &["resolvent_scaling"];

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

type Check = fn() -> Outcome;

fn grid(n: usize) -> Arc<ChebyshevGrid> {
    Arc::new(build_grid(n).expect("valid degree"))
}

fn outcome(name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { name, pass, detail }
}

fn helmholtz_oracle() -> Outcome {
    let g = grid(64);
    let mut worst: f64 = 0.0;
    for k in [0i64, 1, 2, 5] {
        for m in [1.0, 2.0] {
            let s = |y: f64| (m * PI * (y + 1.0) / 2.0).sin();
            let f = FieldMode::from_fn(k, &g, s);
            let phi = solve_helmholtz(&g, k, &f).unwrap();
            let lam = m * m * PI * PI / 4.0 + (k * k) as f64;
            for (v, &y) in phi.values.iter().zip(g.nodes()) {
                worst = worst.max((v - C64::new(-s(y) / lam, 0.0)).norm());
            }
        }
    }
    outcome("helmholtz_eigenfunctions", worst < 1e-8, format!("max error {worst:.2e} (< 1e-8), n=64, m=1,2, k=0,1,2,5"))
}

const MU_GRID: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

fn accretivity() -> Outcome {
    let g = grid(64);
    let mut worst = f64::INFINITY;
    for mu in MU_GRID {
        for k in [1, 2, 4] {
            worst = worst.min(accretivity_check(&assemble_h(mu, k, &g).unwrap()));
        }
    }
    outcome("accretivity", worst >= -1e-10, format!("min Re W(H) = {worst:.3e} (>= -1e-10) over 5 mu x k=1,2,4"))
}

fn psi_values(n: usize, mus: &[f64]) -> Vec<f64> {
    let g = grid(n);
    mus.iter()
        .map(|&mu| psi(&assemble_h(mu, 1, &g).unwrap(), default_lambda_range(1), DEFAULT_SAMPLES).unwrap())
        .collect()
}

fn psi_scaling() -> Outcome {
    let mus = [1e-3, 1e-4, 1e-5, 1e-6];
    let psis = psi_values(128, &mus);
    let fit = fit_scaling(&mus, &psis).unwrap();
    let consts: Vec<f64> = mus.iter().zip(&psis).map(|(&mu, &p)| psi_bound_constant(p, mu, 1)).collect();
    let c = consts.iter().copied().fold(f64::INFINITY, f64::min);
    let cmax = consts.iter().copied().fold(0.0, f64::max);
    let coarse = fit_scaling(&mus, &psi_values(64, &mus)).unwrap().exponent;
    let pass = (fit.exponent - 0.5).abs() <= 0.1 && cmax <= 10.0 * c;
    outcome(
        "psi_scaling",
        pass,
        format!(
            "slope {:.3} (0.5 +- 0.1) at n=128; band c = {c:.3}, max/c = {:.3} (<= 10); n=64 slope {coarse:.3}",
            fit.exponent,
            cmax / c
        ),
    )
}

fn resolvent_scaling() -> Outcome {
    let nus = [1e-2, 1e-3, 1e-4, 1e-5];
    let g = grid(128);
    let sups: Vec<f64> = nus
        .iter()
        .map(|&nu| sup_resolvent(&assemble_l(nu, 1, &g).unwrap(), default_lambda_range(1), DEFAULT_SAMPLES).unwrap().1)
        .collect();
    let fit = fit_scaling(&nus, &sups).unwrap();
    let g64 = grid(64);
    let mut spread_ok = true;
    let mut spreads = Vec::new();
    let reports: Vec<_> = nus.iter().map(|&nu| verify_os_bounds(nu, 1, &g64).unwrap()).collect();
    for key in OS_BOUND_KEYS {
        let vals: Vec<f64> = reports.iter().map(|r| r.constants[key]).collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(0.0, f64::max);
        spread_ok &= hi <= 5.0 * lo;
        spreads.push(format!("{key} {:.2}x", hi / lo));
    }
    let tail = [1e-4, 1e-5, 1e-6];
    let tail_sups: Vec<f64> = tail
        .iter()
        .map(|&nu| sup_resolvent(&assemble_l(nu, 1, &g).unwrap(), default_lambda_range(1), DEFAULT_SAMPLES).unwrap().1)
        .collect();
    let tail_fit = fit_scaling(&tail, &tail_sups).unwrap();
    let slope_ok = (fit.exponent + 0.5).abs() <= 0.1;
    let scaled: Vec<f64> = nus.iter().zip(&sups).map(|(nu, s)| s * nu.sqrt()).collect();
    let (smin, smax) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    outcome(
        "resolvent_scaling",
        slope_ok && spread_ok,
        format!(
            "sup-resolvent slope {:.3} (-0.5 +- 0.1) over nu 1e-2..1e-5 at n=128 [{}]; constants spread (<= 5x): {} [{}]; nu 1e-4..1e-6 slope {:.3}; sup*nu^1/2 in [{smin:.3}, {smax:.3}]",
            fit.exponent,
            if slope_ok { "ok" } else { "out of band" },
            spreads.join(", "),
            if spread_ok { "ok" } else { "out of band" },
            tail_fit.exponent
        ),
    )
}

fn gearhart_pruss() -> Outcome {
    let g = grid(64);
    let mut violations = 0;
    let mut min_slack = f64::INFINITY;
    for mu in MU_GRID {
        for k in [1, 2, 4] {
            let op = assemble_h(mu, k, &g).unwrap();
            let ts = linspace(0.0, 3.0 / mu.sqrt(), 50);
            let r = gearhart_pruss_check(&op, &ts).unwrap();
            violations += usize::from(!r.pass);
            min_slack = min_slack.min(r.min_slack);
        }
    }
    outcome(
        "gearhart_pruss",
        violations == 0,
        format!("{violations} violations over 15 (mu, k) x 50 t; min slack {min_slack:.3e}"),
    )
}

fn decay_rates(n: usize, nus: &[f64]) -> Vec<f64> {
    let g = grid(n);
    nus.iter()
        .map(|&nu| decay_rate(&assemble_l(nu, 1, &g).unwrap(), 10.0 / nu.sqrt(), 41).unwrap().fitted_rate)
        .collect()
}

fn enhanced_dissipation() -> Outcome {
    let nus = [1e-4, 1e-5, 1e-6];
    let rates = decay_rates(128, &nus);
    let fit = fit_scaling(&nus, &rates).unwrap();
    let wide = [1e-2, 1e-3, 1e-4, 1e-5];
    let wide_fit = fit_scaling(&wide, &decay_rates(128, &wide)).unwrap();
    outcome(
        "enhanced_dissipation",
        (fit.exponent - 0.5).abs() <= 0.15,
        format!(
            "decay-rate slope {:.3} (0.5 +- 0.15) over nu 1e-4..1e-6 at n=128; rate/nu^1/2 = {:.3}; nu 1e-2..1e-5 slope {:.3}",
            fit.exponent,
            rates[0] / nus[0].sqrt(),
            wide_fit.exponent
        ),
    )
}

fn linear_consistency() -> Outcome {
    let nu = 1e-2;
    let mut worst_rel = Vec::new();
    let mut worst_abs = Vec::new();
    for amp in [1e-6, 1e-7] {
        let cfg = SimConfig { k_max: 4, c1: 0.0, ..SimConfig::desk(nu, nu) };
        let stepper = Stepper::new(&cfg).unwrap();
        let g = stepper.grid().clone();
        let init = make_initial_data_scaled(&cfg, InitialShape::SingleMode { k: 1 }, &g, amp, 0.0).unwrap();
        let a = assemble_l(nu, 1, &g).unwrap().interior();
        let step = linalg::expm(&(a * C64::new(-cfg.dt, 0.0)));
        let mut w = linalg::cvec(&init.omega(1).values[1..g.n()]);
        let mut sim = Simulation::new(&stepper, init).unwrap();
        let (mut rel, mut abs): (f64, f64) = (0.0, 0.0);
        for _ in 0..step_count(&cfg) {
            sim.step().unwrap();
            w = &step * w;
            let mut lin = PerturbationState::zeros(4, &g);
            let mut v = vec![C64::new(0.0, 0.0)];
            v.extend(w.iter().copied());
            v.push(C64::new(0.0, 0.0));
            lin.set_omega(1, v);
            let d = sim.state().distance(&lin, &g);
            abs = abs.max(d);
            rel = rel.max(d / lin.norm(&g));
        }
        worst_rel.push(rel);
        worst_abs.push(abs);
    }
    let ratio = worst_abs[0] / worst_abs[1];
    let pass = worst_rel[1] <= 1e-5 && (100.0 / 3.0..=300.0).contains(&ratio);
    outcome(
        "nonlinear_linear_consistency",
        pass,
        format!(
            "max rel error {:.2e} at a=1e-7 (<= 1e-5) over 10 nu^-1/2; error ratio a=1e-6 : 1e-7 = {ratio:.1} (100 within 3x)",
            worst_rel[1]
        ),
    )
}

struct StabilityRun {
    nu: f64,
    e_ratio: f64,
    h_ratio: f64,
    failure: Option<String>,
    bootstrap: poiseuille::nonlinear::BootstrapReport,
}

fn stability_run_data() -> Vec<StabilityRun> {
    std::thread::scope(|s| {
        let handles: Vec<_> = [1e-2, 3e-3, 1e-3]
            .into_iter()
            .map(|nu| {
                s.spawn(move || {
                    let cfg = SimConfig::desk(nu, nu);
                    let stepper = Stepper::new(&cfg).unwrap();
                    let init = make_initial_data(&cfg, InitialShape::RandomBand, stepper.grid()).unwrap();
                    let out = run(&stepper, init, RunOptions::default()).unwrap();
                    let bootstrap =
                        bootstrap_check(&out.ledger.e_vec(), &out.ledger.h_vec(), nu, nu, &out.init_norms).unwrap();
                    StabilityRun {
                        nu,
                        e_ratio: out.ledger.e_total() / out.initial_e,
                        h_ratio: out.ledger.h_total() / out.initial_h,
                        failure: out.failure.map(|f| f.to_string()),
                        bootstrap,
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    })
}

fn stability(runs: &[StabilityRun]) -> Outcome {
    let pass = runs.iter().all(|r| r.failure.is_none() && r.e_ratio <= 4.0 && r.h_ratio <= 4.0);
    let detail = runs
        .iter()
        .map(|r| {
            format!(
                "nu={:e}: E/E0 {:.2}, H/H0 {:.2}{}",
                r.nu,
                r.e_ratio,
                r.h_ratio,
                r.failure.as_deref().map(|f| format!(" ({f})")).unwrap_or_default()
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    outcome("stability_runs", pass, format!("{detail} (<= 4, K=16, n=64)"))
}

fn bootstrap(runs: &[StabilityRun]) -> Outcome {
    let mut finite = true;
    let mut partition = true;
    let mut worst = [0.0f64; 5];
    for r in runs {
        for row in r.bootstrap.applicable() {
            finite &= row.realized_c.is_finite();
        }
        for k in -16i64..=16 {
            let fams: Vec<BootstrapFamily> =
                r.bootstrap.applicable().filter(|row| row.k == k).map(|row| row.family).collect();
            let low = r.nu * (k * k) as f64 <= 1.0;
            let expected = match (k, low) {
                (0, _) => vec![BootstrapFamily::VorticityMean, BootstrapFamily::TemperatureMean],
                (_, true) => vec![BootstrapFamily::VorticityNonzero, BootstrapFamily::TemperatureLow],
                (_, false) => vec![BootstrapFamily::VorticityNonzero, BootstrapFamily::TemperatureHigh],
            };
            partition &= fams == expected;
        }
        for (i, f) in BootstrapFamily::ALL.into_iter().enumerate() {
            worst[i] = worst[i].max(r.bootstrap.worst(f).unwrap_or(0.0));
        }
    }
    let names: Vec<String> = BootstrapFamily::ALL
        .iter()
        .zip(worst)
        .map(|(f, c)| format!("{} {c:.3}", f.name()))
        .collect();
    outcome(
        "bootstrap_constants",
        finite && partition,
        format!("finite: {finite}, partition exact: {partition}; worst C: {}", names.join(", ")),
    )
}

fn convolution() -> Outcome {
    let g = grid(32);
    let cfg = SimConfig { k_max: 8, n: 32, seed: 3, ..SimConfig::desk(1e-2, 1e-2) };
    let st = make_initial_data_scaled(&cfg, InitialShape::RandomBand, &g, 1.0, 1.0).unwrap();
    let diff = nonlinear_terms(&st, &g).unwrap().max_difference(&direct_convolution(&st, &g).unwrap());
    let g64 = grid(64);
    let cfg64 = SimConfig { k_max: 8, n: 64, seed: 3, ..SimConfig::desk(1e-2, 1e-2) };
    let st64 = make_initial_data_scaled(&cfg64, InitialShape::RandomBand, &g64, 1.0, 1.0).unwrap();
    let skew = transport_skew_residual(&st64, &g64).unwrap();
    outcome(
        "convolution_oracle",
        diff <= 1e-10 && skew <= 1e-8,
        format!("dealiased vs direct {diff:.2e} (<= 1e-10) at K=8; skew residual {skew:.2e} (<= 1e-8)"),
    )
}

fn synthetic_threshold() -> Outcome {
    let cfg = Config::parse(
        "[physics]\nnu = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4]\n[bisection]\nbracket = [1e-6, 1.0]\ntolerance = 0.01\nsynthetic_gamma = 0.6666666666666666\n",
    )
    .unwrap();
    let pts = threshold_points(&cfg).unwrap();
    let xs: Vec<f64> = pts.iter().map(|p| p.nu).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.amplitude_star).collect();
    let gamma = fit_scaling(&xs, &ys).unwrap().exponent;
    outcome(
        "synthetic_threshold",
        (gamma - 2.0 / 3.0).abs() <= 0.02,
        format!("fitted gamma {gamma:.4} (2/3 +- 0.02)"),
    )
}

fn main() {
    let clock = Instant::now();
    let checks: [Check; 9] = [
        helmholtz_oracle,
        accretivity,
        psi_scaling,
        resolvent_scaling,
        gearhart_pruss,
        enhanced_dissipation,
        linear_consistency,
        convolution,
        synthetic_threshold,
    ];
    let (mut outcomes, runs) = std::thread::scope(|s| {
        let runs = s.spawn(stability_run_data);
        let handles: Vec<_> = checks.iter().map(|&c| s.spawn(c)).collect();
        let outcomes: Vec<Outcome> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        (outcomes, runs.join().unwrap())
    });
    outcomes.insert(7, stability(&runs));
    outcomes.insert(8, bootstrap(&runs));

    let mut unexpected = 0;
    for o in &outcomes {
        let known = KNOWN_FAILURES.contains(&o.name);
        println!(
            "{} {}: {}{}",
            if o.pass { "PASS" } else { "FAIL" },
            o.name,
            o.detail,
            if !o.pass && known { " [known deviation]" } else { "" }
        );
        unexpected += usize::from(!o.pass && !known);
    }
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!(
        "acceptance: {passed}/{} passed, {unexpected} unexpected failures ({:.0} s)",
        outcomes.len(),
        clock.elapsed().as_secs_f64()
    );
    if unexpected > 0 {
        std::process::exit(1);
    }
}
