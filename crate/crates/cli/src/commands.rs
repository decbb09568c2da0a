//! Subcommand implementations. Each computes everything first (in
//! parallel where points are independent) and then writes its files in a
//! fixed order, so output bytes depend only on the configuration.

use std::collections::BTreeMap;
use std::sync::Arc;

use poiseuille::evolution::{decay_rate, gearhart_pruss_check, propagator_norm, weight_exponent};
use poiseuille::nonlinear::{
    bootstrap_check, make_initial_data, run as run_sim, temperature_proxy, velocity_proxy, InitNorms, RunOptions,
    SimConfig, Stepper,
};
use poiseuille::operators::ModeOperator;
use poiseuille::resolvent::{
    fit_scaling, linspace, psi_bound_constant, psi_detail, resolvent_sweep, sup_resolvent, verify_os_bounds_on,
    ScalingFit, OS_BOUND_KEYS,
};
use poiseuille::spectral::{build_grid, ChebyshevGrid};
use poiseuille::threshold::{bisect_threshold, PhysicsOracle, ThresholdPoint, Verdict};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Config, OperatorChoice};
use crate::output::{num, tag, OutputDir};
use crate::{CliError, Command};

pub const SWEEP_HEADER: [&str; 4] = ["coeff", "k", "lambda", "norm"];
pub const SUMMARY_HEADER: [&str; 4] = ["coeff", "k", "name", "value"];
pub const FIT_HEADER: [&str; 5] = ["quantity", "k", "exponent", "prefactor", "residual"];
pub const SEMIGROUP_HEADER: [&str; 4] = ["coeff", "k", "t", "norm"];
pub const LEDGER_HEADER: [&str; 4] = ["t", "k", "E_component_name", "value"];
pub const INIT_HEADER: [&str; 3] = ["k", "omega", "theta"];
pub const THRESHOLD_HEADER: [&str; 7] = ["nu", "mu", "amplitude_star", "verdict_margin", "lo", "hi", "evaluations"];
pub const BOOTSTRAP_HEADER: [&str; 7] = ["k", "family", "applies", "lhs", "free_term", "scaled_term", "realized_c"];

/// What a command hands back to the manifest writer.
#[derive(Debug, Default)]
pub struct CommandReport {
    pub summary: Value,
    pub sim_configs: Vec<SimConfig>,
    /// Failure to report after the outputs and manifest are written.
    pub deferred: Option<CliError>,
}

pub fn dispatch(cmd: Command, cfg: &Config, out: &mut OutputDir) -> Result<CommandReport, CliError> {
    match cmd {
        Command::Resolvent => resolvent(cfg, out),
        Command::Psi => psi(cfg, out),
        Command::Semigroup => semigroup(cfg, out),
        Command::Simulate => simulate(cfg, out),
        Command::Threshold => threshold(cfg, out),
        Command::Bootstrap => bootstrap(cfg, out),
    }
}

fn operator(choice: OperatorChoice, coeff: f64, k: i64, grid: &Arc<ChebyshevGrid>) -> Result<ModeOperator, CliError> {
    Ok(match choice {
        OperatorChoice::OrrSommerfeld => ModeOperator::orr_sommerfeld(coeff, k, grid.clone())?,
        OperatorChoice::AdvectionDiffusion => ModeOperator::advection_diffusion(coeff, k, grid.clone())?,
    })
}

/// Every `(coeff, k)` in k-major order.
fn points(cfg: &Config, choice: OperatorChoice) -> Vec<(f64, i64)> {
    let coeffs = cfg.coefficients(choice);
    cfg.physics
        .k
        .iter()
        .flat_map(|&k| coeffs.iter().map(move |&c| (c, k)))
        .collect()
}

fn fit_row(quantity: &str, k: Option<i64>, fit: &ScalingFit) -> Vec<String> {
    vec![
        quantity.to_string(),
        k.map(|k| k.to_string()).unwrap_or_default(),
        num(fit.exponent),
        num(fit.prefactor),
        num(fit.residual),
    ]
}

fn summary_row(coeff: f64, k: i64, name: &str, value: f64) -> Vec<String> {
    vec![num(coeff), k.to_string(), name.to_string(), num(value)]
}

/// Fits `ys` against the coefficients per k when there are enough points.
fn fits_per_k(
    pts: &[(f64, i64)],
    ys: &[f64],
    ks: &[i64],
) -> Vec<(Option<i64>, Result<ScalingFit, poiseuille::Error>)> {
    ks.iter()
        .filter_map(|&k| {
            let (xs, vs): (Vec<f64>, Vec<f64>) =
                pts.iter().zip(ys).filter(|((_, kk), _)| *kk == k).map(|((c, _), &y)| (*c, y)).unzip();
            (xs.len() >= 3).then(|| (Some(k), fit_scaling(&xs, &vs)))
        })
        .collect()
}

fn write_fits(
    out: &mut OutputDir,
    fits: &[(String, Option<i64>, ScalingFit)],
) -> Result<BTreeMap<String, f64>, CliError> {
    let rows: Vec<Vec<String>> = fits.iter().map(|(q, k, f)| fit_row(q, *k, f)).collect();
    out.write_csv("scaling_fits.csv", &FIT_HEADER, &rows)?;
    Ok(fits
        .iter()
        .map(|(q, k, f)| (format!("{q}{}", k.map(|k| format!("_k{k}")).unwrap_or_default()), f.exponent))
        .collect())
}

fn collect_fits(
    quantity: &str,
    pts: &[(f64, i64)],
    ys: &[f64],
    ks: &[i64],
) -> Result<Vec<(String, Option<i64>, ScalingFit)>, CliError> {
    fits_per_k(pts, ys, ks)
        .into_iter()
        .map(|(k, f)| Ok((quantity.to_string(), k, f?)))
        .collect()
}

pub fn resolvent(cfg: &Config, out: &mut OutputDir) -> Result<CommandReport, CliError> {
    let choice = cfg.sweep.operator.unwrap_or(OperatorChoice::OrrSommerfeld);
    let grid = Arc::new(build_grid(cfg.grid.n)?);
    let pts = points(cfg, choice);
    let samples = cfg.sweep.samples;
    let results: Vec<_> = pts
        .par_iter()
        .map(|&(coeff, k)| -> Result<_, CliError> {
            let op = operator(choice, coeff, k, &grid)?;
            let [lo, hi] = cfg.lambda_range(k);
            let profile = resolvent_sweep(&op, &linspace(lo, hi, samples))?;
            let (lam, sup) = sup_resolvent(&op, [lo, hi], samples)?;
            let bounds = if choice == OperatorChoice::OrrSommerfeld && cfg.sweep.os_bounds {
                Some(verify_os_bounds_on(coeff, k, &grid, [lo, hi], samples)?)
            } else {
                None
            };
            Ok((profile, lam, sup, bounds))
        })
        .collect::<Result<_, _>>()?;

    let mut summary = Vec::new();
    let mut sups = Vec::new();
    for (&(coeff, k), (profile, lam, sup, bounds)) in pts.iter().zip(&results) {
        let rows: Vec<Vec<String>> = profile
            .lambdas
            .iter()
            .zip(&profile.norms)
            .map(|(&l, &v)| vec![num(coeff), k.to_string(), num(l), num(v)])
            .collect();
        out.write_csv(&format!("resolvent_{}_k{k}.csv", tag(coeff)), &SWEEP_HEADER, &rows)?;
        summary.push(summary_row(coeff, k, "sup_norm", *sup));
        summary.push(summary_row(coeff, k, "sup_lambda", *lam));
        if let Some(b) = bounds {
            for key in OS_BOUND_KEYS {
                summary.push(summary_row(coeff, k, key, b.constants[key]));
            }
            for key in OS_BOUND_KEYS {
                summary.push(summary_row(coeff, k, &format!("argmax_{key}"), b.argmax[key]));
            }
        }
        sups.push(*sup);
    }
    let fits = collect_fits("sup_resolvent", &pts, &sups, &cfg.physics.k)?;
    for (q, k, f) in &fits {
        summary.push(vec![String::new(), k.unwrap_or(0).to_string(), format!("exponent_{q}"), num(f.exponent)]);
    }
    out.write_csv("resolvent_summary.csv", &SUMMARY_HEADER, &summary)?;
    let exponents = write_fits(out, &fits)?;
    Ok(CommandReport {
        summary: json!({ "operator": choice, "exponents": exponents }),
        ..Default::default()
    })
}

pub fn psi(cfg: &Config, out: &mut OutputDir) -> Result<CommandReport, CliError> {
    let choice = cfg.sweep.operator.unwrap_or(OperatorChoice::AdvectionDiffusion);
    let grid = Arc::new(build_grid(cfg.grid.n)?);
    let pts = points(cfg, choice);
    let results: Vec<_> = pts
        .par_iter()
        .map(|&(coeff, k)| -> Result<_, CliError> {
            let op = operator(choice, coeff, k, &grid)?;
            Ok(psi_detail(&op, cfg.lambda_range(k), cfg.sweep.samples)?)
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<Vec<String>> = pts
        .iter()
        .zip(&results)
        .map(|(&(coeff, k), r)| {
            vec![
                num(coeff),
                k.to_string(),
                num(r.psi),
                num(r.lambda),
                num(psi_bound_constant(r.psi, coeff, k)),
            ]
        })
        .collect();
    out.write_csv("psi.csv", &["coeff", "k", "psi", "lambda", "bound_constant"], &rows)?;
    let psis: Vec<f64> = results.iter().map(|r| r.psi).collect();
    let fits = collect_fits("psi", &pts, &psis, &cfg.physics.k)?;
    let exponents = write_fits(out, &fits)?;
    let constants: Vec<f64> = pts.iter().zip(&psis).map(|(&(c, k), &p)| psi_bound_constant(p, c, k)).collect();
    let lo = constants.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = constants.iter().copied().fold(0.0, f64::max);
    Ok(CommandReport {
        summary: json!({
            "operator": choice,
            "exponents": exponents,
            "bound_constant_min": lo,
            "bound_constant_max": hi,
        }),
        ..Default::default()
    })
}

pub fn semigroup(cfg: &Config, out: &mut OutputDir) -> Result<CommandReport, CliError> {
    let choice = cfg.sweep.operator.unwrap_or(OperatorChoice::AdvectionDiffusion);
    let grid = Arc::new(build_grid(cfg.grid.n)?);
    let pts = points(cfg, choice);
    let s = &cfg.sweep;
    let results: Vec<_> = pts
        .par_iter()
        .map(|&(coeff, k)| -> Result<_, CliError> {
            let op = operator(choice, coeff, k, &grid)?;
            let times = linspace(0.0, s.t_max_factor / coeff.sqrt(), s.t_points);
            let norms = times.iter().map(|&t| propagator_norm(&op, t)).collect::<Result<Vec<_>, _>>()?;
            let gp = gearhart_pruss_check(&op, &times)?;
            let decay = decay_rate(&op, s.decay_horizon_factor / coeff.sqrt(), s.decay_samples)?;
            Ok((times, norms, gp, decay))
        })
        .collect::<Result<_, _>>()?;

    let mut summary = Vec::new();
    let mut violations = 0usize;
    for (&(coeff, k), (times, norms, gp, decay)) in pts.iter().zip(&results) {
        let rows: Vec<Vec<String>> = times
            .iter()
            .zip(norms)
            .map(|(&t, &v)| vec![num(coeff), k.to_string(), num(t), num(v)])
            .collect();
        out.write_csv(&format!("semigroup_{}_k{k}.csv", tag(coeff)), &SEMIGROUP_HEADER, &rows)?;
        let rows: Vec<Vec<String>> = decay
            .times
            .iter()
            .zip(&decay.norms)
            .map(|(&t, &v)| vec![num(coeff), k.to_string(), num(t), num(v)])
            .collect();
        out.write_csv(&format!("decay_{}_k{k}.csv", tag(coeff)), &SEMIGROUP_HEADER, &rows)?;
        violations += usize::from(!gp.pass);
        summary.push(summary_row(coeff, k, "psi", gp.psi));
        summary.push(summary_row(coeff, k, "gp_min_slack", gp.min_slack));
        summary.push(summary_row(coeff, k, "gp_pass", if gp.pass { 1.0 } else { 0.0 }));
        summary.push(summary_row(coeff, k, "decay_rate", decay.fitted_rate));
        summary.push(summary_row(coeff, k, "weight_exponent", weight_exponent(decay)));
    }
    out.write_csv("semigroup_summary.csv", &SUMMARY_HEADER, &summary)?;
    let rates: Vec<f64> = results.iter().map(|r| r.3.fitted_rate).collect();
    let fits = if rates.iter().all(|&r| r > 0.0) {
        collect_fits("decay_rate", &pts, &rates, &cfg.physics.k)?
    } else {
        Vec::new()
    };
    let exponents = write_fits(out, &fits)?;
    Ok(CommandReport {
        summary: json!({ "operator": choice, "exponents": exponents, "gp_violations": violations }),
        ..Default::default()
    })
}

fn run_tag(nu: f64, mu: f64) -> String {
    format!("nu{}_mu{}", tag(nu), tag(mu))
}

pub fn simulate(cfg: &Config, out: &mut OutputDir) -> Result<CommandReport, CliError> {
    let sims: Vec<SimConfig> = cfg.pairs().into_iter().map(|(nu, mu)| cfg.sim_config(nu, mu)).collect();
    let options = RunOptions {
        record_every: cfg.sweep.record_every,
    };
    let results: Vec<_> = sims
        .par_iter()
        .map(|sc| -> Result<_, CliError> {
            let stepper = Stepper::new(sc)?;
            let grid = stepper.grid().clone();
            let init = make_initial_data(sc, cfg.physics.shape, &grid)?;
            let proxies = (velocity_proxy(&init, &grid, sc.sobolev_s)?, temperature_proxy(&init, &grid));
            Ok((run_sim(&stepper, init, options)?, proxies))
        })
        .collect::<Result<_, _>>()?;

    let mut summary = Vec::new();
    let mut deferred = None;
    let mut runs = Vec::new();
    for (sc, (res, (pu, pt))) in sims.iter().zip(&results) {
        let name = run_tag(sc.nu, sc.mu);
        let kk = sc.k_max as i64;
        let mut rows = Vec::new();
        for snap in &res.history {
            for k in 0..=kk {
                for (comp, v) in snap.named_components(k) {
                    rows.push(vec![num(snap.t), k.to_string(), comp.to_string(), num(v)]);
                }
            }
        }
        out.write_csv(&format!("ledger_{name}.csv"), &LEDGER_HEADER, &rows)?;
        let rows: Vec<Vec<String>> = (-kk..=kk)
            .map(|k| {
                let i = (k + kk) as usize;
                vec![k.to_string(), num(res.init_norms.omega[i]), num(res.init_norms.theta[i])]
            })
            .collect();
        out.write_csv(&format!("init_norms_{name}.csv"), &INIT_HEADER, &rows)?;

        let (e, h) = (res.ledger.e_total(), res.ledger.h_total());
        let ratio = |x: f64, x0: f64| if x0 > 0.0 { x / x0 } else { 0.0 };
        for (key, v) in [
            ("velocity_proxy", *pu),
            ("temperature_proxy", *pt),
            ("initial_E", res.initial_e),
            ("initial_H", res.initial_h),
            ("E", e),
            ("H", h),
            ("E_ratio", ratio(e, res.initial_e)),
            ("H_ratio", ratio(h, res.initial_h)),
            ("final_time", res.state.t),
            ("steps", res.steps as f64),
            ("failed", if res.failure.is_some() { 1.0 } else { 0.0 }),
        ] {
            summary.push(vec![num(sc.nu), num(sc.mu), key.to_string(), num(v)]);
        }
        if let Some(f) = &res.failure {
            deferred.get_or_insert_with(|| CliError::Numerical(format!("run {name}: {f}")));
        }
        runs.push(json!({
            "tag": name,
            "E_ratio": ratio(e, res.initial_e),
            "H_ratio": ratio(h, res.initial_h),
            "failure": res.failure.as_ref().map(|f| f.to_string()),
        }));
    }
    out.write_csv("simulate_summary.csv", &["nu", "mu", "name", "value"], &summary)?;
    Ok(CommandReport {
        summary: json!({ "runs": runs }),
        sim_configs: sims,
        deferred,
    })
}

fn threshold_oracle(cfg: &Config, nu: f64, mu: f64) -> Result<Box<dyn FnMut(f64) -> poiseuille::Result<Verdict> + '_>, CliError> {
    if let Some(gamma) = cfg.bisection.synthetic_gamma {
        let star = nu.min(mu).powf(gamma);
        return Ok(Box::new(move |a| Ok(if a <= star { Verdict::Stable } else { Verdict::Unstable })));
    }
    let oracle = PhysicsOracle::new(&cfg.sim_config(nu, mu), cfg.physics.shape, cfg.verdict_rule())?;
    Ok(Box::new(move |a| oracle.classify(a).map(|d| d.verdict)))
}

/// Bisects every `(ν, μ)` pair of the configuration.
pub fn threshold_points(cfg: &Config) -> Result<Vec<ThresholdPoint>, CliError> {
    let b = &cfg.bisection;
    cfg.pairs()
        .par_iter()
        .map(|&(nu, mu)| -> Result<_, CliError> {
            let oracle = threshold_oracle(cfg, nu, mu)?;
            Ok(bisect_threshold(nu, mu, b.bracket, b.tolerance, oracle)?)
        })
        .collect()
}

pub fn threshold(cfg: &Config, out: &mut OutputDir) -> Result<CommandReport, CliError> {
    let stars = threshold_points(cfg)?;
    let rows: Vec<Vec<String>> = stars
        .iter()
        .map(|p| {
            vec![
                num(p.nu),
                num(p.mu),
                num(p.amplitude_star),
                num(p.verdict_margin),
                num(p.lo),
                num(p.hi),
                p.evaluations.to_string(),
            ]
        })
        .collect();
    out.write_csv("threshold.csv", &THRESHOLD_HEADER, &rows)?;
    let fits = if stars.len() >= 3 {
        let xs: Vec<f64> = stars.iter().map(|p| p.nu.min(p.mu)).collect();
        let ys: Vec<f64> = stars.iter().map(|p| p.amplitude_star).collect();
        vec![("threshold".to_string(), None, fit_scaling(&xs, &ys)?)]
    } else {
        Vec::new()
    };
    let exponents = write_fits(out, &fits)?;
    let sim_configs = if cfg.bisection.synthetic_gamma.is_some() {
        Vec::new()
    } else {
        cfg.pairs().into_iter().map(|(nu, mu)| cfg.sim_config(nu, mu)).collect()
    };
    Ok(CommandReport {
        summary: json!({
            "gamma": exponents.get("threshold"),
            "synthetic_gamma": cfg.bisection.synthetic_gamma,
        }),
        sim_configs,
        deferred: None,
    })
}

fn read_rows(path: &std::path::Path, header: &[&str]) -> Result<Vec<csv::StringRecord>, CliError> {
    let bad = |e: String| CliError::Config(format!("{}: {e}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(format!("{e}; run `simulate` first")))?;
    let h = r.headers().map_err(|e| bad(e.to_string()))?;
    if h.iter().ne(header.iter().copied()) {
        return Err(bad(format!("expected header {}", header.join(","))));
    }
    r.records().map(|rec| rec.map_err(|e| bad(e.to_string()))).collect()
}

fn parse_f(s: &str, path: &std::path::Path) -> Result<f64, CliError> {
    s.parse().map_err(|_| CliError::Config(format!("{}: bad number {s:?}", path.display())))
}

/// Final-time `E_k`, `H_k` (`k = -K..=K`) from a ledger CSV.
pub fn read_final_energies(path: &std::path::Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let rows = read_rows(path, &LEDGER_HEADER)?;
    let mut t_final = f64::NEG_INFINITY;
    let mut last: BTreeMap<(i64, String), f64> = BTreeMap::new();
    for rec in &rows {
        let t = parse_f(&rec[0], path)?;
        if t > t_final {
            t_final = t;
            last.clear();
        }
        if t == t_final {
            let k: i64 = rec[1].parse().map_err(|_| CliError::Config(format!("{}: bad k", path.display())))?;
            last.insert((k, rec[2].to_string()), parse_f(&rec[3], path)?);
        }
    }
    let kk = last.keys().map(|(k, _)| *k).max().unwrap_or(-1);
    if kk < 1 {
        return Err(CliError::Config(format!("{}: ledger has no nonzero modes", path.display())));
    }
    let pick = |name: &str| -> Result<Vec<f64>, CliError> {
        (-kk..=kk)
            .map(|k| {
                last.get(&(k.abs(), name.to_string()))
                    .copied()
                    .ok_or_else(|| CliError::Config(format!("{}: missing {name} for k = {}", path.display(), k.abs())))
            })
            .collect()
    };
    Ok((pick("E")?, pick("H")?))
}

pub fn read_init_norms(path: &std::path::Path) -> Result<InitNorms, CliError> {
    let rows = read_rows(path, &INIT_HEADER)?;
    let kk = rows.len() / 2;
    let mut init = InitNorms::zeros(kk);
    for (i, rec) in rows.iter().enumerate() {
        init.omega[i] = parse_f(&rec[1], path)?;
        init.theta[i] = parse_f(&rec[2], path)?;
    }
    Ok(init)
}

pub fn bootstrap(cfg: &Config, out: &mut OutputDir) -> Result<CommandReport, CliError> {
    let mut worst = BTreeMap::new();
    for (nu, mu) in cfg.pairs() {
        let name = run_tag(nu, mu);
        let (e, h) = read_final_energies(&out.path().join(format!("ledger_{name}.csv")))?;
        let init = read_init_norms(&out.path().join(format!("init_norms_{name}.csv")))?;
        let report = bootstrap_check(&e, &h, nu, mu, &init)?;
        let rows: Vec<Vec<String>> = report
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.k.to_string(),
                    r.family.name().to_string(),
                    u8::from(r.applies).to_string(),
                    num(r.lhs),
                    num(r.free_term),
                    num(r.scaled_term),
                    num(r.realized_c),
                ]
            })
            .collect();
        out.write_csv(&format!("bootstrap_{name}.csv"), &BOOTSTRAP_HEADER, &rows)?;
        let per_family: BTreeMap<&str, Option<f64>> = poiseuille::nonlinear::BootstrapFamily::ALL
            .iter()
            .map(|&f| (f.name(), report.worst(f)))
            .collect();
        worst.insert(name, per_family);
    }
    Ok(CommandReport {
        summary: json!({ "worst_constants": worst }),
        ..Default::default()
    })
}
