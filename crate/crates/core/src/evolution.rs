//! Linear evolution: semigroup norms, decay-rate fits, the Gearhart–Prüss
//! bound, and forced solves with space-time norm bookkeeping.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use nalgebra::DVector;

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, c, CMatrix};
use crate::operators::{accretivity_check, ModeOperator};
use crate::resolvent::{default_lambda_range, linspace, psi, DEFAULT_SAMPLES};
use crate::spectral::{apply_real, norm_sq, ChebyshevGrid, FieldMode, HelmholtzSolver, C64};

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DecayCurve {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub fitted_rate: f64,
}

/// `‖e^{-tA}‖` in the quadrature-weighted `L²` norm.
pub fn propagator_norm(op: &ModeOperator, t: f64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return invalid("t must be finite and nonnegative");
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    let b = op.weighted() * c(-t);
    Ok(linalg::spectral_norm(&linalg::expm(&b)))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GearhartPruss {
    pub pass: bool,
    /// `min_t (e^{-tΨ + π/2} - ‖e^{-tA}‖)`
    pub min_slack: f64,
    pub psi: f64,
}

/// Checks `‖e^{-tA}‖ ≤ e^{-tΨ(A) + π/2}` on every point of `t_grid`.
pub fn gearhart_pruss_check(op: &ModeOperator, t_grid: &[f64]) -> Result<GearhartPruss> {
    let acc = accretivity_check(op);
    if acc < -1e-10 {
        return Err(Error::PreconditionViolation(format!(
            "operator is not accretive (min Re numerical range {acc:e})"
        )));
    }
    let p = psi(op, default_lambda_range(op.k()), DEFAULT_SAMPLES)?;
    let mut min_slack = f64::INFINITY;
    for &t in t_grid {
        let bound = (-t * p + FRAC_PI_2).exp();
        min_slack = min_slack.min(bound - propagator_norm(op, t)?);
    }
    Ok(GearhartPruss {
        pass: min_slack >= 0.0,
        min_slack,
        psi: p,
    })
}

/// Least-squares slope of `ln y` against `t`.
fn log_linear_slope(ts: &[f64], ys: &[f64]) -> f64 {
    let m = ts.len() as f64;
    let ly: Vec<f64> = ys.iter().map(|y| y.max(f64::MIN_POSITIVE).ln()).collect();
    let mt = ts.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = ts.iter().zip(&ly).map(|(t, y)| (t - mt) * (y - my)).sum();
    let sxx: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
    sxy / sxx
}

/// Samples `‖e^{-tA}‖` on `samples` equispaced times in `[0, horizon]` and
/// fits the exponential rate over the second half of the window.
pub fn decay_rate(op: &ModeOperator, horizon: f64, samples: usize) -> Result<DecayCurve> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return invalid("horizon must be positive");
    }
    if samples < 2 {
        return invalid("at least two samples are required");
    }
    let times = linspace(0.0, horizon, samples);
    let b = op.weighted();
    let step = linalg::expm(&(b * c(-(times[1] - times[0]))));
    let mut power = CMatrix::identity(step.nrows(), step.ncols());
    let mut norms = Vec::with_capacity(samples);
    for j in 0..samples {
        if j > 0 {
            power = &step * &power;
        }
        norms.push(linalg::spectral_norm(&power).max(f64::MIN_POSITIVE));
    }
    let tail: Vec<usize> = (0..samples).filter(|&j| times[j] >= 0.5 * horizon).collect();
    if tail.len() < 4 {
        return invalid("fewer than four samples in the fitting window");
    }
    let ts: Vec<f64> = tail.iter().map(|&j| times[j]).collect();
    let ys: Vec<f64> = tail.iter().map(|&j| norms[j]).collect();
    let fitted_rate = -log_linear_slope(&ts, &ys);
    Ok(DecayCurve {
        times,
        norms,
        fitted_rate,
    })
}

/// Right-hand-side pieces of a forced linear problem, sampled in time.
///
/// Each component is a sequence of profiles aligned with `times`; an empty
/// sequence is identically zero and a single profile is constant in time.
/// Between samples the forcing is interpolated linearly.
#[derive(Debug, Clone, PartialEq)]
pub enum ForcingTerms {
    /// `-ik f₁ - ∂_y f₂ - f₃ - f₄`
    Vorticity {
        f1: Vec<FieldMode>,
        f2: Vec<FieldMode>,
        f3: Vec<FieldMode>,
        f4: Vec<FieldMode>,
    },
    /// `-ik g₁ - ∂_y g₂ - g₃`
    Temperature {
        g1: Vec<FieldMode>,
        g2: Vec<FieldMode>,
        g3: Vec<FieldMode>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForcingDecomposition {
    pub times: Vec<f64>,
    pub terms: ForcingTerms,
}

impl ForcingDecomposition {
    pub fn zero_vorticity() -> Self {
        Self {
            times: Vec::new(),
            terms: ForcingTerms::Vorticity {
                f1: Vec::new(),
                f2: Vec::new(),
                f3: Vec::new(),
                f4: Vec::new(),
            },
        }
    }

    pub fn zero_temperature() -> Self {
        Self {
            times: Vec::new(),
            terms: ForcingTerms::Temperature {
                g1: Vec::new(),
                g2: Vec::new(),
                g3: Vec::new(),
            },
        }
    }

    fn components(&self) -> Vec<&Vec<FieldMode>> {
        match &self.terms {
            ForcingTerms::Vorticity { f1, f2, f3, f4 } => vec![f1, f2, f3, f4],
            ForcingTerms::Temperature { g1, g2, g3 } => vec![g1, g2, g3],
        }
    }

    fn validate(&self, grid: &ChebyshevGrid) -> Result<()> {
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("forcing times must be strictly increasing");
        }
        for comp in self.components() {
            if comp.is_empty() {
                continue;
            }
            if comp.len() != 1 && comp.len() != self.times.len() {
                return invalid("forcing sequence length does not match its time grid");
            }
            if comp.iter().any(|f| f.len() != grid.len()) {
                return invalid("forcing profile does not match the grid");
            }
        }
        if let ForcingTerms::Vorticity { f3, .. } = &self.terms {
            let n = grid.n();
            if f3.iter().any(|f| f.values[0].norm() > 1e-12 || f.values[n].norm() > 1e-12) {
                return invalid("f3 must vanish at the walls");
            }
        }
        Ok(())
    }
}

/// Linear interpolation of a sampled sequence; `None` for the zero sequence.
fn sample_at(seq: &[FieldMode], times: &[f64], t: f64) -> Option<Vec<C64>> {
    match seq.len() {
        0 => None,
        1 => Some(seq[0].values.clone()),
        _ => {
            let j = times.partition_point(|&s| s <= t);
            if j == 0 {
                return Some(seq[0].values.clone());
            }
            if j >= times.len() {
                return Some(seq[seq.len() - 1].values.clone());
            }
            let a = (t - times[j - 1]) / (times[j] - times[j - 1]);
            Some(
                seq[j - 1]
                    .values
                    .iter()
                    .zip(&seq[j].values)
                    .map(|(x, y)| x * (1.0 - a) + y * a)
                    .collect(),
            )
        }
    }
}

/// Instantaneous squared norms of the forcing pieces, in the combinations
/// that appear on the right-hand side of the space-time estimates.
struct ForcingSample {
    rhs: Vec<C64>,
    /// `‖(f₁, f₂)‖²` (or `(g₁, g₂)`)
    f12: f64,
    /// `‖(∂_y, |k|) f₃‖²`
    grad_f3: f64,
    /// `‖f₄‖²` (or `‖g₃‖²` for temperature)
    last: f64,
}

fn forcing_sample(
    forcing: &ForcingDecomposition,
    grid: &ChebyshevGrid,
    k: i64,
    t: f64,
    scale: f64,
) -> ForcingSample {
    let len = grid.len();
    let kf = k as f64;
    let times = &forcing.times;
    let mut rhs = vec![c(0.0); len];
    let mut f12 = 0.0;
    let mut grad_f3 = 0.0;
    let mut last = 0.0;
    let comps = forcing.components();
    let ik = C64::new(0.0, kf);
    if let Some(f1) = sample_at(comps[0], times, t) {
        for (r, v) in rhs.iter_mut().zip(&f1) {
            *r -= ik * v;
        }
        f12 += norm_sq(&f1, grid);
    }
    if let Some(f2) = sample_at(comps[1], times, t) {
        let d = apply_real(grid.d1(), &f2);
        for (r, v) in rhs.iter_mut().zip(&d) {
            *r -= v;
        }
        f12 += norm_sq(&f2, grid);
    }
    if let Some(f3) = sample_at(comps[2], times, t) {
        for (r, v) in rhs.iter_mut().zip(&f3) {
            *r -= v;
        }
        match &forcing.terms {
            ForcingTerms::Vorticity { .. } => {
                let d = apply_real(grid.d1(), &f3);
                grad_f3 = norm_sq(&d, grid) + kf * kf * norm_sq(&f3, grid);
            }
            ForcingTerms::Temperature { .. } => last = norm_sq(&f3, grid),
        }
    }
    if comps.len() > 3 {
        if let Some(f4) = sample_at(comps[3], times, t) {
            for (r, v) in rhs.iter_mut().zip(&f4) {
                *r -= v;
            }
            last = norm_sq(&f4, grid);
        }
    }
    let s2 = scale * scale;
    for r in rhs.iter_mut() {
        *r *= scale;
    }
    ForcingSample {
        rhs,
        f12: f12 * s2,
        grad_f3: grad_f3 * s2,
        last: last * s2,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    /// Raw space-time norms (not squared).
    pub accumulators: BTreeMap<String, f64>,
    /// Squared, weighted left-hand-side terms.
    pub lhs_terms: BTreeMap<String, f64>,
    /// Squared, weighted right-hand-side terms.
    pub rhs_terms: BTreeMap<String, f64>,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs` (0 when both vanish).
    pub realized_c: f64,
    pub final_state: FieldMode,
    pub steps: usize,
}

/// Integrates `(∂_t + A) x = forcing` on `[0, horizon]` with Crank–Nicolson
/// for `A` and the forcing evaluated at step midpoints, accumulating every
/// norm of the corresponding space-time estimate.
pub fn forced_linear_solve(
    op: &ModeOperator,
    forcing: &ForcingDecomposition,
    init: &FieldMode,
    dt: f64,
    horizon: f64,
) -> Result<NormReport> {
    forced_solve_impl(op, forcing, init, dt, horizon, 0.0)
}

/// Same as [`forced_linear_solve`] for `z = e^{γt} x`: state and forcing
/// carry the exponential weight.
pub fn forced_linear_solve_weighted(
    op: &ModeOperator,
    forcing: &ForcingDecomposition,
    init: &FieldMode,
    dt: f64,
    horizon: f64,
    gamma: f64,
) -> Result<NormReport> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return invalid("gamma must be finite and nonnegative");
    }
    forced_solve_impl(op, forcing, init, dt, horizon, gamma)
}

/// `γ = c ν^{1/2}` with `c` half the fitted decay rate over `ν^{1/2}`.
pub fn weight_exponent(curve: &DecayCurve) -> f64 {
    0.5 * curve.fitted_rate.max(0.0)
}

struct StateNorms {
    l2: f64,
    grad: f64,
    vel: f64,
}

fn state_norms(x: &[C64], grid: &ChebyshevGrid, k: i64, hinv: Option<&HelmholtzSolver>) -> StateNorms {
    let kf = k as f64;
    let l2 = norm_sq(x, grid);
    let dx = apply_real(grid.d1(), x);
    let grad = norm_sq(&dx, grid) + kf * kf * l2;
    let vel = hinv.map_or(0.0, |h| {
        let phi = h.solve(x);
        let dphi = apply_real(grid.d1(), &phi);
        norm_sq(&dphi, grid) + kf * kf * norm_sq(&phi, grid)
    });
    StateNorms { l2, grad, vel }
}

fn forced_solve_impl(
    op: &ModeOperator,
    forcing: &ForcingDecomposition,
    init: &FieldMode,
    dt: f64,
    horizon: f64,
    gamma: f64,
) -> Result<NormReport> {
    let grid = op.grid().clone();
    let n = grid.n();
    if init.len() != grid.len() {
        return invalid("initial profile does not match the grid");
    }
    if !(dt > 0.0 && dt.is_finite() && horizon >= 0.0 && horizon.is_finite()) {
        return invalid("dt must be positive and horizon nonnegative");
    }
    forcing.validate(&grid)?;
    let k = op.k();
    let kf = k as f64;
    let ka = kf.abs();
    let coeff = op.coeff();
    let vorticity = matches!(forcing.terms, ForcingTerms::Vorticity { .. });
    let hinv = if vorticity && k != 0 {
        Some(HelmholtzSolver::new(&grid, k)?)
    } else {
        None
    };

    let steps = (horizon / dt).ceil().max(0.0) as usize;
    let h = if steps == 0 { 0.0 } else { horizon / steps as f64 };
    let m = n - 1;
    let mut a = op.interior();
    for i in 0..m {
        a[(i, i)] -= c(gamma);
    }
    let id = CMatrix::identity(m, m);
    let lhs = (&id + &a * c(0.5 * h)).lu();
    let rhs_op = &id - &a * c(0.5 * h);

    let mut x: Vec<C64> = init.values.clone();
    x[0] = c(0.0);
    x[n] = c(0.0);

    let mut linf: f64 = 0.0;
    let mut int_l2 = 0.0;
    let mut int_grad = 0.0;
    let mut int_vel = 0.0;
    let mut int_f12 = 0.0;
    let mut int_grad_f3 = 0.0;
    let mut int_last = 0.0;

    let s0 = state_norms(&x, &grid, k, hinv.as_ref());
    linf = linf.max(s0.l2.sqrt());
    let f0 = forcing_sample(forcing, &grid, k, 0.0, 1.0);
    let mut prev = (s0, f0.f12, f0.grad_f3, f0.last);

    for step in 0..steps {
        let t0 = step as f64 * h;
        let t1 = t0 + h;
        let mid = forcing_sample(forcing, &grid, k, t0 + 0.5 * h, (gamma * (t0 + 0.5 * h)).exp());
        let xi = DVector::from_column_slice(&x[1..n]);
        let fi = DVector::from_column_slice(&mid.rhs[1..n]);
        let b = &rhs_op * xi + fi * c(h);
        let next = lhs
            .solve(&b)
            .ok_or_else(|| Error::NumericalSingularity("Crank–Nicolson matrix is singular".into()))?;
        x[1..n].copy_from_slice(next.as_slice());
        if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Diverged { time: t1 });
        }
        let s1 = state_norms(&x, &grid, k, hinv.as_ref());
        let f1 = forcing_sample(forcing, &grid, k, t1, (gamma * t1).exp());
        linf = linf.max(s1.l2.sqrt());
        int_l2 += 0.5 * h * (prev.0.l2 + s1.l2);
        int_grad += 0.5 * h * (prev.0.grad + s1.grad);
        int_vel += 0.5 * h * (prev.0.vel + s1.vel);
        int_f12 += 0.5 * h * (prev.1 + f1.f12);
        int_grad_f3 += 0.5 * h * (prev.2 + f1.grad_f3);
        int_last += 0.5 * h * (prev.3 + f1.last);
        prev = (s1, f1.f12, f1.grad_f3, f1.last);
    }

    let mut accumulators = BTreeMap::new();
    let mut lhs_terms = BTreeMap::new();
    let mut rhs_terms = BTreeMap::new();
    let min_weight = if k == 0 {
        f64::INFINITY
    } else {
        (coeff * ka).powf(-0.5).min(1.0 / (coeff * ka * ka))
    };
    accumulators.insert("x_Linf_L2".to_string(), linf);
    accumulators.insert("x_L2_L2".to_string(), int_l2.sqrt());
    accumulators.insert("grad_x_L2_L2".to_string(), int_grad.sqrt());
    if vorticity {
        accumulators.insert("u_L2_L2".to_string(), int_vel.sqrt());
        let w0 = x_init_interior(init, n);
        let d2 = apply_real(grid.d2(), &w0);
        let lap: Vec<C64> = d2.iter().zip(&w0).map(|(a, b)| a - b * (kf * kf)).collect();
        let delta = norm_sq(&lap, &grid);
        lhs_terms.insert("w_Linf_L2_sq".to_string(), linf * linf);
        lhs_terms.insert("nu_grad_w_sq".to_string(), coeff * int_grad);
        lhs_terms.insert("nu_k_half_w_sq".to_string(), (coeff * ka).sqrt() * int_l2);
        lhs_terms.insert("k_u_sq".to_string(), ka * int_vel);
        rhs_terms.insert("init_delta_k_sq".to_string(), delta);
        rhs_terms.insert("nu_inv_f12_sq".to_string(), int_f12 / coeff);
        rhs_terms.insert(
            "k_inv_grad_f3_sq".to_string(),
            if k == 0 { 0.0 } else { int_grad_f3 / ka },
        );
        rhs_terms.insert("min_weight_f4_sq".to_string(), weighted(min_weight, int_last));
    } else {
        lhs_terms.insert("theta_Linf_L2_sq".to_string(), linf * linf);
        lhs_terms.insert("mu_k_half_theta_sq".to_string(), (coeff * ka).sqrt() * int_l2);
        lhs_terms.insert("mu_grad_theta_sq".to_string(), coeff * int_grad);
        rhs_terms.insert("init_sq".to_string(), norm_sq(&init.values, &grid));
        rhs_terms.insert("mu_inv_g12_sq".to_string(), int_f12 / coeff);
        rhs_terms.insert("min_weight_g3_sq".to_string(), weighted(min_weight, int_last));
    }
    let lhs_sum: f64 = lhs_terms.values().sum();
    let rhs_sum: f64 = rhs_terms.values().sum();
    let realized_c = if lhs_sum == 0.0 { 0.0 } else { lhs_sum / rhs_sum };
    if !lhs_sum.is_finite() {
        return Err(Error::Diverged { time: horizon });
    }
    Ok(NormReport {
        accumulators,
        lhs_terms,
        rhs_terms,
        lhs: lhs_sum,
        rhs: rhs_sum,
        realized_c,
        final_state: FieldMode::new(init.k, x),
        steps,
    })
}

fn weighted(w: f64, v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        w * v
    }
}

fn x_init_interior(init: &FieldMode, n: usize) -> Vec<C64> {
    let mut v = init.values.clone();
    v[0] = c(0.0);
    v[n] = c(0.0);
    v
}
