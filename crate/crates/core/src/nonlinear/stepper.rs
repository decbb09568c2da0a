//! Exponential time differencing (second order, multistep) for the
//! truncated system. The per-mode linear operators are integrated exactly;
//! buoyancy and transport are extrapolated.
//!
//! ```text
//! x_{n+1} = e^{-hA} x_n + h φ₁(-hA) N_n + h φ₂(-hA) (N_n - N_{n-1})
//! ```
//!
//! with exponential Euler for the first step.

use std::sync::Arc;

use nalgebra::DVector;

use super::ledger::{EnergyLedger, InitNorms};
use super::terms::{velocities_with, velocity_maps, ConvolutionPlan, VelocityMap};
use super::{PerturbationState, SimConfig};
use crate::error::{invalid, Error, Result};
use crate::linalg::{c, exp_phi, CMatrix};
use crate::operators::interior_matrix;
use crate::par::par_map;
use crate::spectral::{apply_real, build_grid, ChebyshevGrid, FieldMode, C64};

#[derive(Debug, Clone)]
struct Etd {
    exp: CMatrix,
    h_phi1: CMatrix,
    h_phi2: CMatrix,
}

impl Etd {
    fn new(a: &CMatrix, h: f64) -> Self {
        let ep = exp_phi(&(a * c(-h)));
        Self {
            exp: ep.exp,
            h_phi1: ep.phi1 * c(h),
            h_phi2: ep.phi2 * c(h),
        }
    }

    fn advance(&self, x: &[C64], n: &[C64], prev: Option<&[C64]>) -> Vec<C64> {
        let xv = DVector::from_column_slice(x);
        let nv = DVector::from_column_slice(n);
        let mut out = &self.exp * xv + &self.h_phi1 * &nv;
        if let Some(p) = prev {
            let diff = nv - DVector::from_column_slice(p);
            out += &self.h_phi2 * diff;
        }
        out.as_slice().to_vec()
    }
}

#[derive(Debug, Clone)]
struct ModeCache {
    omega: Etd,
    theta: Etd,
}

/// Precomputed per-mode propagators, velocity maps and FFT plans; reusable
/// across runs sharing `(ν, μ, K, n, dt)`.
pub struct Stepper {
    config: SimConfig,
    grid: Arc<ChebyshevGrid>,
    modes: Vec<ModeCache>,
    maps: Vec<VelocityMap>,
    plan: ConvolutionPlan,
    spacing: Vec<f64>,
}

impl std::fmt::Debug for Stepper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stepper").field("config", &self.config).finish_non_exhaustive()
    }
}

/// Interior right-hand sides per mode `k = 0..=K`.
type ModeForcing = Vec<(Vec<C64>, Vec<C64>)>;

impl Stepper {
    pub fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        Self::with_grid(config, Arc::new(build_grid(config.n)?))
    }

    pub fn with_grid(config: &SimConfig, grid: Arc<ChebyshevGrid>) -> Result<Self> {
        config.validate()?;
        if grid.n() != config.n {
            return invalid("grid degree does not match the configuration");
        }
        let ks: Vec<i64> = (0..=config.k_max as i64).collect();
        let modes = par_map(&ks, |&k| -> Result<ModeCache> {
            let lw = interior_matrix(&grid, config.nu, k, true)?;
            let lt = interior_matrix(&grid, config.mu, k, false)?;
            Ok(ModeCache {
                omega: Etd::new(&lw, config.dt),
                theta: Etd::new(&lt, config.dt),
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config: config.clone(),
            maps: velocity_maps(&grid, config.k_max)?,
            plan: ConvolutionPlan::new(config.k_max),
            spacing: grid.local_spacing(),
            grid,
            modes,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn grid(&self) -> &Arc<ChebyshevGrid> {
        &self.grid
    }

    pub(crate) fn maps(&self) -> &[VelocityMap] {
        &self.maps
    }

    fn check_state(&self, state: &PerturbationState) -> Result<()> {
        if state.k_max() != self.config.k_max || state.omega(0).len() != self.grid.len() {
            return invalid("state does not match the stepper's truncation or grid");
        }
        Ok(())
    }

    /// `dt · K` and `dt · (K max|u¹| + max_j |u²(y_j)| / Δy_j)`, with the
    /// physical maxima bounded by sums of modal magnitudes.
    fn cfl(&self, u1: &[FieldMode], u2: &[FieldMode]) -> (f64, f64) {
        let kk = self.config.k_max as f64;
        let len = self.grid.len();
        let mut max_u1: f64 = 0.0;
        let mut max_u2: f64 = 0.0;
        for j in 0..len {
            let a: f64 = u1.iter().map(|f| f.values[j].norm()).sum();
            let b: f64 = u2.iter().map(|f| f.values[j].norm()).sum();
            max_u1 = max_u1.max(a);
            max_u2 = max_u2.max(b / self.spacing[j]);
        }
        let dt = self.config.dt;
        (dt * kk, dt * (kk * max_u1 + max_u2))
    }

    fn forcing(&self, state: &PerturbationState) -> Result<ModeForcing> {
        let (u1, u2) = velocities_with(state, &self.maps);
        let (shear, advect) = self.cfl(&u1, &u2);
        if shear > 0.5 || advect > 0.5 {
            return Err(Error::CflViolation {
                time: state.t,
                detail: format!("shear number {shear:.3}, advection number {advect:.3} (limit 0.5)"),
            });
        }
        let terms = self.plan.products(&u1, &u2, state.omega_modes(), state.theta_modes());
        let kk = self.config.k_max as i64;
        let n = self.grid.n();
        let d1 = self.grid.d1();
        let mut out = Vec::with_capacity(kk as usize + 1);
        for k in 0..=kk {
            let i = (k + kk) as usize;
            let ik = C64::new(0.0, k as f64);
            let df2 = apply_real(d1, &terms.f2[i].values);
            let dg2 = apply_real(d1, &terms.g2[i].values);
            let th = &state.theta(k).values;
            let nw: Vec<C64> = (1..n)
                .map(|j| -ik * th[j] - ik * terms.f1[i].values[j] - df2[j])
                .collect();
            let nt: Vec<C64> = (1..n).map(|j| -ik * terms.g1[i].values[j] - dg2[j]).collect();
            out.push((nw, nt));
        }
        Ok(out)
    }
}

/// A running simulation: state, multistep history and energy ledger.
pub struct Simulation<'a> {
    stepper: &'a Stepper,
    state: PerturbationState,
    prev: Option<ModeForcing>,
    ledger: EnergyLedger,
    steps: usize,
}

impl<'a> Simulation<'a> {
    pub fn new(stepper: &'a Stepper, initial: PerturbationState) -> Result<Self> {
        stepper.check_state(&initial)?;
        let cfg = stepper.config();
        let mut ledger = EnergyLedger::new(cfg.nu, cfg.mu, cfg.k_max);
        ledger.record(&initial, stepper.grid(), stepper.maps());
        Ok(Self {
            stepper,
            state: initial,
            prev: None,
            ledger,
            steps: 0,
        })
    }

    pub fn state(&self) -> &PerturbationState {
        &self.state
    }

    pub fn ledger(&self) -> &EnergyLedger {
        &self.ledger
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// One step of size `dt`.
    pub fn step(&mut self) -> Result<()> {
        let st = self.stepper;
        let forcing = st.forcing(&self.state)?;
        let n = st.grid.n();
        let h = st.config.dt;
        let t_new = self.state.t + h;
        for (k, (nw, nt)) in forcing.iter().enumerate() {
            let cache = &st.modes[k];
            let prev = self.prev.as_ref().map(|p| &p[k]);
            let kk = k as i64;
            let w = &self.state.omega(kk).values[1..n];
            let t = &self.state.theta(kk).values[1..n];
            let w_new = cache.omega.advance(w, nw, prev.map(|p| p.0.as_slice()));
            let t_new_vals = cache.theta.advance(t, nt, prev.map(|p| p.1.as_slice()));
            if w_new.iter().chain(&t_new_vals).any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::Diverged { time: t_new });
            }
            self.state.set_omega(kk, embed(w_new));
            self.state.set_theta(kk, embed(t_new_vals));
        }
        self.state.t = t_new;
        self.prev = Some(forcing);
        self.steps += 1;
        self.ledger.record(&self.state, st.grid(), st.maps());
        Ok(())
    }

    pub fn advance(&mut self, steps: usize) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }

    pub fn into_parts(self) -> (PerturbationState, EnergyLedger, usize) {
        (self.state, self.ledger, self.steps)
    }
}

fn embed(interior: Vec<C64>) -> Vec<C64> {
    let mut v = Vec::with_capacity(interior.len() + 2);
    v.push(C64::new(0.0, 0.0));
    v.extend(interior);
    v.push(C64::new(0.0, 0.0));
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Ledger snapshot period in steps (0 records only the endpoints).
    pub record_every: usize,
}

#[derive(Debug)]
pub struct RunOutput {
    pub state: PerturbationState,
    pub ledger: EnergyLedger,
    /// `Σ_k E_k` and `Σ_k H_k` of the initial instant alone.
    pub initial_e: f64,
    pub initial_h: f64,
    pub init_norms: InitNorms,
    pub steps: usize,
    /// Ledger snapshots including `t = 0` and the final instant.
    pub history: Vec<EnergyLedger>,
    /// Set when the run stopped early; the ledger is then partial.
    pub failure: Option<Error>,
}

/// Number of steps covering `horizon` with step `dt`.
pub fn step_count(config: &SimConfig) -> usize {
    ((config.horizon / config.dt).round() as usize).max(1)
}

/// Advances `initial` to the configured horizon.
pub fn run(stepper: &Stepper, initial: PerturbationState, options: RunOptions) -> Result<RunOutput> {
    let grid = stepper.grid().clone();
    let init_norms = InitNorms::from_state(&initial, &grid);
    let mut sim = Simulation::new(stepper, initial)?;
    let initial_e = sim.ledger().e_total();
    let initial_h = sim.ledger().h_total();
    let mut history = vec![sim.ledger().clone()];
    let total = step_count(stepper.config());
    let mut failure = None;
    for s in 1..=total {
        if let Err(e) = sim.step() {
            failure = Some(e);
            break;
        }
        if options.record_every > 0 && s % options.record_every == 0 && s != total {
            history.push(sim.ledger().clone());
        }
    }
    history.push(sim.ledger().clone());
    let (state, ledger, steps) = sim.into_parts();
    Ok(RunOutput {
        state,
        ledger,
        initial_e,
        initial_h,
        init_norms,
        steps,
        history,
        failure,
    })
}
