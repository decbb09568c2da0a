//! Nonlinear pseudospectral simulation of the perturbation system in
//! vorticity–temperature form, with the energy functionals and bootstrap
//! inequalities evaluated on the computed data.
//!
//! Fields are truncated to Fourier modes `|k| ≤ K` in `x` and Chebyshev
//! collocation in `y`. Only `k ≥ 0` is evolved; negative modes are the
//! complex conjugates.

mod bootstrap;
mod initial;
mod ledger;
mod stepper;
mod terms;

pub use bootstrap::{bootstrap_check, BootstrapFamily, BootstrapReport, BootstrapRow};
pub use initial::{
    make_initial_data, make_initial_data_scaled, temperature_proxy, velocity_proxy, InitialShape,
};
pub use ledger::{EnergyLedger, InitNorms};
pub use stepper::{run, step_count, RunOptions, RunOutput, Simulation, Stepper};
pub use terms::{direct_convolution, nonlinear_terms, transport_skew_residual, velocities, NonlinearTerms};

use crate::error::{invalid, Result};
use crate::spectral::{ChebyshevGrid, FieldMode, C64};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SimConfig {
    pub nu: f64,
    pub mu: f64,
    /// Fourier truncation `K`: modes `k = -K..=K`.
    pub k_max: usize,
    /// Chebyshev degree.
    pub n: usize,
    pub dt: f64,
    pub horizon: f64,
    pub c0: f64,
    pub c1: f64,
    pub seed: u64,
    pub sobolev_s: f64,
}

impl SimConfig {
    /// Desk-scale defaults: `n = 64`, `K = 16`, `dt = 0.4 / K`,
    /// horizon `10 ν^{-1/2}`.
    pub fn desk(nu: f64, mu: f64) -> Self {
        let k_max = 16;
        Self {
            nu,
            mu,
            k_max,
            n: 64,
            dt: auto_dt(k_max),
            horizon: default_horizon(nu),
            c0: 1e-3,
            c1: 1e-3,
            seed: 0,
            sobolev_s: 3.6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.mu > 0.0 && self.nu.is_finite() && self.mu.is_finite()) {
            return invalid("nu and mu must be positive");
        }
        if self.k_max < 1 {
            return invalid("K must be at least 1");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return invalid("dt must be positive");
        }
        if !(self.horizon > self.dt && self.horizon.is_finite()) {
            return invalid("horizon must exceed dt");
        }
        if self.n < 8 || self.n % 2 != 0 {
            return invalid("grid degree must be even and at least 8");
        }
        if !(self.c0 >= 0.0 && self.c1 >= 0.0) {
            return invalid("amplitude constants must be nonnegative");
        }
        Ok(())
    }

    /// `min(μ, ν)`
    pub fn min_coeff(&self) -> f64 {
        self.nu.min(self.mu)
    }
}

/// Step size satisfying the shear CFL bound `dt · K ≤ 0.5` with margin.
pub fn auto_dt(k_max: usize) -> f64 {
    0.4 / k_max.max(1) as f64
}

pub fn default_horizon(nu: f64) -> f64 {
    10.0 / nu.sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationState {
    k_max: usize,
    /// `omega[k + K]` for `k = -K..=K`.
    omega: Vec<FieldMode>,
    theta: Vec<FieldMode>,
    pub t: f64,
}

impl PerturbationState {
    pub fn zeros(k_max: usize, grid: &ChebyshevGrid) -> Self {
        let modes = || -> Vec<FieldMode> {
            (-(k_max as i64)..=k_max as i64)
                .map(|k| FieldMode::zeros(k, grid))
                .collect()
        };
        Self {
            k_max,
            omega: modes(),
            theta: modes(),
            t: 0.0,
        }
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    fn idx(&self, k: i64) -> usize {
        assert!(k.unsigned_abs() as usize <= self.k_max, "mode {k} outside truncation");
        (k + self.k_max as i64) as usize
    }

    pub fn omega(&self, k: i64) -> &FieldMode {
        &self.omega[self.idx(k)]
    }

    pub fn theta(&self, k: i64) -> &FieldMode {
        &self.theta[self.idx(k)]
    }

    /// Sets mode `k ≥ 0` and its conjugate partner.
    pub fn set_omega(&mut self, k: i64, values: Vec<C64>) {
        let i = self.idx(k);
        let j = self.idx(-k);
        self.omega[j].values = values.iter().map(|v| v.conj()).collect();
        self.omega[i].values = values;
        if k == 0 {
            self.omega[i].values.iter_mut().for_each(|v| v.im = 0.0);
        }
    }

    pub fn set_theta(&mut self, k: i64, values: Vec<C64>) {
        let i = self.idx(k);
        let j = self.idx(-k);
        self.theta[j].values = values.iter().map(|v| v.conj()).collect();
        self.theta[i].values = values;
        if k == 0 {
            self.theta[i].values.iter_mut().for_each(|v| v.im = 0.0);
        }
    }

    pub fn omega_modes(&self) -> &[FieldMode] {
        &self.omega
    }

    pub fn theta_modes(&self) -> &[FieldMode] {
        &self.theta
    }

    /// Largest `|ω̂_{-k} - conj(ω̂_k)|` (and the same for θ).
    pub fn reality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..=self.k_max as i64 {
            for (a, b) in [(self.omega(k), self.omega(-k)), (self.theta(k), self.theta(-k))] {
                for (x, y) in a.values.iter().zip(&b.values) {
                    worst = worst.max((x.conj() - y).norm());
                }
            }
        }
        worst
    }

    /// Largest wall value over all modes of ω and θ.
    pub fn boundary_defect(&self) -> f64 {
        self.omega
            .iter()
            .chain(&self.theta)
            .map(|f| f.values[0].norm().max(f.values[f.len() - 1].norm()))
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.omega
            .iter()
            .chain(&self.theta)
            .all(|f| f.values.iter().all(|v| v.norm() == 0.0))
    }

    /// Euclidean distance in the weighted `L²` norm summed over modes.
    pub fn distance(&self, other: &Self, grid: &ChebyshevGrid) -> f64 {
        let mut acc = 0.0;
        for (a, b) in self
            .omega
            .iter()
            .zip(&other.omega)
            .chain(self.theta.iter().zip(&other.theta))
        {
            let d: Vec<C64> = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
            acc += crate::spectral::norm_sq(&d, grid);
        }
        acc.sqrt()
    }

    pub fn norm(&self, grid: &ChebyshevGrid) -> f64 {
        self.distance(&Self::zeros(self.k_max, grid), grid)
    }
}
