//! Running space-time norms behind the energy functionals `E_k`, `H_k`.

use super::terms::{velocities_with, VelocityMap};
use super::PerturbationState;
use crate::spectral::{apply_real, norm_sq, ChebyshevGrid, C64};

/// Per-mode accumulators for `k = 0..=K` (negative modes are mirrors).
///
/// Sup-in-time norms are running maxima; `L²`-in-time norms use the
/// trapezoid rule over the recorded instants.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EnergyLedger {
    pub nu: f64,
    pub mu: f64,
    pub k_max: usize,
    pub t: f64,
    pub omega_linf: Vec<f64>,
    /// `∫ ‖ω̂_k‖² dt`
    pub omega_l2_sq: Vec<f64>,
    /// `∫ ‖û_k‖² dt`
    pub velocity_l2_sq: Vec<f64>,
    pub theta_linf: Vec<f64>,
    pub theta_l2_sq: Vec<f64>,
    #[serde(skip)]
    last: Option<Instant>,
}

#[derive(Debug, Clone, PartialEq)]
struct Instant {
    t: f64,
    omega_sq: Vec<f64>,
    velocity_sq: Vec<f64>,
    theta_sq: Vec<f64>,
}

pub const E_COMPONENTS: [&str; 4] = ["omega_Linf_L2", "omega_L2L2_nu_k_quarter", "omega_L2L2_nu_k2_half", "velocity_L2L2_k_half"];
pub const H_COMPONENTS: [&str; 3] = ["theta_Linf_L2_k_eighth", "theta_L2L2_mu_quarter", "theta_L2L2_mu_half"];

impl EnergyLedger {
    pub fn new(nu: f64, mu: f64, k_max: usize) -> Self {
        let z = vec![0.0; k_max + 1];
        Self {
            nu,
            mu,
            k_max,
            t: 0.0,
            omega_linf: z.clone(),
            omega_l2_sq: z.clone(),
            velocity_l2_sq: z.clone(),
            theta_linf: z.clone(),
            theta_l2_sq: z,
            last: None,
        }
    }

    pub(crate) fn record(&mut self, state: &PerturbationState, grid: &ChebyshevGrid, maps: &[VelocityMap]) {
        let (u1, u2) = velocities_with(state, maps);
        let kk = self.k_max as i64;
        let mut now = Instant {
            t: state.t,
            omega_sq: Vec::with_capacity(self.k_max + 1),
            velocity_sq: Vec::with_capacity(self.k_max + 1),
            theta_sq: Vec::with_capacity(self.k_max + 1),
        };
        for k in 0..=kk {
            let i = (k + kk) as usize;
            now.omega_sq.push(norm_sq(&state.omega(k).values, grid));
            now.velocity_sq.push(norm_sq(&u1[i].values, grid) + norm_sq(&u2[i].values, grid));
            now.theta_sq.push(norm_sq(&state.theta(k).values, grid));
        }
        for k in 0..=self.k_max {
            self.omega_linf[k] = self.omega_linf[k].max(now.omega_sq[k].sqrt());
            self.theta_linf[k] = self.theta_linf[k].max(now.theta_sq[k].sqrt());
        }
        if let Some(prev) = &self.last {
            let h = now.t - prev.t;
            for k in 0..=self.k_max {
                self.omega_l2_sq[k] += 0.5 * h * (prev.omega_sq[k] + now.omega_sq[k]);
                self.velocity_l2_sq[k] += 0.5 * h * (prev.velocity_sq[k] + now.velocity_sq[k]);
                self.theta_l2_sq[k] += 0.5 * h * (prev.theta_sq[k] + now.theta_sq[k]);
            }
        }
        self.t = now.t;
        self.last = Some(now);
    }

    /// Weighted pieces of `E_k` (for `k = 0` only the first is nonzero).
    pub fn e_components(&self, k: i64) -> [f64; 4] {
        let i = k.unsigned_abs() as usize;
        if k == 0 {
            return [self.omega_linf[0], 0.0, 0.0, 0.0];
        }
        let ka = k.unsigned_abs() as f64;
        let w = self.omega_l2_sq[i].sqrt();
        [
            self.omega_linf[i],
            (self.nu * ka).powf(0.25) * w,
            (self.nu * ka * ka).sqrt() * w,
            ka.sqrt() * self.velocity_l2_sq[i].sqrt(),
        ]
    }

    pub fn h_components(&self, k: i64) -> [f64; 3] {
        let i = k.unsigned_abs() as usize;
        if k == 0 {
            return [self.theta_linf[0], 0.0, 0.0];
        }
        let ka = k.unsigned_abs() as f64;
        let th = self.theta_l2_sq[i].sqrt();
        [
            ka.powf(0.125) * self.theta_linf[i],
            self.mu.powf(0.25) * ka.powf(0.375) * th,
            self.mu.sqrt() * ka.powf(1.125) * th,
        ]
    }

    pub fn e(&self, k: i64) -> f64 {
        self.e_components(k).iter().sum()
    }

    pub fn h(&self, k: i64) -> f64 {
        self.h_components(k).iter().sum()
    }

    /// `E_k` for `k = -K..=K`.
    pub fn e_vec(&self) -> Vec<f64> {
        let kk = self.k_max as i64;
        (-kk..=kk).map(|k| self.e(k)).collect()
    }

    pub fn h_vec(&self) -> Vec<f64> {
        let kk = self.k_max as i64;
        (-kk..=kk).map(|k| self.h(k)).collect()
    }

    pub fn e_total(&self) -> f64 {
        self.e_vec().iter().sum()
    }

    pub fn h_total(&self) -> f64 {
        self.h_vec().iter().sum()
    }

    /// `(component name, value)` for mode `k`, in a fixed order.
    pub fn named_components(&self, k: i64) -> Vec<(&'static str, f64)> {
        let mut out: Vec<(&'static str, f64)> = E_COMPONENTS.iter().copied().zip(self.e_components(k)).collect();
        out.push(("E", self.e(k)));
        out.extend(H_COMPONENTS.iter().copied().zip(self.h_components(k)));
        out.push(("H", self.h(k)));
        out
    }
}

/// Initial-data norms entering the bootstrap inequalities, indexed
/// `k + K`: `‖Δ_k ω̂_0‖` (`‖ω̄_0‖` at `k = 0`) and `‖θ̂_0‖`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct InitNorms {
    pub k_max: usize,
    pub omega: Vec<f64>,
    pub theta: Vec<f64>,
}

impl InitNorms {
    pub fn zeros(k_max: usize) -> Self {
        Self {
            k_max,
            omega: vec![0.0; 2 * k_max + 1],
            theta: vec![0.0; 2 * k_max + 1],
        }
    }

    pub fn from_state(state: &PerturbationState, grid: &ChebyshevGrid) -> Self {
        let kk = state.k_max() as i64;
        let mut out = Self::zeros(state.k_max());
        for k in -kk..=kk {
            let i = (k + kk) as usize;
            let w = &state.omega(k).values;
            out.omega[i] = if k == 0 {
                norm_sq(w, grid).sqrt()
            } else {
                let kf = k as f64;
                let d2 = apply_real(grid.d2(), w);
                let lap: Vec<C64> = d2.iter().zip(w).map(|(a, b)| a - b * (kf * kf)).collect();
                norm_sq(&lap, grid).sqrt()
            };
            out.theta[i] = norm_sq(&state.theta(k).values, grid).sqrt();
        }
        out
    }
}
