//! Velocity recovery and the quadratic transport terms
//! `f¹ = (u¹ω)^`, `f² = (u²ω)^`, `g¹ = (u¹θ)^`, `g² = (u²θ)^`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::{Fft, FftPlanner};

use super::PerturbationState;
use crate::error::Result;
use crate::spectral::{apply_real, inner_product, ChebyshevGrid, FieldMode, HelmholtzSolver, C64};

/// Fourier-mode sequences indexed `k + K` for `k = -K..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearTerms {
    pub f1: Vec<FieldMode>,
    pub f2: Vec<FieldMode>,
    pub g1: Vec<FieldMode>,
    pub g2: Vec<FieldMode>,
}

impl NonlinearTerms {
    fn zeros(k_max: usize, len: usize) -> Self {
        let z = || -> Vec<FieldMode> {
            (-(k_max as i64)..=k_max as i64)
                .map(|k| FieldMode::new(k, vec![C64::new(0.0, 0.0); len]))
                .collect()
        };
        Self {
            f1: z(),
            f2: z(),
            g1: z(),
            g2: z(),
        }
    }

    /// Largest entrywise difference between two sets of terms.
    pub fn max_difference(&self, other: &Self) -> f64 {
        let pairs = [
            (&self.f1, &other.f1),
            (&self.f2, &other.f2),
            (&self.g1, &other.g1),
            (&self.g2, &other.g2),
        ];
        let mut worst: f64 = 0.0;
        for (a, b) in pairs {
            for (x, y) in a.iter().zip(b) {
                for (p, q) in x.values.iter().zip(&y.values) {
                    worst = worst.max((p - q).norm());
                }
            }
        }
        worst
    }
}

/// Dense per-mode maps `ω ↦ φ` (interior) and `ω ↦ ∂_y φ` (all nodes).
#[derive(Debug, Clone)]
pub(crate) struct VelocityMap {
    k: i64,
    phi: DMatrix<f64>,
    dphi: DMatrix<f64>,
}

impl VelocityMap {
    pub(crate) fn new(grid: &ChebyshevGrid, k: i64) -> Result<Self> {
        let n = grid.n();
        let phi = HelmholtzSolver::new(grid, k)?.interior_inverse();
        let d1_cols = grid.d1().columns(1, n - 1).into_owned();
        let dphi = &d1_cols * &phi;
        Ok(Self { k, phi, dphi })
    }

    /// `(û¹, û²) = (∂_y φ, -ik φ)` at all nodes.
    pub(crate) fn apply(&self, omega: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let m = self.phi.nrows();
        let w = &omega[1..=m];
        let mut u1 = vec![C64::new(0.0, 0.0); m + 2];
        let mut u2 = vec![C64::new(0.0, 0.0); m + 2];
        for (i, u) in u1.iter_mut().enumerate() {
            let row = self.dphi.row(i);
            *u = row.iter().zip(w).map(|(a, b)| b * *a).sum();
        }
        let mik = C64::new(0.0, -(self.k as f64));
        for i in 0..m {
            let row = self.phi.row(i);
            let phi: C64 = row.iter().zip(w).map(|(a, b)| b * *a).sum();
            u2[i + 1] = mik * phi;
        }
        (u1, u2)
    }
}

pub(crate) fn velocity_maps(grid: &ChebyshevGrid, k_max: usize) -> Result<Vec<VelocityMap>> {
    (0..=k_max as i64).map(|k| VelocityMap::new(grid, k)).collect()
}

pub(crate) fn velocities_with(
    state: &PerturbationState,
    maps: &[VelocityMap],
) -> (Vec<FieldMode>, Vec<FieldMode>) {
    let kk = state.k_max() as i64;
    let len = state.omega(0).len();
    let mut u1: Vec<FieldMode> = (-kk..=kk).map(|k| FieldMode::new(k, vec![C64::new(0.0, 0.0); len])).collect();
    let mut u2 = u1.clone();
    for k in 0..=kk {
        let (a, b) = maps[k as usize].apply(&state.omega(k).values);
        let ip = (k + kk) as usize;
        let im = (kk - k) as usize;
        u1[im].values = a.iter().map(|v| v.conj()).collect();
        u2[im].values = b.iter().map(|v| v.conj()).collect();
        u1[ip].values = a;
        u2[ip].values = b;
    }
    (u1, u2)
}

/// Velocity modes `û_k` for `k = -K..=K` (zero mode in the zero-flux gauge).
pub fn velocities(
    state: &PerturbationState,
    grid: &ChebyshevGrid,
) -> Result<(Vec<FieldMode>, Vec<FieldMode>)> {
    let maps = velocity_maps(grid, state.k_max())?;
    Ok(velocities_with(state, &maps))
}

/// FFT plan for products of fields truncated at `|k| ≤ K`, on `M ≥ 3K + 1`
/// physical points so that retained modes are alias-free.
pub(crate) struct ConvolutionPlan {
    k_max: usize,
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl ConvolutionPlan {
    pub(crate) fn new(k_max: usize) -> Self {
        let m = (3 * k_max + 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        Self {
            k_max,
            m,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        }
    }

    /// Physical values at `x_j = 2πj/M` of the mode sequence at node `y`.
    fn to_physical(&self, modes: &[FieldMode], y: usize, buf: &mut [C64], scratch: &mut [C64]) -> Vec<f64> {
        let kk = self.k_max as i64;
        buf.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for k in -kk..=kk {
            let slot = k.rem_euclid(self.m as i64) as usize;
            buf[slot] = modes[(k + kk) as usize].values[y];
        }
        self.inverse.process_with_scratch(buf, scratch);
        buf.iter().map(|v| v.re).collect()
    }

    fn to_modes(&self, phys: &[f64], buf: &mut [C64], scratch: &mut [C64]) {
        for (b, p) in buf.iter_mut().zip(phys) {
            *b = C64::new(*p, 0.0);
        }
        self.forward.process_with_scratch(buf, scratch);
        let inv_m = 1.0 / self.m as f64;
        buf.iter_mut().for_each(|v| *v *= inv_m);
    }

    pub(crate) fn products(
        &self,
        u1: &[FieldMode],
        u2: &[FieldMode],
        omega: &[FieldMode],
        theta: &[FieldMode],
    ) -> NonlinearTerms {
        let kk = self.k_max as i64;
        let len = omega[0].len();
        let mut out = NonlinearTerms::zeros(self.k_max, len);
        let mut buf = vec![C64::new(0.0, 0.0); self.m];
        let mut scratch = vec![
            C64::new(0.0, 0.0);
            self.forward
                .get_inplace_scratch_len()
                .max(self.inverse.get_inplace_scratch_len())
        ];
        for y in 0..len {
            let pu1 = self.to_physical(u1, y, &mut buf, &mut scratch);
            let pu2 = self.to_physical(u2, y, &mut buf, &mut scratch);
            let pw = self.to_physical(omega, y, &mut buf, &mut scratch);
            let pt = self.to_physical(theta, y, &mut buf, &mut scratch);
            let targets: [(&[f64], &[f64], &mut Vec<FieldMode>); 4] = [
                (&pu1, &pw, &mut out.f1),
                (&pu2, &pw, &mut out.f2),
                (&pu1, &pt, &mut out.g1),
                (&pu2, &pt, &mut out.g2),
            ];
            for (a, b, dst) in targets {
                let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
                self.to_modes(&prod, &mut buf, &mut scratch);
                for k in 0..=kk {
                    let v = buf[k as usize];
                    let v = if k == 0 { C64::new(v.re, 0.0) } else { v };
                    dst[(k + kk) as usize].values[y] = v;
                    dst[(kk - k) as usize].values[y] = v.conj();
                }
            }
        }
        out
    }
}

/// Transport terms computed pseudospectrally with 3/2-rule dealiasing.
pub fn nonlinear_terms(state: &PerturbationState, grid: &ChebyshevGrid) -> Result<NonlinearTerms> {
    let (u1, u2) = velocities(state, grid)?;
    let plan = ConvolutionPlan::new(state.k_max());
    Ok(plan.products(&u1, &u2, state.omega_modes(), state.theta_modes()))
}

/// Mode-by-mode convolution `Σ_l a_l b_{k-l}` over the truncated range.
pub fn direct_convolution(state: &PerturbationState, grid: &ChebyshevGrid) -> Result<NonlinearTerms> {
    let (u1, u2) = velocities(state, grid)?;
    let kk = state.k_max() as i64;
    let len = grid.len();
    let mut out = NonlinearTerms::zeros(state.k_max(), len);
    let conv = |a: &[FieldMode], b: &[FieldMode], dst: &mut Vec<FieldMode>| {
        for k in -kk..=kk {
            let mut acc = vec![C64::new(0.0, 0.0); len];
            for l in -kk..=kk {
                let m = k - l;
                if m.abs() > kk {
                    continue;
                }
                let x = &a[(l + kk) as usize].values;
                let y = &b[(m + kk) as usize].values;
                for j in 0..len {
                    acc[j] += x[j] * y[j];
                }
            }
            dst[(k + kk) as usize].values = acc;
        }
    };
    conv(&u1, state.omega_modes(), &mut out.f1);
    conv(&u2, state.omega_modes(), &mut out.f2);
    conv(&u1, state.theta_modes(), &mut out.g1);
    conv(&u2, state.theta_modes(), &mut out.g2);
    Ok(out)
}

/// `|Re Σ_k ⟨(u·∇s)_k, ŝ_k⟩|` relative to `Σ_k ‖(u·∇s)_k‖ ‖ŝ_k‖`, maximized
/// over `s ∈ {ω, θ}`; zero for divergence-free transport up to truncation.
pub fn transport_skew_residual(state: &PerturbationState, grid: &ChebyshevGrid) -> Result<f64> {
    let terms = nonlinear_terms(state, grid)?;
    let kk = state.k_max() as i64;
    let mut worst: f64 = 0.0;
    for (p1, p2, field) in [
        (&terms.f1, &terms.f2, state.omega_modes()),
        (&terms.g1, &terms.g2, state.theta_modes()),
    ] {
        let mut sum = C64::new(0.0, 0.0);
        let mut scale = 0.0;
        for k in -kk..=kk {
            let i = (k + kk) as usize;
            let d = apply_real(grid.d1(), &p2[i].values);
            let adv: Vec<C64> = p1[i]
                .values
                .iter()
                .zip(&d)
                .map(|(a, b)| C64::new(0.0, k as f64) * a + b)
                .collect();
            let adv = FieldMode::new(k, adv);
            sum += inner_product(&adv, &field[i], grid)?;
            scale += crate::spectral::l2_norm(&adv.values, grid)
                * crate::spectral::l2_norm(&field[i].values, grid);
        }
        if scale > 0.0 {
            worst = worst.max(sum.re.abs() / scale);
        }
    }
    Ok(worst)
}
