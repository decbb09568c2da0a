//! Initial data normalized by discrete Sobolev proxies.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::terms::velocities;
use super::{PerturbationState, SimConfig};
use crate::error::{invalid, Result};
use crate::spectral::{apply_real, norm_sq, ChebyshevGrid, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitialShape {
    /// Only `k = ±k` populated, in both ω and θ.
    SingleMode { k: i64 },
    /// Random smooth profiles on the band `0 ≤ |k| ≤ min(K, 4)`.
    RandomBand,
}

const BAND: i64 = 4;
const PROFILES: usize = 4;

fn sine(m: usize, y: f64) -> f64 {
    (m as f64 * PI * (y + 1.0) / 2.0).sin()
}

/// Velocity proxy for `‖u‖_{H^s}`:
/// `(Σ_k (1 + k²)^s ‖û_k‖² + ‖Δ_k ω̂_k‖²)^{1/2}`.
pub fn velocity_proxy(state: &PerturbationState, grid: &ChebyshevGrid, s: f64) -> Result<f64> {
    let (u1, u2) = velocities(state, grid)?;
    let kk = state.k_max() as i64;
    let mut acc = 0.0;
    for k in -kk..=kk {
        let i = (k + kk) as usize;
        let kf = k as f64;
        let u = norm_sq(&u1[i].values, grid) + norm_sq(&u2[i].values, grid);
        let w = &state.omega(k).values;
        let d2 = apply_real(grid.d2(), w);
        let lap: Vec<C64> = d2.iter().zip(w).map(|(a, b)| a - b * (kf * kf)).collect();
        acc += (1.0 + kf * kf).powf(s) * u + norm_sq(&lap, grid);
    }
    Ok(acc.sqrt())
}

/// Temperature proxy for `‖θ‖_{H¹} + ‖|D_x|^{1/8} θ‖_{H¹}`.
pub fn temperature_proxy(state: &PerturbationState, grid: &ChebyshevGrid) -> f64 {
    let kk = state.k_max() as i64;
    let mut plain = 0.0;
    let mut frac = 0.0;
    for k in -kk..=kk {
        let kf = k as f64;
        let th = &state.theta(k).values;
        let d = apply_real(grid.d1(), th);
        let h = (1.0 + kf * kf) * norm_sq(th, grid) + norm_sq(&d, grid);
        plain += h;
        frac += kf.abs().powf(0.25) * h;
    }
    plain.sqrt() + frac.sqrt()
}

fn raw_shape(shape: InitialShape, k_max: usize, grid: &ChebyshevGrid, seed: u64) -> Result<PerturbationState> {
    let mut state = PerturbationState::zeros(k_max, grid);
    let y = grid.nodes();
    let n = grid.n();
    let walls = |mut v: Vec<C64>| {
        v[0] = C64::new(0.0, 0.0);
        v[n] = C64::new(0.0, 0.0);
        v
    };
    match shape {
        InitialShape::SingleMode { k } => {
            if k < 1 || k as usize > k_max {
                return invalid(format!("single mode {k} outside 1..={k_max}"));
            }
            let w = y.iter().map(|&y| C64::new(sine(1, y) + 0.3 * sine(2, y), 0.0)).collect();
            let t = y
                .iter()
                .map(|&y| C64::new((1.0 - y * y) * (1.0 + 0.5 * y), 0.0))
                .collect();
            state.set_omega(k, walls(w));
            state.set_theta(k, walls(t));
        }
        InitialShape::RandomBand => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let band = BAND.min(k_max as i64);
            let mut draw = |k: i64| -> Vec<C64> {
                let coeffs: Vec<C64> = (1..=PROFILES)
                    .map(|m| {
                        let decay = 1.0 / (m * m) as f64;
                        let re = rng.random_range(-1.0..1.0) * decay;
                        let im = if k == 0 { 0.0 } else { rng.random_range(-1.0..1.0) * decay };
                        C64::new(re, im)
                    })
                    .collect();
                y.iter()
                    .map(|&y| {
                        coeffs
                            .iter()
                            .enumerate()
                            .map(|(m, c)| c * sine(m + 1, y))
                            .sum()
                    })
                    .collect()
            };
            for k in 0..=band {
                let w = draw(k);
                let t = draw(k);
                state.set_omega(k, walls(w));
                state.set_theta(k, walls(t));
            }
        }
    }
    Ok(state)
}

fn scale_fields(state: &mut PerturbationState, omega_factor: f64, theta_factor: f64) {
    let kk = state.k_max() as i64;
    for k in 0..=kk {
        let w = state.omega(k).values.iter().map(|v| v * omega_factor).collect();
        let t = state.theta(k).values.iter().map(|v| v * theta_factor).collect();
        state.set_omega(k, w);
        state.set_theta(k, t);
    }
}

/// Initial data with velocity proxy `c₀ min(μ,ν)^{2/3}` and temperature
/// proxy `c₁ min(μ,ν)^{31/24}`.
pub fn make_initial_data(
    config: &SimConfig,
    shape: InitialShape,
    grid: &ChebyshevGrid,
) -> Result<PerturbationState> {
    let m = config.min_coeff();
    make_initial_data_scaled(
        config,
        shape,
        grid,
        config.c0 * m.powf(2.0 / 3.0),
        config.c1 * m.powf(31.0 / 24.0),
    )
}

/// Initial data with explicitly prescribed proxy amplitudes.
pub fn make_initial_data_scaled(
    config: &SimConfig,
    shape: InitialShape,
    grid: &ChebyshevGrid,
    velocity_amplitude: f64,
    temperature_amplitude: f64,
) -> Result<PerturbationState> {
    config.validate()?;
    if grid.n() != config.n {
        return invalid("grid degree does not match the configuration");
    }
    if !(velocity_amplitude >= 0.0 && temperature_amplitude >= 0.0) {
        return invalid("amplitudes must be nonnegative");
    }
    let mut state = raw_shape(shape, config.k_max, grid, config.seed)?;
    let pu = velocity_proxy(&state, grid, config.sobolev_s)?;
    let pt = temperature_proxy(&state, grid);
    let fw = if velocity_amplitude == 0.0 { 0.0 } else { velocity_amplitude / pu };
    let ft = if temperature_amplitude == 0.0 { 0.0 } else { temperature_amplitude / pt };
    scale_fields(&mut state, fw, ft);
    Ok(state)
}
