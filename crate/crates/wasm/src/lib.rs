//! wasm-bindgen front end for the static demo page in `www/`.
//!
//! Each export returns a [`Curve`]; the plain `*_curve` functions behind them
//! are usable (and tested) natively.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use poiseuille::evolution::propagator_norm;
use poiseuille::operators::{assemble_h, assemble_l, ModeOperator};
use poiseuille::resolvent::{default_lambda_range, fit_scaling, linspace, psi, resolvent_sweep as sweep, DEFAULT_SAMPLES};
use poiseuille::spectral::build_grid;
use poiseuille::Result as CoreResult;
use wasm_bindgen::prelude::*;

/// Sampled curve plus an optional reference bound and one scalar.
#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    x: Vec<f64>,
    y: Vec<f64>,
    bound: Vec<f64>,
    scalar: f64,
}

#[wasm_bindgen]
impl Curve {
    #[wasm_bindgen(getter)]
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn y(&self) -> Vec<f64> {
        self.y.clone()
    }

    /// Empty when the curve has no reference bound.
    #[wasm_bindgen(getter)]
    pub fn bound(&self) -> Vec<f64> {
        self.bound.clone()
    }

    /// Peak λ, Ψ or fitted exponent, depending on the export.
    #[wasm_bindgen(getter)]
    pub fn scalar(&self) -> f64 {
        self.scalar
    }
}

fn operator(orr_sommerfeld: bool, coeff: f64, k: i64, n: usize) -> CoreResult<ModeOperator> {
    let grid = Arc::new(build_grid(n)?);
    if orr_sommerfeld {
        assemble_l(coeff, k, &grid)
    } else {
        assemble_h(coeff, k, &grid)
    }
}

/// `λ ↦ ‖(A - ikλ)⁻¹‖` on the default window.
pub fn resolvent_curve(orr_sommerfeld: bool, coeff: f64, k: i64, n: usize, samples: usize) -> CoreResult<Curve> {
    let op = operator(orr_sommerfeld, coeff, k, n)?;
    let [lo, hi] = default_lambda_range(k);
    let profile = sweep(&op, &linspace(lo, hi, samples))?;
    let scalar = profile.peak().0;
    Ok(Curve {
        x: profile.lambdas,
        y: profile.norms,
        bound: Vec::new(),
        scalar,
    })
}

/// `‖e^{-tA}‖` against `e^{-tΨ + π/2}`.
pub fn semigroup_curve(
    orr_sommerfeld: bool,
    coeff: f64,
    k: i64,
    n: usize,
    horizon: f64,
    samples: usize,
) -> CoreResult<Curve> {
    let op = operator(orr_sommerfeld, coeff, k, n)?;
    let p = psi(&op, default_lambda_range(k), DEFAULT_SAMPLES)?;
    let x = linspace(0.0, horizon, samples);
    let y = x.iter().map(|&t| propagator_norm(&op, t)).collect::<CoreResult<Vec<_>>>()?;
    let bound = x.iter().map(|t| (-t * p + FRAC_PI_2).exp()).collect();
    Ok(Curve { x, y, bound, scalar: p })
}

/// Ψ of the advection-diffusion operator over log-spaced `μ`, with the
/// fitted exponent.
pub fn psi_scaling_curve(k: i64, n: usize, log10_mu_min: f64, log10_mu_max: f64, points: usize) -> CoreResult<Curve> {
    let grid = Arc::new(build_grid(n)?);
    let x: Vec<f64> = linspace(log10_mu_min, log10_mu_max, points)
        .into_iter()
        .map(|e| 10f64.powf(e))
        .collect();
    let y = x
        .iter()
        .map(|&mu| psi(&assemble_h(mu, k, &grid)?, default_lambda_range(k), DEFAULT_SAMPLES))
        .collect::<CoreResult<Vec<_>>>()?;
    let scalar = fit_scaling(&x, &y)?.exponent;
    let bound = x.iter().map(|mu| (mu * k.unsigned_abs() as f64).sqrt()).collect();
    Ok(Curve { x, y, bound, scalar })
}

fn js(e: poiseuille::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn resolvent_sweep(orr_sommerfeld: bool, coeff: f64, k: i32, n: usize, samples: usize) -> Result<Curve, JsError> {
    resolvent_curve(orr_sommerfeld, coeff, k.into(), n, samples).map_err(js)
}

#[wasm_bindgen]
pub fn semigroup(
    orr_sommerfeld: bool,
    coeff: f64,
    k: i32,
    n: usize,
    horizon: f64,
    samples: usize,
) -> Result<Curve, JsError> {
    semigroup_curve(orr_sommerfeld, coeff, k.into(), n, horizon, samples).map_err(js)
}

#[wasm_bindgen]
pub fn psi_scaling(k: i32, n: usize, log10_mu_min: f64, log10_mu_max: f64, points: usize) -> Result<Curve, JsError> {
    psi_scaling_curve(k.into(), n, log10_mu_min, log10_mu_max, points).map_err(js)
}
