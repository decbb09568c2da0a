//! Resolvent norms along the imaginary axis, the pseudospectral bound `Ψ`,
//! and best constants of the Orr–Sommerfeld resolvent estimates.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, c, CMatrix};
use crate::operators::{assemble_l, ModeOperator};
use crate::par::par_map;
use crate::spectral::{ChebyshevGrid, HelmholtzSolver, C64};

pub const DEFAULT_SAMPLES: usize = 201;

/// Default λ window `[-4|k|, 5|k|]`.
pub fn default_lambda_range(k: i64) -> [f64; 2] {
    let k = k.unsigned_abs().max(1) as f64;
    [-4.0 * k, 5.0 * k]
}

pub fn linspace(lo: f64, hi: f64, samples: usize) -> Vec<f64> {
    if samples == 1 {
        return vec![lo];
    }
    let h = (hi - lo) / (samples - 1) as f64;
    (0..samples).map(|i| lo + h * i as f64).collect()
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ResolventProfile {
    pub k: i64,
    pub coeff: f64,
    pub lambdas: Vec<f64>,
    pub norms: Vec<f64>,
}

impl ResolventProfile {
    /// Largest sampled norm and its λ.
    pub fn peak(&self) -> (f64, f64) {
        self.lambdas
            .iter()
            .zip(&self.norms)
            .fold((f64::NAN, 0.0), |acc, (&l, &v)| if v > acc.1 { (l, v) } else { acc })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub residual: f64,
}

fn sigma_min_shifted(b: &CMatrix, shift: C64) -> f64 {
    let mut m = b.clone();
    for i in 0..m.nrows() {
        m[(i, i)] -= shift;
    }
    linalg::sigma_min(&m)
}

fn checked_inverse_norm(sigma: f64, at: f64) -> Result<f64> {
    if sigma > 0.0 && sigma.is_finite() && (1.0 / sigma).is_finite() {
        Ok(1.0 / sigma)
    } else {
        Err(Error::NumericalSingularity(format!(
            "shifted operator is numerically singular at lambda = {at}"
        )))
    }
}

/// `‖(A - ikλ)⁻¹‖` in the quadrature-weighted `L²` norm.
pub fn resolvent_norm(op: &ModeOperator, lambda: f64) -> Result<f64> {
    if !lambda.is_finite() {
        return invalid("lambda must be finite");
    }
    let b = op.weighted();
    let s = sigma_min_shifted(&b, C64::new(0.0, op.k() as f64 * lambda));
    checked_inverse_norm(s, lambda)
}

/// Resolvent norms on a strictly increasing λ grid.
pub fn resolvent_sweep(op: &ModeOperator, lambdas: &[f64]) -> Result<ResolventProfile> {
    if lambdas.is_empty() {
        return invalid("empty lambda grid");
    }
    if lambdas.windows(2).any(|w| !(w[1] > w[0])) || lambdas.iter().any(|l| !l.is_finite()) {
        return invalid("lambda grid must be finite and strictly increasing");
    }
    let b = op.weighted();
    let k = op.k() as f64;
    let norms = par_map(lambdas, |&l| {
        checked_inverse_norm(sigma_min_shifted(&b, C64::new(0.0, k * l)), l)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(ResolventProfile {
        k: op.k(),
        coeff: op.coeff(),
        lambdas: lambdas.to_vec(),
        norms,
    })
}

/// Golden-section minimization of `f` on `[lo, hi]`.
pub(crate) fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Coarse scan refined by golden sections around the best grid point and
/// around the most promising `(center, radius)` seeds. Seeds catch narrow
/// dips that fall between grid points.
pub(crate) fn scan_min(f: impl Fn(f64) -> f64 + Sync, grid: &[f64], seeds: &[(f64, f64)]) -> (f64, f64) {
    let vals = par_map(grid, |&x| f(x));
    let (imin, &vmin) = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty grid");
    if grid.len() < 3 {
        return (grid[imin], vmin);
    }
    let (first, last) = (grid[0], grid[grid.len() - 1]);
    let tol = 1e-10 * (1.0 + first.abs().max(last.abs()));
    let mut brackets = vec![(grid[imin], vmin, grid[imin.saturating_sub(1)], grid[(imin + 1).min(grid.len() - 1)])];
    let inside: Vec<(f64, f64)> = seeds.iter().copied().filter(|&(c, _)| c >= first && c <= last).collect();
    let mut probed: Vec<(f64, f64, f64)> = par_map(&inside, |&(c, r)| (c, r, f(c)));
    probed.sort_by(|a, b| a.2.total_cmp(&b.2));
    for &(c, r, v) in probed.iter().take(SEED_REFINEMENTS) {
        let r = r.max(tol);
        brackets.push((c, v, (c - r).max(first), (c + r).min(last)));
    }
    let refined = par_map(&brackets, |&(x0, v0, lo, hi)| {
        let (x, v) = golden_min(&f, lo, hi, tol);
        if v < v0 {
            (x, v)
        } else {
            (x0, v0)
        }
    });
    refined
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least the grid bracket")
}

const SEED_REFINEMENTS: usize = 4;

/// Seeds at the eigenvalues of `b`, mapped to the λ variable by
/// `λ = Im(e) / scale`, with radius a few times the distance `Re(e)` to
/// the imaginary axis.
fn spectral_seeds(b: &CMatrix, scale: f64) -> Vec<(f64, f64)> {
    linalg::eigenvalues(b)
        .map(|ev| {
            ev.iter()
                .filter(|e| e.re.is_finite() && e.im.is_finite())
                .map(|e| (e.im / scale, 4.0 * e.re.abs() / scale.abs()))
                .collect()
        })
        .unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PsiResult {
    pub psi: f64,
    /// Minimizing λ (in the `iλ` scaling).
    pub lambda: f64,
}

/// `Ψ(A) = inf_λ σ_min(A - iλ)` over `lambda_range`.
pub fn psi(op: &ModeOperator, lambda_range: [f64; 2], samples: usize) -> Result<f64> {
    psi_detail(op, lambda_range, samples).map(|r| r.psi)
}

pub fn psi_detail(op: &ModeOperator, lambda_range: [f64; 2], samples: usize) -> Result<PsiResult> {
    let [lo, hi] = lambda_range;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() || samples == 0 {
        return invalid("lambda range is empty");
    }
    let b = op.weighted();
    let grid = linspace(lo, hi, samples.max(3));
    let seeds = spectral_seeds(&b, 1.0);
    let (lambda, psi) = scan_min(|l| sigma_min_shifted(&b, C64::new(0.0, l)), &grid, &seeds);
    Ok(PsiResult { psi, lambda })
}

/// `Ψ / ((coeff·|k|)^{1/2} + coeff·k²)`, the constant realized in the
/// lower bound for the advection–diffusion operator.
pub fn psi_bound_constant(psi: f64, coeff: f64, k: i64) -> f64 {
    let k = k.unsigned_abs() as f64;
    psi / ((coeff * k).sqrt() + coeff * k * k)
}

/// `sup_λ ‖(A - ikλ)⁻¹‖` with refinement around the coarse peak.
pub fn sup_resolvent(op: &ModeOperator, lambda_range: [f64; 2], samples: usize) -> Result<(f64, f64)> {
    let [lo, hi] = lambda_range;
    if !(lo < hi) || samples == 0 {
        return invalid("lambda range is empty");
    }
    let b = op.weighted();
    let k = op.k() as f64;
    let grid = linspace(lo, hi, samples.max(3));
    let seeds = spectral_seeds(&b, k);
    let (lambda, s) = scan_min(|l| sigma_min_shifted(&b, C64::new(0.0, k * l)), &grid, &seeds);
    Ok((lambda, checked_inverse_norm(s, lambda)?))
}

/// Least-squares power law `y ≈ prefactor · x^exponent` in log-log
/// coordinates.
pub fn fit_scaling(xs: &[f64], ys: &[f64]) -> Result<ScalingFit> {
    if xs.len() != ys.len() {
        return invalid("xs and ys differ in length");
    }
    if xs.len() < 3 {
        return invalid("at least three points are required");
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0 && v.is_finite())) {
        return invalid("all entries must be positive and finite");
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return invalid("xs must not all be equal");
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let log_pref = my - exponent * mx;
    let prefactor = log_pref.exp();
    let residual = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| ((y - log_pref - exponent * x).exp() - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(ScalingFit {
        exponent,
        prefactor,
        residual,
    })
}

pub const OS_BOUND_KEYS: [&str; 5] = ["w_L2", "w_grad", "u_L2", "w_from_Hm1", "u_from_Hm1"];

/// Per-λ ratios for the λ-dependent estimates, each normalized so that the
/// claimed inequality reads `ratio ≲ 1`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SecondBlockRatio {
    pub lambda: f64,
    pub u_l2: f64,
    pub w_grad: f64,
    pub w_l2: f64,
    pub w_from_hm1: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct OsBoundReport {
    pub nu: f64,
    pub k: i64,
    /// Best constants (sup over λ) keyed by [`OS_BOUND_KEYS`].
    pub constants: BTreeMap<String, f64>,
    /// λ at which each constant is attained.
    pub argmax: BTreeMap<String, f64>,
    pub second_block: Vec<SecondBlockRatio>,
}

/// Weighted-coordinate output maps.
struct OutputMaps {
    /// `w ↦ (∂_y w, |k| w)`
    grad: CMatrix,
    /// `w ↦ (∂_y φ, |k| φ)`, `φ = (∂_y² - k²)⁻¹ w`
    vel: CMatrix,
    /// `M^{-1/2}` where `F* M F = ‖F‖²_{H_k^{-1}}`
    hm1: CMatrix,
}

fn output_maps(grid: &ChebyshevGrid, k: i64) -> Result<OutputMaps> {
    let n = grid.n();
    let m = n - 1;
    let kabs = k.unsigned_abs() as f64;
    let w = grid.weights();
    let s_full: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let s_int = grid.interior_sqrt_weights();
    let d1 = grid.d1();
    let hinv = HelmholtzSolver::new(grid, k)?.interior_inverse();

    // Interior-to-full derivative of a profile vanishing at the walls.
    let mut grad = CMatrix::zeros(n + 1 + m, m);
    let mut vel = CMatrix::zeros(n + 1 + m, m);
    for i in 0..=n {
        for j in 0..m {
            grad[(i, j)] = c(s_full[i] * d1[(i, j + 1)] / s_int[j]);
            let mut acc = 0.0;
            for l in 0..m {
                acc += d1[(i, l + 1)] * hinv[(l, j)];
            }
            vel[(i, j)] = c(s_full[i] * acc / s_int[j]);
        }
    }
    for i in 0..m {
        grad[(n + 1 + i, i)] = c(kabs);
        for j in 0..m {
            vel[(n + 1 + i, j)] = c(kabs * s_int[i] * hinv[(i, j)] / s_int[j]);
        }
    }
    let neg_inv = CMatrix::from_fn(m, m, |i, j| c(-s_int[i] * hinv[(i, j)] / s_int[j]));
    let hm1 = linalg::hermitian_inv_sqrt(&linalg::hermitian_part(&neg_inv))?;
    Ok(OutputMaps { grad, vel, hm1 })
}

struct Sample {
    lambda: f64,
    values: [f64; 5],
    second: SecondBlockRatio,
}

fn os_sample(b: &CMatrix, maps: &OutputMaps, nu: f64, k: i64, lambda: f64) -> Result<Sample> {
    let kf = k as f64;
    let ka = kf.abs();
    let mut a = b.clone();
    for i in 0..a.nrows() {
        a[(i, i)] -= C64::new(0.0, kf * lambda);
    }
    let r = a
        .try_inverse()
        .ok_or_else(|| Error::NumericalSingularity(format!("singular at lambda = {lambda}")))?;
    let n_r = linalg::spectral_norm(&r);
    let n_gr = linalg::spectral_norm(&(&maps.grad * &r));
    let ur = &maps.vel * &r;
    let n_ur = linalg::spectral_norm(&ur);
    let n_rh = linalg::spectral_norm(&(&r * &maps.hm1));
    let n_urh = linalg::spectral_norm(&(&ur * &maps.hm1));
    let values = [
        (nu * ka).sqrt() * n_r,
        nu.powf(0.75) * ka.powf(0.25) * n_gr,
        nu.powf(0.375) * ka.powf(1.125) * n_ur,
        nu.powf(0.75) * ka.powf(0.25) * n_rh,
        (nu * ka).sqrt() * n_urh,
    ];
    let a = ((lambda - 1.0).abs().sqrt() + (nu / ka).powf(0.25)).cbrt();
    let second = SecondBlockRatio {
        lambda,
        u_l2: nu.powf(1.0 / 6.0) * ka.powf(5.0 / 6.0) * a * n_ur,
        w_grad: nu.powf(2.0 / 3.0) * ka.powf(1.0 / 3.0) * a * n_gr,
        w_l2: nu.cbrt() * ka.powf(2.0 / 3.0) * a * a * n_r,
        w_from_hm1: nu.powf(2.0 / 3.0) * ka.powf(1.0 / 3.0) * a * n_rh,
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalSingularity(format!(
            "non-finite constant at lambda = {lambda}"
        )));
    }
    Ok(Sample {
        lambda,
        values,
        second,
    })
}

/// Best constants of the five λ-uniform Orr–Sommerfeld resolvent bounds,
/// maximized over the default λ window, plus per-λ ratios for the
/// λ-dependent bounds.
pub fn verify_os_bounds(nu: f64, k: i64, grid: &Arc<ChebyshevGrid>) -> Result<OsBoundReport> {
    verify_os_bounds_on(nu, k, grid, default_lambda_range(k), DEFAULT_SAMPLES)
}

pub fn verify_os_bounds_on(
    nu: f64,
    k: i64,
    grid: &Arc<ChebyshevGrid>,
    lambda_range: [f64; 2],
    samples: usize,
) -> Result<OsBoundReport> {
    let op = assemble_l(nu, k, grid)?;
    let b = op.weighted();
    let maps = output_maps(grid, k)?;
    let lambdas = linspace(lambda_range[0], lambda_range[1], samples.max(3));
    let samples = par_map(&lambdas, |&l| os_sample(&b, &maps, nu, k, l))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut constants = BTreeMap::new();
    let mut argmax = BTreeMap::new();
    for (idx, key) in OS_BOUND_KEYS.iter().enumerate() {
        let (imax, best) = samples
            .iter()
            .enumerate()
            .map(|(i, s)| (i, s.values[idx]))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty sweep");
        let lo = lambdas[imax.saturating_sub(1)];
        let hi = lambdas[(imax + 1).min(lambdas.len() - 1)];
        let (x, neg) = golden_min(
            |l| os_sample(&b, &maps, nu, k, l).map_or(f64::INFINITY, |s| -s.values[idx]),
            lo,
            hi,
            1e-8,
        );
        let (l, v) = if -neg > best { (x, -neg) } else { (samples[imax].lambda, best) };
        constants.insert((*key).to_string(), v);
        argmax.insert((*key).to_string(), l);
    }
    Ok(OsBoundReport {
        nu,
        k,
        constants,
        argmax,
        second_block: samples.into_iter().map(|s| s.second).collect(),
    })
}
