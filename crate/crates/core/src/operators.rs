//! Per-wavenumber linearized operators around the Poiseuille profile
//! `U(y) = 1 - y²`.
//!
//! * Orr–Sommerfeld (vorticity): `ν(k² - ∂_y²) + ik(1 - y²) + 2ik(∂_y² - k²)⁻¹`
//! * advection–diffusion (temperature): `μ(k² - ∂_y²) + ik(1 - y²)`
//!
//! Both act on profiles vanishing at `y = ±1`. The full `(n+1)×(n+1)` matrix
//! carries identity rows at the two walls; all spectral quantities are taken
//! on the interior block, which is the operator restricted to the
//! homogeneous-Dirichlet subspace.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, c, CMatrix};
use crate::spectral::{apply_real, ChebyshevGrid, FieldMode, HelmholtzSolver, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    OrrSommerfeld,
    AdvectionDiffusion,
    /// `coeff (k² - ∂_y²)` alone; self-adjoint reference operator.
    Diffusion,
    /// `ik(1 - y²)` alone; skew reference operator.
    Shear,
    Custom,
}

#[derive(Debug, Clone)]
pub struct ModeOperator {
    kind: OperatorKind,
    k: i64,
    coeff: f64,
    matrix: CMatrix,
    grid: Arc<ChebyshevGrid>,
}

fn check_params(coeff: f64, k: i64) -> Result<()> {
    if k == 0 {
        return invalid("operator requires k != 0 (the zero mode is evolved separately)");
    }
    if !(coeff > 0.0 && coeff.is_finite()) {
        return invalid(format!("diffusion coefficient must be positive, got {coeff}"));
    }
    Ok(())
}

/// Interior rows of `coeff (k² - D2)`, written into a full matrix.
fn diffusion_rows(grid: &ChebyshevGrid, coeff: f64, k: i64) -> CMatrix {
    let n = grid.n();
    let k2 = (k * k) as f64;
    let d2 = grid.d2();
    CMatrix::from_fn(n + 1, n + 1, |i, j| {
        if i == 0 || i == n {
            return c(0.0);
        }
        let diag = if i == j { k2 } else { 0.0 };
        c(coeff * (diag - d2[(i, j)]))
    })
}

fn shear_rows(grid: &ChebyshevGrid, k: i64) -> CMatrix {
    let n = grid.n();
    let y = grid.nodes();
    CMatrix::from_fn(n + 1, n + 1, |i, j| {
        if i == j && i != 0 && i != n {
            C64::new(0.0, k as f64 * (1.0 - y[i] * y[i]))
        } else {
            c(0.0)
        }
    })
}

/// `2ik (∂_y² - k²)⁻¹` with the Dirichlet inverse, embedded in a full matrix.
pub fn nonlocal_term(grid: &ChebyshevGrid, k: i64) -> Result<CMatrix> {
    let n = grid.n();
    let hinv = HelmholtzSolver::new(grid, k)?.interior_inverse();
    let factor = C64::new(0.0, 2.0 * k as f64);
    Ok(CMatrix::from_fn(n + 1, n + 1, |i, j| {
        if i == 0 || i == n || j == 0 || j == n {
            c(0.0)
        } else {
            factor * hinv[(i - 1, j - 1)]
        }
    }))
}

/// Interior block of `coeff (k² - ∂_y²) + ik(1 - y²)` (plus the nonlocal
/// term when `nonlocal`), valid for every `k` including 0.
pub(crate) fn interior_matrix(
    grid: &ChebyshevGrid,
    coeff: f64,
    k: i64,
    nonlocal: bool,
) -> Result<CMatrix> {
    let mut m = diffusion_rows(grid, coeff, k) + shear_rows(grid, k);
    if nonlocal && k != 0 {
        m += nonlocal_term(grid, k)?;
    }
    Ok(linalg::interior_block(&m))
}

fn with_boundary_rows(mut m: CMatrix) -> CMatrix {
    let n = m.nrows() - 1;
    for j in 0..=n {
        m[(0, j)] = c(0.0);
        m[(n, j)] = c(0.0);
    }
    m[(0, 0)] = c(1.0);
    m[(n, n)] = c(1.0);
    m
}

impl ModeOperator {
    /// Wraps an arbitrary full matrix; boundary rows are overwritten with
    /// identity rows.
    pub fn custom(k: i64, coeff: f64, matrix: CMatrix, grid: Arc<ChebyshevGrid>) -> Result<Self> {
        if matrix.nrows() != grid.len() || matrix.ncols() != grid.len() {
            return invalid("matrix shape does not match the grid");
        }
        Ok(Self {
            kind: OperatorKind::Custom,
            k,
            coeff,
            matrix: with_boundary_rows(matrix),
            grid,
        })
    }

    /// `μ(k² - ∂_y²) + ik(1 - y²)` with `θ(±1) = 0`.
    pub fn advection_diffusion(mu: f64, k: i64, grid: Arc<ChebyshevGrid>) -> Result<Self> {
        check_params(mu, k)?;
        let m = diffusion_rows(&grid, mu, k) + shear_rows(&grid, k);
        Ok(Self {
            kind: OperatorKind::AdvectionDiffusion,
            k,
            coeff: mu,
            matrix: with_boundary_rows(m),
            grid,
        })
    }

    /// `ν(k² - ∂_y²) + ik(1 - y²) + 2ik(∂_y² - k²)⁻¹` with `ω(±1) = φ(±1) = 0`.
    pub fn orr_sommerfeld(nu: f64, k: i64, grid: Arc<ChebyshevGrid>) -> Result<Self> {
        check_params(nu, k)?;
        let m = diffusion_rows(&grid, nu, k) + shear_rows(&grid, k) + nonlocal_term(&grid, k)?;
        Ok(Self {
            kind: OperatorKind::OrrSommerfeld,
            k,
            coeff: nu,
            matrix: with_boundary_rows(m),
            grid,
        })
    }

    /// `coeff (k² - ∂_y²)` alone.
    pub fn diffusion(coeff: f64, k: i64, grid: Arc<ChebyshevGrid>) -> Result<Self> {
        check_params(coeff, k)?;
        let m = diffusion_rows(&grid, coeff, k);
        Ok(Self {
            kind: OperatorKind::Diffusion,
            k,
            coeff,
            matrix: with_boundary_rows(m),
            grid,
        })
    }

    /// `ik(1 - y²)` alone.
    pub fn shear(k: i64, grid: Arc<ChebyshevGrid>) -> Result<Self> {
        if k == 0 {
            return invalid("operator requires k != 0");
        }
        let m = shear_rows(&grid, k);
        Ok(Self {
            kind: OperatorKind::Shear,
            k,
            coeff: 0.0,
            matrix: with_boundary_rows(m),
            grid,
        })
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn grid(&self) -> &Arc<ChebyshevGrid> {
        &self.grid
    }

    pub fn interior(&self) -> CMatrix {
        linalg::interior_block(&self.matrix)
    }

    /// Interior block in quadrature-weighted coordinates: Euclidean norms of
    /// this matrix are `L²(-1,1)` operator norms.
    pub fn weighted(&self) -> CMatrix {
        linalg::weight_interior(&self.interior(), &self.grid)
    }

    /// Same operator with `shift · I` added on the interior rows.
    pub fn shifted(&self, shift: C64) -> Self {
        let mut out = self.clone();
        let n = self.grid.n();
        for i in 1..n {
            out.matrix[(i, i)] += shift;
        }
        out.kind = OperatorKind::Custom;
        out
    }

    /// Applies the full matrix (boundary rows copy the boundary values).
    pub fn apply(&self, f: &FieldMode) -> Result<FieldMode> {
        if f.len() != self.grid.len() {
            return invalid("field does not match the operator grid");
        }
        let v = &self.matrix * linalg::cvec(&f.values);
        Ok(FieldMode::new(f.k, v.as_slice().to_vec()))
    }

    /// Solves `(A + shift) x = rhs` on the Dirichlet subspace; `x(±1) = 0`.
    pub fn solve_shifted(&self, shift: C64, rhs: &FieldMode) -> Result<FieldMode> {
        let n = self.grid.n();
        if rhs.len() != n + 1 {
            return invalid("right-hand side does not match the operator grid");
        }
        let mut a = self.interior();
        for i in 0..n - 1 {
            a[(i, i)] += shift;
        }
        let b = linalg::cvec(&rhs.values[1..n]);
        let x = a.lu().solve(&b).ok_or_else(|| {
            Error::NumericalSingularity(format!("shifted operator singular at shift {shift}"))
        })?;
        let mut values = vec![c(0.0); n + 1];
        values[1..n].copy_from_slice(x.as_slice());
        Ok(FieldMode::new(rhs.k, values))
    }
}

pub fn assemble_h(mu: f64, k: i64, grid: &Arc<ChebyshevGrid>) -> Result<ModeOperator> {
    ModeOperator::advection_diffusion(mu, k, grid.clone())
}

pub fn assemble_l(nu: f64, k: i64, grid: &Arc<ChebyshevGrid>) -> Result<ModeOperator> {
    ModeOperator::orr_sommerfeld(nu, k, grid.clone())
}

/// Minimum of `Re⟨A f, f⟩ / ⟨f, f⟩` over profiles vanishing at the walls,
/// in the quadrature-weighted inner product.
pub fn accretivity_check(op: &ModeOperator) -> f64 {
    linalg::min_hermitian_eigenvalue(&op.weighted())
}

/// Stream function and velocity of a vorticity mode: `(∂_y² - k²)φ = ω`,
/// `φ(±1) = 0`, `û¹ = ∂_y φ`, `û² = -ik φ`.
///
/// For `k = 0` this yields the zero-flux mean flow (`∂_y ū¹ = ω̄`,
/// `∫ ū¹ dy = 0`, `ū² = 0`).
pub fn velocity_from_vorticity(
    omega: &FieldMode,
    k: i64,
    grid: &ChebyshevGrid,
) -> Result<(FieldMode, FieldMode)> {
    if omega.len() != grid.len() {
        return invalid("field does not match the grid");
    }
    let solver = HelmholtzSolver::new(grid, k)?;
    let phi = solver.solve(&omega.values);
    Ok(velocity_from_stream(&phi, k, grid.d1(), omega.k))
}

pub(crate) fn velocity_from_stream(
    phi: &[C64],
    k: i64,
    d1: &DMatrix<f64>,
    label: i64,
) -> (FieldMode, FieldMode) {
    let u1 = apply_real(d1, phi);
    let ik = C64::new(0.0, -(k as f64));
    let u2 = phi.iter().map(|p| p * ik).collect();
    (FieldMode::new(label, u1), FieldMode::new(label, u2))
}
