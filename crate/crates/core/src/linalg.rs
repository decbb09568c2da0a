//! Dense complex linear algebra used by the operator, resolvent and
//! evolution modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spectral::{ChebyshevGrid, C64};

pub type CMatrix = DMatrix<C64>;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(c)
}

/// Interior block `A[1..n, 1..n]` of a full collocation matrix.
pub fn interior_block(full: &CMatrix) -> CMatrix {
    let n = full.nrows() - 1;
    full.view((1, 1), (n - 1, n - 1)).into_owned()
}

/// Similarity transform `S A S⁻¹` with `S = diag(sqrt(w_interior))`, so that
/// Euclidean norms of the result are quadrature-weighted `L²` norms.
pub fn weight_interior(interior: &CMatrix, grid: &ChebyshevGrid) -> CMatrix {
    let s = grid.interior_sqrt_weights();
    let m = interior.nrows();
    CMatrix::from_fn(m, m, |i, j| interior[(i, j)] * (s[i] / s[j]))
}

/// Descending singular values.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn sigma_min(m: &CMatrix) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

pub fn sigma_max(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Spectral norm of a (possibly rectangular) matrix.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    sigma_max(m)
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_part(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Eigenvalues of a general complex matrix via the Schur form.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    let schur = nalgebra::Schur::try_new(m.clone(), 1e-14, 10_000)
        .ok_or_else(|| Error::Internal("Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Matrix exponential (Padé scaling and squaring).
pub fn expm(m: &CMatrix) -> CMatrix {
    m.exp()
}

/// Inverse square root of a Hermitian positive-definite matrix.
pub fn hermitian_inv_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_part(m).symmetric_eigen();
    if eig.eigenvalues.iter().any(|&v| v <= 0.0) {
        return Err(Error::NumericalSingularity(
            "matrix is not positive definite".into(),
        ));
    }
    let q = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| c(1.0 / v.sqrt())));
    Ok(q * d * q.adjoint())
}

pub fn one_norm(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `e^Z` together with `φ₁(Z) = Z⁻¹(e^Z - I)` and `φ₂(Z) = Z⁻²(e^Z - I - Z)`.
#[derive(Debug, Clone)]
pub struct ExpPhi {
    pub exp: CMatrix,
    pub phi1: CMatrix,
    pub phi2: CMatrix,
}

/// Truncated Taylor series on `Z / 2^s`, followed by the squaring
/// recurrences
///
/// ```text
/// φ₂(2Z) = (e^Z φ₂(Z) + φ₂(Z) + φ₁(Z)) / 4
/// φ₁(2Z) = (e^Z φ₁(Z) + φ₁(Z)) / 2
/// e^{2Z} = (e^Z)²
/// ```
pub fn exp_phi(z: &CMatrix) -> ExpPhi {
    let m = z.nrows();
    let norm = one_norm(z);
    let mut squarings = 0u32;
    while norm / 2f64.powi(squarings as i32) > 0.5 {
        squarings += 1;
    }
    let zs = z * c(1.0 / 2f64.powi(squarings as i32));

    const TERMS: usize = 20;
    let mut fact = [1.0f64; TERMS + 3];
    for j in 1..fact.len() {
        fact[j] = fact[j - 1] * j as f64;
    }
    let mut e = CMatrix::zeros(m, m);
    let mut p1 = CMatrix::zeros(m, m);
    let mut p2 = CMatrix::zeros(m, m);
    let mut power = CMatrix::identity(m, m);
    for j in 0..=TERMS {
        e += &power * c(1.0 / fact[j]);
        p1 += &power * c(1.0 / fact[j + 1]);
        p2 += &power * c(1.0 / fact[j + 2]);
        if j < TERMS {
            power = &power * &zs;
        }
    }
    for _ in 0..squarings {
        let new_p2 = (&e * &p2 + &p2 + &p1) * c(0.25);
        let new_p1 = (&e * &p1 + &p1) * c(0.5);
        e = &e * &e;
        p1 = new_p1;
        p2 = new_p2;
    }
    ExpPhi {
        exp: e,
        phi1: p1,
        phi2: p2,
    }
}

pub fn cvec(values: &[C64]) -> DVector<C64> {
    DVector::from_column_slice(values)
}
