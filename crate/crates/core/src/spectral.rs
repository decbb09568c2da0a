//! Chebyshev collocation in the wall-normal direction.
//!
//! Everything here works on the Gauss–Lobatto points `y_j = cos(jπ/n)` of
//! `[-1, 1]`. Inner products use Clenshaw–Curtis weights, i.e. they are
//! discrete versions of the plain (unweighted) `L²(-1, 1)` pairing.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;

/// Collocation grid, quadrature weights and the differentiation matrices
/// that every other module reuses.
#[derive(Debug, Clone)]
pub struct ChebyshevGrid {
    n: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
}

impl ChebyshevGrid {
    /// Polynomial degree; the grid has `n + 1` nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of nodes, `n + 1`.
    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn d1(&self) -> &DMatrix<f64> {
        &self.d1
    }

    pub fn d2(&self) -> &DMatrix<f64> {
        &self.d2
    }

    /// Number of interior nodes, `n - 1`.
    pub fn interior_len(&self) -> usize {
        self.n - 1
    }

    /// Square roots of the interior weights.
    pub fn interior_sqrt_weights(&self) -> Vec<f64> {
        self.weights[1..self.n].iter().map(|w| w.sqrt()).collect()
    }

    /// Spacing to the nearest neighbour of each node.
    pub fn local_spacing(&self) -> Vec<f64> {
        let y = &self.nodes;
        (0..=self.n)
            .map(|j| {
                let left = if j > 0 { y[j - 1] - y[j] } else { f64::INFINITY };
                let right = if j < self.n { y[j] - y[j + 1] } else { f64::INFINITY };
                left.min(right)
            })
            .collect()
    }

    fn check(&self, values: &[C64]) -> Result<()> {
        if values.len() != self.len() {
            return invalid(format!(
                "field has {} values but the grid has {} nodes",
                values.len(),
                self.len()
            ));
        }
        Ok(())
    }
}

/// Gauss–Lobatto nodes `cos(jπ/n)`, written in the symmetric sine form so
/// that `±1` and `0` come out exact.
pub fn chebyshev_nodes(n: usize) -> Vec<f64> {
    assert!(n >= 1, "need at least two nodes");
    (0..=n)
        .map(|j| (PI * (n as f64 - 2.0 * j as f64) / (2.0 * n as f64)).sin())
        .collect()
}

/// Clenshaw–Curtis weights on the Gauss–Lobatto nodes.
pub fn clenshaw_curtis_weights(n: usize) -> Vec<f64> {
    assert!(n >= 1, "need at least two nodes");
    let nf = n as f64;
    let mut w = vec![0.0; n + 1];
    let mut v = vec![1.0; n.saturating_sub(1)];
    let theta = |j: usize| PI * j as f64 / nf;
    if n % 2 == 0 {
        w[0] = 1.0 / (nf * nf - 1.0);
        w[n] = w[0];
        for k in 1..n / 2 {
            let kf = k as f64;
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * kf * theta(i + 1)).cos() / (4.0 * kf * kf - 1.0);
            }
        }
        for (i, vi) in v.iter_mut().enumerate() {
            *vi -= (nf * theta(i + 1)).cos() / (nf * nf - 1.0);
        }
    } else {
        w[0] = 1.0 / (nf * nf);
        w[n] = w[0];
        for k in 1..=(n - 1) / 2 {
            let kf = k as f64;
            for (i, vi) in v.iter_mut().enumerate() {
                *vi -= 2.0 * (2.0 * kf * theta(i + 1)).cos() / (4.0 * kf * kf - 1.0);
            }
        }
    }
    for (i, vi) in v.iter().enumerate() {
        w[i + 1] = 2.0 * vi / nf;
    }
    w
}

/// First-derivative collocation matrix. Node differences use the product
/// form `y_i - y_j = 2 sin(π(i+j)/2n) sin(π(j-i)/2n)`, and the diagonal is
/// the negative off-diagonal row sum so constants differentiate to zero.
fn first_derivative(n: usize) -> DMatrix<f64> {
    let nf = n as f64;
    let c = |j: usize| {
        let s = if j == 0 || j == n { 2.0 } else { 1.0 };
        if j % 2 == 0 {
            s
        } else {
            -s
        }
    };
    let mut d = DMatrix::<f64>::zeros(n + 1, n + 1);
    for i in 0..=n {
        let mut row_sum = 0.0;
        for j in 0..=n {
            if i == j {
                continue;
            }
            let diff = 2.0
                * (PI * (i + j) as f64 / (2.0 * nf)).sin()
                * (PI * (j as f64 - i as f64) / (2.0 * nf)).sin();
            let value = c(i) / c(j) / diff;
            d[(i, j)] = value;
            row_sum += value;
        }
        d[(i, i)] = -row_sum;
    }
    d
}

/// Builds the collocation grid of polynomial degree `n`.
///
/// `n` must be even and at least 8.
pub fn build_grid(n: usize) -> Result<ChebyshevGrid> {
    if n < 8 || n % 2 != 0 {
        return invalid(format!("grid degree must be even and >= 8, got {n}"));
    }
    let nodes = chebyshev_nodes(n);
    let weights = clenshaw_curtis_weights(n);
    let d1 = first_derivative(n);
    let d2 = &d1 * &d1;
    Ok(ChebyshevGrid {
        n,
        nodes,
        weights,
        d1,
        d2,
    })
}

/// A collocation differentiation operator of order 1 or 2.
#[derive(Debug, Clone)]
pub struct DiffOp {
    pub order: usize,
    pub matrix: DMatrix<f64>,
}

impl DiffOp {
    pub fn apply(&self, values: &[C64]) -> Vec<C64> {
        apply_real(&self.matrix, values)
    }

    pub fn apply_real(&self, values: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(values);
        (&self.matrix * v).as_slice().to_vec()
    }
}

pub fn diff_matrix(grid: &ChebyshevGrid, order: usize) -> Result<DiffOp> {
    let matrix = match order {
        1 => grid.d1.clone(),
        2 => grid.d2.clone(),
        _ => return invalid(format!("unsupported derivative order {order}")),
    };
    Ok(DiffOp { order, matrix })
}

/// Multiplies a real matrix with a complex vector.
pub(crate) fn apply_real(m: &DMatrix<f64>, values: &[C64]) -> Vec<C64> {
    let (rows, cols) = m.shape();
    debug_assert_eq!(cols, values.len());
    let mut out = vec![C64::new(0.0, 0.0); rows];
    for j in 0..cols {
        let v = values[j];
        if v.re == 0.0 && v.im == 0.0 {
            continue;
        }
        let col = m.column(j);
        for (o, &a) in out.iter_mut().zip(col.iter()) {
            o.re += a * v.re;
            o.im += a * v.im;
        }
    }
    out
}

/// One Fourier mode `k` of a field, sampled at the collocation nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMode {
    pub k: i64,
    pub values: Vec<C64>,
}

impl FieldMode {
    pub fn new(k: i64, values: Vec<C64>) -> Self {
        Self { k, values }
    }

    pub fn zeros(k: i64, grid: &ChebyshevGrid) -> Self {
        Self {
            k,
            values: vec![C64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Samples a real profile at the nodes.
    pub fn from_fn(k: i64, grid: &ChebyshevGrid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            k,
            values: grid.nodes().iter().map(|&y| C64::new(f(y), 0.0)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scale(&self, a: C64) -> Self {
        Self {
            k: self.k,
            values: self.values.iter().map(|v| v * a).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Discrete `L²(-1,1)` pairing `∫ f conj(g) dy`.
pub fn inner_product(f: &FieldMode, g: &FieldMode, grid: &ChebyshevGrid) -> Result<C64> {
    grid.check(&f.values)?;
    grid.check(&g.values)?;
    Ok(weighted_dot(&f.values, &g.values, grid.weights()))
}

pub(crate) fn weighted_dot(f: &[C64], g: &[C64], w: &[f64]) -> C64 {
    f.iter()
        .zip(g)
        .zip(w)
        .map(|((a, b), &w)| a * b.conj() * w)
        .sum()
}

/// Squared discrete `L²` norm of nodal values.
pub fn norm_sq(values: &[C64], grid: &ChebyshevGrid) -> f64 {
    values
        .iter()
        .zip(grid.weights())
        .map(|(v, w)| v.norm_sqr() * w)
        .sum()
}

pub fn l2_norm(values: &[C64], grid: &ChebyshevGrid) -> f64 {
    norm_sq(values, grid).sqrt()
}

/// Dirichlet solver for `(∂_y² - k²) u = f`, `u(±1) = 0`.
///
/// The boundary rows of the collocation system are replaced by identity
/// rows, which is the same as solving the interior block.
#[derive(Debug, Clone)]
pub struct HelmholtzSolver {
    k: i64,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
}

impl HelmholtzSolver {
    pub fn new(grid: &ChebyshevGrid, k: i64) -> Result<Self> {
        let n = grid.n();
        let m = n - 1;
        let k2 = (k * k) as f64;
        let interior = DMatrix::from_fn(m, m, |i, j| {
            grid.d2[(i + 1, j + 1)] - if i == j { k2 } else { 0.0 }
        });
        let lu = interior.lu();
        if !lu.is_invertible() {
            return Err(Error::Internal(format!(
                "Helmholtz factorization failed for k = {k}"
            )));
        }
        Ok(Self { k, lu, n })
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    /// Solves for all `n + 1` nodal values; only the interior of `f` is read.
    pub fn solve(&self, f: &[C64]) -> Vec<C64> {
        let m = self.n - 1;
        let mut rhs = DMatrix::<f64>::zeros(m, 2);
        for i in 0..m {
            rhs[(i, 0)] = f[i + 1].re;
            rhs[(i, 1)] = f[i + 1].im;
        }
        let sol = self
            .lu
            .solve(&rhs)
            .expect("factorization checked at construction");
        let mut out = vec![C64::new(0.0, 0.0); self.n + 1];
        for i in 0..m {
            out[i + 1] = C64::new(sol[(i, 0)], sol[(i, 1)]);
        }
        out
    }

    /// Dense inverse of the interior block.
    pub fn interior_inverse(&self) -> DMatrix<f64> {
        self.lu
            .try_inverse()
            .expect("factorization checked at construction")
    }
}

/// Realizes `Δ_k^{-1} f` with homogeneous Dirichlet conditions.
pub fn solve_helmholtz(grid: &ChebyshevGrid, k: i64, f: &FieldMode) -> Result<FieldMode> {
    grid.check(&f.values)?;
    if f.values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return invalid("right-hand side is not finite");
    }
    let solver = HelmholtzSolver::new(grid, k)?;
    Ok(FieldMode::new(f.k, solver.solve(&f.values)))
}

/// `‖(∂_y, |k|) g‖_{L²}`.
pub fn hk1_norm(g: &FieldMode, k: i64, grid: &ChebyshevGrid) -> Result<f64> {
    grid.check(&g.values)?;
    let dg = apply_real(grid.d1(), &g.values);
    let k2 = (k * k) as f64;
    Ok((norm_sq(&dg, grid) + k2 * norm_sq(&g.values, grid)).sqrt())
}

/// Dual norm `sqrt(⟨F, (k² - ∂_y²)^{-1} F⟩)` with the Dirichlet inverse.
pub fn hk_dual_norm(f: &FieldMode, k: i64, grid: &ChebyshevGrid) -> Result<f64> {
    grid.check(&f.values)?;
    if k == 0 {
        return invalid("H_k^{-1} norm requires k != 0");
    }
    let u = solve_helmholtz(grid, k, f)?;
    // (∂² - k²) u = F, so (k² - ∂²)^{-1} F = -u.
    let q = -weighted_dot(&f.values, &u.values, grid.weights()).re;
    Ok(q.max(0.0).sqrt())
}
