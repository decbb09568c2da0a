//! TOML run configuration.

use std::path::Path;

use poiseuille::nonlinear::{auto_dt, default_horizon, InitialShape, SimConfig};
use poiseuille::resolvent::{default_lambda_range, DEFAULT_SAMPLES};
use poiseuille::threshold::VerdictRule;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub grid: GridSection,
    pub physics: PhysicsSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub bisection: BisectionSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Chebyshev degree.
    #[serde(default = "default_n")]
    pub n: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { n: default_n() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorChoice {
    /// `L̂_ν`, swept over `physics.nu`.
    OrrSommerfeld,
    /// `Ĥ_μ`, swept over `physics.mu` (or `physics.nu` when absent).
    AdvectionDiffusion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub nu: Vec<f64>,
    /// Paired with `nu` entry by entry; defaults to `mu = nu`.
    #[serde(default)]
    pub mu: Option<Vec<f64>>,
    /// Wavenumbers for the linear commands.
    #[serde(default = "default_ks")]
    pub k: Vec<i64>,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_c")]
    pub c0: f64,
    #[serde(default = "default_c")]
    pub c1: f64,
    #[serde(default)]
    pub seed: u64,
    /// Step size; `0.4 / K` when absent.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Final time; `10 ν^{-1/2}` when absent.
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default = "default_shape")]
    pub shape: InitialShape,
    #[serde(default = "default_sobolev")]
    pub sobolev_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default)]
    pub operator: Option<OperatorChoice>,
    /// Number of λ samples.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Overrides the per-k default window `[-4|k|, 5|k|]`.
    #[serde(default)]
    pub lambda_range: Option<[f64; 2]>,
    /// Whether `resolvent` also evaluates the Orr-Sommerfeld bound constants.
    #[serde(default = "yes")]
    pub os_bounds: bool,
    /// Semigroup samples on `[0, t_max_factor · coeff^{-1/2}]`.
    #[serde(default = "default_t_points")]
    pub t_points: usize,
    #[serde(default = "default_t_max_factor")]
    pub t_max_factor: f64,
    /// Decay fit over `[0, decay_horizon_factor · coeff^{-1/2}]`.
    #[serde(default = "default_decay_horizon_factor")]
    pub decay_horizon_factor: f64,
    #[serde(default = "default_decay_samples")]
    pub decay_samples: usize,
    /// Ledger snapshot period in steps for `simulate` (0: endpoints only).
    #[serde(default)]
    pub record_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BisectionSection {
    #[serde(default = "default_bracket")]
    pub bracket: [f64; 2],
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Replaces the nonlinear verdict by "stable iff a ≤ ν^γ".
    #[serde(default)]
    pub synthetic_gamma: Option<f64>,
    #[serde(default = "default_stable_ratio")]
    pub stable_ratio: f64,
    #[serde(default = "default_unstable_ratio")]
    pub unstable_ratio: f64,
    #[serde(default = "default_max_extensions")]
    pub max_extensions: usize,
}

fn default_n() -> usize {
    64
}
fn default_ks() -> Vec<i64> {
    vec![1]
}
fn default_k_max() -> usize {
    16
}
fn default_c() -> f64 {
    1e-3
}
fn default_shape() -> InitialShape {
    InitialShape::RandomBand
}
fn default_sobolev() -> f64 {
    3.6
}
fn default_samples() -> usize {
    DEFAULT_SAMPLES
}
fn yes() -> bool {
    true
}
fn default_t_points() -> usize {
    50
}
fn default_t_max_factor() -> f64 {
    3.0
}
fn default_decay_horizon_factor() -> f64 {
    10.0
}
fn default_decay_samples() -> usize {
    41
}
fn default_bracket() -> [f64; 2] {
    [1e-6, 1.0]
}
fn default_tolerance() -> f64 {
    0.05
}
fn default_stable_ratio() -> f64 {
    VerdictRule::default().stable_ratio
}
fn default_unstable_ratio() -> f64 {
    VerdictRule::default().unstable_ratio
}
fn default_max_extensions() -> usize {
    VerdictRule::default().max_extensions
}

impl Default for SweepSection {
    fn default() -> Self {
        toml::from_str("").expect("all sweep fields have defaults")
    }
}

impl Default for BisectionSection {
    fn default() -> Self {
        toml::from_str("").expect("all bisection fields have defaults")
    }
}

/// Parsed configuration plus the raw bytes it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: Config,
    pub raw: String,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: Config = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config = Self::parse(&raw)?;
        Ok(LoadedConfig { config, raw })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, why: &str| Err(CliError::Config(format!("{field}: {why}")));
        let p = &self.physics;
        if self.grid.n < 8 || self.grid.n % 2 != 0 {
            return bad("grid.n", "must be even and at least 8");
        }
        if p.nu.is_empty() {
            return bad("physics.nu", "needs at least one value");
        }
        if p.nu.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return bad("physics.nu", "values must be positive");
        }
        if let Some(mu) = &p.mu {
            if mu.len() != p.nu.len() {
                return bad("physics.mu", "must have as many entries as physics.nu");
            }
            if mu.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return bad("physics.mu", "values must be positive");
            }
        }
        if p.k.is_empty() || p.k.contains(&0) {
            return bad("physics.k", "needs at least one nonzero wavenumber");
        }
        if p.k_max == 0 {
            return bad("physics.k_max", "must be at least 1");
        }
        if !(p.c0 >= 0.0 && p.c1 >= 0.0) {
            return bad("physics.c0/c1", "must be nonnegative");
        }
        if matches!(p.dt, Some(dt) if !(dt > 0.0 && dt.is_finite())) {
            return bad("physics.dt", "must be positive");
        }
        if matches!(p.horizon, Some(h) if !(h > 0.0 && h.is_finite())) {
            return bad("physics.horizon", "must be positive");
        }
        let s = &self.sweep;
        if s.samples < 3 {
            return bad("sweep.samples", "must be at least 3");
        }
        if matches!(s.lambda_range, Some([lo, hi]) if !(lo < hi)) {
            return bad("sweep.lambda_range", "lower end must be below upper end");
        }
        if s.t_points < 1 || !(s.t_max_factor > 0.0) {
            return bad("sweep.t_points", "needs a nonempty time grid");
        }
        if s.decay_samples < 8 || !(s.decay_horizon_factor > 0.0) {
            return bad("sweep.decay_samples", "needs at least 8 samples on a positive horizon");
        }
        let b = &self.bisection;
        if !(b.tolerance > 0.0) {
            return bad("bisection.tolerance", "must be positive");
        }
        if !(b.bracket[0] > 0.0 && b.bracket[1].is_finite()) {
            return bad("bisection.bracket", "endpoints must be positive and finite");
        }
        if !(b.stable_ratio > 0.0 && b.stable_ratio <= b.unstable_ratio) {
            return bad("bisection.stable_ratio", "must be positive and at most unstable_ratio");
        }
        Ok(())
    }

    /// `(ν, μ)` pairs.
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        let mu = self.physics.mu.clone().unwrap_or_else(|| self.physics.nu.clone());
        self.physics.nu.iter().copied().zip(mu).collect()
    }

    /// Coefficients swept by a linear command for the given operator.
    pub fn coefficients(&self, op: OperatorChoice) -> Vec<f64> {
        match op {
            OperatorChoice::OrrSommerfeld => self.physics.nu.clone(),
            OperatorChoice::AdvectionDiffusion => self.pairs().into_iter().map(|(_, mu)| mu).collect(),
        }
    }

    pub fn lambda_range(&self, k: i64) -> [f64; 2] {
        self.sweep.lambda_range.unwrap_or_else(|| default_lambda_range(k))
    }

    pub fn sim_config(&self, nu: f64, mu: f64) -> SimConfig {
        let p = &self.physics;
        SimConfig {
            nu,
            mu,
            k_max: p.k_max,
            n: self.grid.n,
            dt: p.dt.unwrap_or_else(|| auto_dt(p.k_max)),
            horizon: p.horizon.unwrap_or_else(|| default_horizon(nu)),
            c0: p.c0,
            c1: p.c1,
            seed: p.seed,
            sobolev_s: p.sobolev_s,
        }
    }

    pub fn verdict_rule(&self) -> VerdictRule {
        VerdictRule {
            stable_ratio: self.bisection.stable_ratio,
            unstable_ratio: self.bisection.unstable_ratio,
            max_extensions: self.bisection.max_extensions,
        }
    }
}
