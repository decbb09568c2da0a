//! Bisection of the initial amplitude separating stable from unstable runs.

use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::nonlinear::{make_initial_data_scaled, InitialShape, SimConfig, Simulation, Stepper};
use crate::nonlinear::PerturbationState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Unstable,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ThresholdPoint {
    pub nu: f64,
    pub mu: f64,
    /// Geometric midpoint of the final bracket.
    pub amplitude_star: f64,
    /// Relative width of the final bracket, `hi / lo - 1`.
    pub verdict_margin: f64,
    pub lo: f64,
    pub hi: f64,
    pub evaluations: usize,
}

/// Geometric bisection on `[lo, hi]` until `hi / lo - 1 ≤ tolerance`.
/// `lo` must be stable and `hi` unstable.
pub fn bisect_threshold(
    nu: f64,
    mu: f64,
    bracket: [f64; 2],
    tolerance: f64,
    mut oracle: impl FnMut(f64) -> Result<Verdict>,
) -> Result<ThresholdPoint> {
    let [mut lo, mut hi] = bracket;
    if !(lo > 0.0 && hi.is_finite() && tolerance > 0.0) {
        return invalid("bracket endpoints must be positive and tolerance positive");
    }
    let vlo = oracle(lo)?;
    let vhi = oracle(hi)?;
    if !(lo < hi) || vlo != Verdict::Stable || vhi != Verdict::Unstable {
        return Err(Error::Bracket {
            lo_verdict: vlo.to_string(),
            hi_verdict: vhi.to_string(),
        });
    }
    let mut evaluations = 2;
    while hi / lo - 1.0 > tolerance {
        let mid = (lo * hi).sqrt();
        evaluations += 1;
        match oracle(mid)? {
            Verdict::Stable => lo = mid,
            Verdict::Unstable => hi = mid,
        }
    }
    Ok(ThresholdPoint {
        nu,
        mu,
        amplitude_star: (lo * hi).sqrt(),
        verdict_margin: hi / lo - 1.0,
        lo,
        hi,
        evaluations,
    })
}

/// Growth thresholds for the physical verdict.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VerdictRule {
    /// `Σ(E + H)` at the horizon at most this multiple of its initial value.
    pub stable_ratio: f64,
    /// At least this multiple, or divergence, is unstable.
    pub unstable_ratio: f64,
    /// Horizon doublings allowed for ambiguous runs before calling them
    /// unstable.
    pub max_extensions: usize,
}

impl Default for VerdictRule {
    fn default() -> Self {
        Self {
            stable_ratio: 4.0,
            unstable_ratio: 10.0,
            max_extensions: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct VerdictDetail {
    pub verdict: Verdict,
    pub ratio: f64,
    pub final_time: f64,
    pub extensions: usize,
    /// Divergence or CFL message when the run stopped early.
    pub failure: Option<String>,
}

/// Runs the nonlinear system from an initial state of velocity amplitude
/// `a` (temperature amplitude `(c₁/c₀) a min(μ,ν)^{5/8}`) and classifies it.
pub struct PhysicsOracle {
    stepper: Stepper,
    shape: InitialShape,
    rule: VerdictRule,
}

impl PhysicsOracle {
    pub fn new(config: &SimConfig, shape: InitialShape, rule: VerdictRule) -> Result<Self> {
        Ok(Self {
            stepper: Stepper::new(config)?,
            shape,
            rule,
        })
    }

    pub fn with_stepper(stepper: Stepper, shape: InitialShape, rule: VerdictRule) -> Self {
        Self { stepper, shape, rule }
    }

    pub fn stepper(&self) -> &Stepper {
        &self.stepper
    }

    pub fn initial_state(&self, amplitude: f64) -> Result<PerturbationState> {
        let cfg = self.stepper.config();
        let theta_amp = if cfg.c0 > 0.0 {
            cfg.c1 / cfg.c0 * amplitude * cfg.min_coeff().powf(5.0 / 8.0)
        } else {
            0.0
        };
        let grid: &Arc<_> = self.stepper.grid();
        make_initial_data_scaled(cfg, self.shape, grid, amplitude, theta_amp)
    }

    pub fn classify(&self, amplitude: f64) -> Result<VerdictDetail> {
        let init = self.initial_state(amplitude)?;
        let mut sim = Simulation::new(&self.stepper, init)?;
        let initial = sim.ledger().e_total() + sim.ledger().h_total();
        let mut steps = crate::nonlinear::step_count(self.stepper.config());
        let mut extensions = 0;
        loop {
            match sim.advance(steps) {
                Ok(()) => {}
                Err(e @ (Error::Diverged { .. } | Error::CflViolation { .. })) => {
                    return Ok(VerdictDetail {
                        verdict: Verdict::Unstable,
                        ratio: f64::INFINITY,
                        final_time: sim.state().t,
                        extensions,
                        failure: Some(e.to_string()),
                    });
                }
                Err(e) => return Err(e),
            }
            let now = sim.ledger().e_total() + sim.ledger().h_total();
            let ratio = if initial > 0.0 { now / initial } else { 0.0 };
            let verdict = if ratio <= self.rule.stable_ratio {
                Some(Verdict::Stable)
            } else if ratio >= self.rule.unstable_ratio || extensions >= self.rule.max_extensions {
                Some(Verdict::Unstable)
            } else {
                None
            };
            if let Some(verdict) = verdict {
                return Ok(VerdictDetail {
                    verdict,
                    ratio,
                    final_time: sim.state().t,
                    extensions,
                    failure: None,
                });
            }
            // Double the horizon: run as many steps again as already taken.
            steps = sim.steps();
            extensions += 1;
        }
    }
}
