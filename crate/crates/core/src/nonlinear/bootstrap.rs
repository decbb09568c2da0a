//! Realized constants of the bootstrap inequalities on measured `E_k`, `H_k`.

use super::ledger::InitNorms;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapFamily {
    /// `E_k ≤ ‖Δ_k ω̂_0‖ + C(ν^{-3/8} μ^{-1/4} H_k + ν^{-2/3} Σ_l E_l E_{k-l})`, `k ≠ 0`
    VorticityNonzero,
    /// `E_0 ≤ ‖ω̄_0‖ + C ν^{-1/2} Σ_{l≠0} E_l E_{-l}`
    VorticityMean,
    /// `H_0 ≤ C(μ^{-1/2} Σ_{l≠0} |l|^{-1/8} E_l H_{-l} + ‖θ̄_0‖)`
    TemperatureMean,
    /// `μk² ≤ 1`: `H_k ≤ C(|k|^{1/8}‖θ̂_0‖ + μ^{-2/3} Σ_l E_l H_{k-l}
    /// + ν^{-1/8} μ^{-7/16} Σ_{l∉{0,k}, |k-l| ≤ |k|/2} E_l H_{k-l})`
    TemperatureLow,
    /// `μk² > 1`: `H_k ≤ C(|k|^{1/8}‖θ̂_0‖ + μ^{-5/8} Σ_l E_l H_{k-l}
    /// + μ^{-3/8} ν^{-1/8} E_k H_0)`
    TemperatureHigh,
}

impl BootstrapFamily {
    pub const ALL: [BootstrapFamily; 5] = [
        BootstrapFamily::VorticityNonzero,
        BootstrapFamily::VorticityMean,
        BootstrapFamily::TemperatureMean,
        BootstrapFamily::TemperatureLow,
        BootstrapFamily::TemperatureHigh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BootstrapFamily::VorticityNonzero => "vorticity_nonzero",
            BootstrapFamily::VorticityMean => "vorticity_mean",
            BootstrapFamily::TemperatureMean => "temperature_mean",
            BootstrapFamily::TemperatureLow => "temperature_low",
            BootstrapFamily::TemperatureHigh => "temperature_high",
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BootstrapRow {
    pub k: i64,
    pub family: BootstrapFamily,
    /// Whether this family governs mode `k`.
    pub applies: bool,
    pub lhs: f64,
    /// Term carrying no constant (zero for families where `C` multiplies
    /// the whole right side).
    pub free_term: f64,
    /// Right side with `C = 1`, excluding `free_term`.
    pub scaled_term: f64,
    /// Smallest `C ≥ 0` for which the inequality holds (`NaN` when the
    /// family does not apply).
    pub realized_c: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BootstrapReport {
    pub rows: Vec<BootstrapRow>,
}

impl BootstrapReport {
    pub fn applicable(&self) -> impl Iterator<Item = &BootstrapRow> {
        self.rows.iter().filter(|r| r.applies)
    }

    /// Largest realized constant per family over the applicable rows.
    pub fn worst(&self, family: BootstrapFamily) -> Option<f64> {
        self.applicable()
            .filter(|r| r.family == family)
            .map(|r| r.realized_c)
            .reduce(f64::max)
    }
}

fn smallest_c(lhs: f64, free: f64, scaled: f64) -> f64 {
    let excess = lhs - free;
    if excess <= 0.0 {
        0.0
    } else if scaled > 0.0 {
        excess / scaled
    } else {
        f64::INFINITY
    }
}

/// Evaluates every bootstrap family at every `k = -K..=K`. `e`, `h` and the
/// init norms are indexed `k + K` and must be symmetric under `k ↦ -k`.
pub fn bootstrap_check(e: &[f64], h: &[f64], nu: f64, mu: f64, init: &InitNorms) -> Result<BootstrapReport> {
    let len = e.len();
    if len % 2 == 0 || h.len() != len || init.omega.len() != len || init.theta.len() != len {
        return invalid("E, H and initial norms must share one odd length 2K+1");
    }
    if !(nu > 0.0 && mu > 0.0) {
        return invalid("nu and mu must be positive");
    }
    let kk = (len / 2) as i64;
    for k in 1..=kk {
        let (a, b) = ((kk + k) as usize, (kk - k) as usize);
        let tol = 1e-12 * (1.0 + e[a].abs() + h[a].abs());
        if (e[a] - e[b]).abs() > tol || (h[a] - h[b]).abs() > tol {
            return invalid("E and H must be symmetric under k -> -k");
        }
    }
    let at = |v: &[f64], k: i64| -> f64 {
        if k.abs() > kk {
            0.0
        } else {
            v[(k + kk) as usize]
        }
    };
    let conv = |a: &[f64], b: &[f64], k: i64, keep: &dyn Fn(i64) -> bool| -> f64 {
        (-kk..=kk)
            .filter(|&l| keep(l) && (k - l).abs() <= kk)
            .map(|l| at(a, l) * at(b, k - l))
            .sum()
    };

    let mut rows = Vec::with_capacity(5 * len);
    for k in -kk..=kk {
        let kf = k as f64;
        let ka = kf.abs();
        let low = mu * kf * kf <= 1.0;
        for family in BootstrapFamily::ALL {
            let applies = match family {
                BootstrapFamily::VorticityNonzero => k != 0,
                BootstrapFamily::VorticityMean | BootstrapFamily::TemperatureMean => k == 0,
                BootstrapFamily::TemperatureLow => k != 0 && low,
                BootstrapFamily::TemperatureHigh => k != 0 && !low,
            };
            let (lhs, free, scaled) = match family {
                BootstrapFamily::VorticityNonzero => (
                    at(e, k),
                    at(&init.omega, k),
                    nu.powf(-0.375) * mu.powf(-0.25) * at(h, k)
                        + nu.powf(-2.0 / 3.0) * conv(e, e, k, &|_| true),
                ),
                BootstrapFamily::VorticityMean => (
                    at(e, 0),
                    at(&init.omega, 0),
                    nu.powf(-0.5) * conv(e, e, 0, &|l| l != 0),
                ),
                BootstrapFamily::TemperatureMean => {
                    let s: f64 = (-kk..=kk)
                        .filter(|&l| l != 0)
                        .map(|l| (l.abs() as f64).powf(-0.125) * at(e, l) * at(h, -l))
                        .sum();
                    (at(h, 0), 0.0, mu.powf(-0.5) * s + at(&init.theta, 0))
                }
                BootstrapFamily::TemperatureLow => {
                    let near = conv(e, h, k, &|l| l != 0 && l != k && 2 * (k - l).abs() <= k.abs());
                    (
                        at(h, k),
                        0.0,
                        ka.powf(0.125) * at(&init.theta, k)
                            + mu.powf(-2.0 / 3.0) * conv(e, h, k, &|_| true)
                            + nu.powf(-0.125) * mu.powf(-7.0 / 16.0) * near,
                    )
                }
                BootstrapFamily::TemperatureHigh => (
                    at(h, k),
                    0.0,
                    ka.powf(0.125) * at(&init.theta, k)
                        + mu.powf(-0.625) * conv(e, h, k, &|_| true)
                        + mu.powf(-0.375) * nu.powf(-0.125) * at(e, k) * at(h, 0),
                ),
            };
            rows.push(BootstrapRow {
                k,
                family,
                applies,
                lhs,
                free_term: free,
                scaled_term: scaled,
                realized_c: if applies { smallest_c(lhs, free, scaled) } else { f64::NAN },
            });
        }
    }
    Ok(BootstrapReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_data_gives_zero_constants() {
        let r = bootstrap_check(&[0.0; 5], &[0.0; 5], 1e-2, 1e-2, &InitNorms::zeros(2)).unwrap();
        assert_eq!(r.rows.len(), 25);
        assert!(r.applicable().all(|row| row.realized_c == 0.0));
    }

    #[test]
    fn mean_vorticity_hand_convolution() {
        // E_k = δ_{|k|,1}: Σ_{l≠0} E_l E_{-l} = 2.
        let e = [0.0, 1.0, 0.5, 1.0, 0.0];
        let mut init = InitNorms::zeros(2);
        init.omega[2] = 1.0;
        let nu = 1e-2;
        let r = bootstrap_check(&e, &[0.0; 5], nu, 1e-2, &init).unwrap();
        let row = r
            .rows
            .iter()
            .find(|r| r.k == 0 && r.family == BootstrapFamily::VorticityMean)
            .unwrap();
        assert!((row.scaled_term - 2.0 * nu.powf(-0.5)).abs() < 1e-12);
        assert_eq!(row.realized_c, 0.0);
    }

    #[test]
    fn branch_partition_is_exclusive() {
        let kk = 20;
        let len = 2 * kk + 1;
        let r = bootstrap_check(&vec![1.0; len], &vec![1.0; len], 1e-3, 1e-2, &InitNorms::zeros(kk))
            .unwrap();
        for k in -(kk as i64)..=kk as i64 {
            let fams: Vec<BootstrapFamily> = r
                .applicable()
                .filter(|row| row.k == k && row.family.name().starts_with("temperature"))
                .map(|row| row.family)
                .collect();
            assert_eq!(fams.len(), 1, "k = {k}");
            let expected = if k == 0 {
                BootstrapFamily::TemperatureMean
            } else if 1e-2 * (k * k) as f64 <= 1.0 {
                BootstrapFamily::TemperatureLow
            } else {
                BootstrapFamily::TemperatureHigh
            };
            assert_eq!(fams[0], expected);
        }
    }

    #[test]
    fn mismatched_lengths_rejected() {
        assert!(bootstrap_check(&[0.0; 5], &[0.0; 3], 1.0, 1.0, &InitNorms::zeros(2)).is_err());
        assert!(bootstrap_check(&[1.0, 0.0, 0.0], &[0.0; 3], 1.0, 1.0, &InitNorms::zeros(1)).is_err());
    }
}
