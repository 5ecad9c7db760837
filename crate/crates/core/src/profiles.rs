//! Time-varying rate profiles for the effective spreading rate β(t) and,
//! optionally, the recovery rate γ(t).
//!
//! Profiles are immutable values. Evaluation is a pure function of time, so a
//! profile can be shared freely between threads and sweep cells.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A non-negative, bounded rate as a function of time.
#[derive(Debug, Clone, PartialEq)]
pub enum RateProfile {
    /// `value` at every time.
    Constant { value: f64 },
    /// Increasing logistic ramp `min + (max - min) / (1 + exp(-steepness (t - center)))`.
    SigmoidUp {
        min: f64,
        max: f64,
        steepness: f64,
        center: f64,
    },
    /// Decreasing logistic `(max - min) (1 - 1 / (1 + exp(-steepness (t - center))))`.
    ///
    /// Note the long-time limit is 0, not `min`.
    SigmoidDown {
        min: f64,
        max: f64,
        steepness: f64,
        center: f64,
    },
    /// `mean + amplitude cos(2 pi t / period)`.
    Cosine {
        mean: f64,
        amplitude: f64,
        period: f64,
    },
    /// Piecewise-linear interpolation through `(times[k], values[k])`.
    Table { times: Vec<f64>, values: Vec<f64> },
}

/// The effective spreading rate uses the general rate profile.
pub type BetaProfile = RateProfile;

impl RateProfile {
    pub fn constant(value: f64) -> Self {
        RateProfile::Constant { value }
    }

    /// Increasing sigmoid with the time-varying experiment parameters
    /// (β_m = 0.01, β_M = 2, a₁ = 2, c₁ = 3).
    pub fn reference_sigmoid_up() -> Self {
        RateProfile::SigmoidUp {
            min: 0.01,
            max: 2.0,
            steepness: 2.0,
            center: 3.0,
        }
    }

    /// Decreasing sigmoid with β_m = 0.01, β_M = 2, a₂ = 2, c₂ = 2.
    pub fn reference_sigmoid_down() -> Self {
        RateProfile::SigmoidDown {
            min: 0.01,
            max: 2.0,
            steepness: 2.0,
            center: 2.0,
        }
    }

    /// Cosine with c_m = 1, c_a = 1 and period T = 5.
    pub fn reference_cosine() -> Self {
        RateProfile::Cosine {
            mean: 1.0,
            amplitude: 1.0,
            period: 5.0,
        }
    }

    /// Short variant name used by the run-configuration format.
    pub fn variant_name(&self) -> &'static str {
        match self {
            RateProfile::Constant { .. } => "constant",
            RateProfile::SigmoidUp { .. } => "sigmoid_up",
            RateProfile::SigmoidDown { .. } => "sigmoid_down",
            RateProfile::Cosine { .. } => "cosine",
            RateProfile::Table { .. } => "table",
        }
    }

    /// Checks that the profile is well formed and non-negative everywhere.
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("{v} is not finite")))
            }
        };
        match self {
            RateProfile::Constant { value } => {
                finite("value", *value)?;
                if *value < 0.0 {
                    return Err(Error::invalid("value", "rate must be >= 0"));
                }
            }
            RateProfile::SigmoidUp {
                min,
                max,
                steepness,
                center,
            } => {
                for (n, v) in [("min", min), ("max", max), ("steepness", steepness), ("center", center)] {
                    finite(n, *v)?;
                }
                if *min < 0.0 || *max < 0.0 {
                    return Err(Error::invalid("min/max", "rates must be >= 0"));
                }
            }
            RateProfile::SigmoidDown {
                min,
                max,
                steepness,
                center,
            } => {
                for (n, v) in [("min", min), ("max", max), ("steepness", steepness), ("center", center)] {
                    finite(n, *v)?;
                }
                if *min < 0.0 || *max < *min {
                    return Err(Error::invalid("min/max", "need 0 <= min <= max"));
                }
            }
            RateProfile::Cosine {
                mean,
                amplitude,
                period,
            } => {
                for (n, v) in [("mean", mean), ("amplitude", amplitude), ("period", period)] {
                    finite(n, *v)?;
                }
                if *period <= 0.0 {
                    return Err(Error::invalid("period", "must be > 0"));
                }
                if *mean < amplitude.abs() {
                    return Err(Error::invalid("mean", "mean < |amplitude| makes the rate negative"));
                }
            }
            RateProfile::Table { times, values } => {
                if times.len() != values.len() {
                    return Err(Error::Shape(format!(
                        "table has {} times but {} values",
                        times.len(),
                        values.len()
                    )));
                }
                if times.len() < 2 {
                    return Err(Error::invalid("times", "table needs at least two points"));
                }
                if times.iter().chain(values).any(|v| !v.is_finite()) {
                    return Err(Error::invalid("table", "non-finite entry"));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::invalid("times", "must be strictly increasing"));
                }
                if values.iter().any(|&v| v < 0.0) {
                    return Err(Error::invalid("values", "rates must be >= 0"));
                }
            }
        }
        Ok(())
    }

    /// Whether the profile is defined on all of `[t0, t1]`.
    pub fn covers(&self, t0: f64, t1: f64) -> bool {
        match self {
            RateProfile::Table { times, .. } => {
                times.first().is_some_and(|&a| a <= t0) && times.last().is_some_and(|&b| b >= t1)
            }
            _ => true,
        }
    }

    /// An upper bound of the rate over its whole domain.
    pub fn upper_bound(&self) -> f64 {
        match self {
            RateProfile::Constant { value } => *value,
            RateProfile::SigmoidUp { min, max, .. } => min.max(*max),
            RateProfile::SigmoidDown { min, max, .. } => (max - min).abs(),
            RateProfile::Cosine {
                mean, amplitude, ..
            } => mean + amplitude.abs(),
            RateProfile::Table { values, .. } => values.iter().copied().fold(0.0, f64::max),
        }
    }

    /// Evaluates the rate at `t`.
    ///
    /// Only the `Table` variant has a bounded domain; evaluating it outside
    /// `[times[0], times[last]]` is a domain error.
    pub fn rate_at(&self, t: f64) -> Result<f64> {
        if let RateProfile::Table { times, .. } = self {
            let (lo, hi) = (times[0], times[times.len() - 1]);
            if !(lo..=hi).contains(&t) {
                return Err(Error::Domain {
                    what: "table profile time",
                    value: t,
                    lo,
                    hi,
                });
            }
        }
        Ok(self.eval(t))
    }

    /// Unchecked evaluation used inside integrators, where the model has
    /// already verified that the profile covers the horizon. Table lookups
    /// clamp `t` to the table domain.
    pub(crate) fn eval(&self, t: f64) -> f64 {
        match self {
            RateProfile::Constant { value } => *value,
            RateProfile::SigmoidUp {
                min,
                max,
                steepness,
                center,
            } => min + (max - min) / (1.0 + (-steepness * (t - center)).exp()),
            RateProfile::SigmoidDown {
                min,
                max,
                steepness,
                center,
            } => (max - min) * (1.0 - 1.0 / (1.0 + (-steepness * (t - center)).exp())),
            RateProfile::Cosine {
                mean,
                amplitude,
                period,
            } => mean + amplitude * (2.0 * PI * t / period).cos(),
            RateProfile::Table { times, values } => interp_table(times, values, t),
        }
    }
}

fn interp_table(times: &[f64], values: &[f64], t: f64) -> f64 {
    let last = times.len() - 1;
    if t <= times[0] {
        return values[0];
    }
    if t >= times[last] {
        return values[last];
    }
    // First index with times[k] > t; the segment is [k-1, k].
    let k = times.partition_point(|&x| x <= t);
    let (t0, t1) = (times[k - 1], times[k]);
    let w = (t - t0) / (t1 - t0);
    values[k - 1] + w * (values[k] - values[k - 1])
}

/// Evaluates `profile` at `t`, reporting a domain error for tables.
pub fn beta_at(profile: &BetaProfile, t: f64) -> Result<f64> {
    profile.rate_at(t)
}
