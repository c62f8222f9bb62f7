use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A scalar coefficient evaluated at physical coordinates.
pub trait Coefficient: Sync {
    fn value(&self, x: f64) -> f64;

    /// Lower and upper bounds over the whole line; errors unless positive and finite.
    fn bounds(&self) -> Result<(f64, f64)>;
}

/// A 1-periodic coefficient profile on the unit cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientProfile {
    Constant {
        value: f64,
    },
    /// `amplitude · sin(2πy) + offset`
    Sine {
        amplitude: f64,
        offset: f64,
    },
    /// `values[i]` on `[breakpoints[i], breakpoints[i + 1])`, wrapping at 1.
    PiecewiseConstant {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    /// Samples at `y_j = j / n`, linearly interpolated and wrapped.
    Sampled {
        samples: Vec<f64>,
    },
}

impl CoefficientProfile {
    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    pub fn sine(amplitude: f64, offset: f64) -> Self {
        Self::Sine { amplitude, offset }
    }

    /// The profile `a(y) = sin(2πy) + 2` used throughout the experiments.
    pub fn reference_sine() -> Self {
        Self::sine(1.0, 2.0)
    }

    pub fn eval(&self, y: f64) -> f64 {
        let y = y - y.floor();
        match self {
            Self::Constant { value } => *value,
            Self::Sine { amplitude, offset } => amplitude * (2.0 * PI * y).sin() + offset,
            Self::PiecewiseConstant {
                breakpoints,
                values,
            } => {
                let idx = breakpoints.partition_point(|&b| b <= y);
                values[idx.saturating_sub(1)]
            }
            Self::Sampled { samples } => {
                let n = samples.len();
                let t = y * n as f64;
                let j = (t.floor() as usize).min(n - 1);
                let frac = t - j as f64;
                samples[j] * (1.0 - frac) + samples[(j + 1) % n] * frac
            }
        }
    }

    /// Lower and upper bounds `(a0, a1)`; errors unless `0 < a0 ≤ a1 < ∞`.
    pub fn bounds(&self) -> Result<(f64, f64)> {
        let (lo, hi) = match self {
            Self::Constant { value } => (*value, *value),
            Self::Sine { amplitude, offset } => (offset - amplitude.abs(), offset + amplitude.abs()),
            Self::PiecewiseConstant {
                breakpoints,
                values,
            } => {
                if breakpoints.is_empty() || breakpoints.len() != values.len() {
                    return Err(Error::InvalidCoefficient(
                        "piecewise profile needs one value per breakpoint".into(),
                    ));
                }
                if breakpoints[0] != 0.0
                    || breakpoints.windows(2).any(|w| w[1] <= w[0])
                    || *breakpoints.last().unwrap() >= 1.0
                {
                    return Err(Error::InvalidCoefficient(
                        "breakpoints must start at 0 and increase strictly inside [0, 1)".into(),
                    ));
                }
                min_max(values)
            }
            Self::Sampled { samples } => {
                if samples.is_empty() {
                    return Err(Error::InvalidCoefficient("no samples".into()));
                }
                min_max(samples)
            }
        };
        if !(lo > 0.0) || !hi.is_finite() {
            return Err(Error::InvalidCoefficient(format!(
                "profile must stay in (0, ∞), got range [{lo}, {hi}]"
            )));
        }
        Ok((lo, hi))
    }

    /// Whether the profile is identically 1.
    pub fn is_unit(&self) -> bool {
        match self {
            Self::Constant { value } => *value == 1.0,
            Self::Sine { amplitude, offset } => *amplitude == 0.0 && *offset == 1.0,
            Self::PiecewiseConstant { values, .. } => values.iter().all(|&v| v == 1.0),
            Self::Sampled { samples } => samples.iter().all(|&v| v == 1.0),
        }
    }
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

impl Coefficient for CoefficientProfile {
    fn value(&self, x: f64) -> f64 {
        self.eval(x)
    }

    fn bounds(&self) -> Result<(f64, f64)> {
        CoefficientProfile::bounds(self)
    }
}

/// `x ↦ profile(x / ε)`, the ε-periodic coefficient on the physical domain.
#[derive(Clone, Copy, Debug)]
pub struct Scaled<'a> {
    pub profile: &'a CoefficientProfile,
    pub epsilon: f64,
}

impl Coefficient for Scaled<'_> {
    fn value(&self, x: f64) -> f64 {
        self.profile.eval(x / self.epsilon)
    }

    fn bounds(&self) -> Result<(f64, f64)> {
        self.profile.bounds()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn profiles() -> Vec<CoefficientProfile> {
        vec![
            CoefficientProfile::constant(1.5),
            CoefficientProfile::reference_sine(),
            CoefficientProfile::PiecewiseConstant {
                breakpoints: vec![0.0, 0.3, 0.7],
                values: vec![1.0, 4.0, 2.0],
            },
            CoefficientProfile::Sampled {
                samples: vec![1.0, 2.0, 3.0, 1.5],
            },
        ]
    }

    proptest! {
        #[test]
        fn profiles_are_periodic_and_bounded(y in -5.0f64..5.0, shift in -3i32..3) {
            for p in profiles() {
                let (lo, hi) = p.bounds().unwrap();
                let v = p.eval(y);
                prop_assert!((v - p.eval(y + shift as f64)).abs() < 1e-9);
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn evaluates_each_kind() {
        let sine = CoefficientProfile::reference_sine();
        assert!((sine.eval(0.25) - 3.0).abs() < 1e-15);
        let pw = &profiles()[2];
        assert_eq!(pw.eval(0.0), 1.0);
        assert_eq!(pw.eval(0.3), 4.0);
        assert_eq!(pw.eval(0.95), 2.0);
        let sampled = &profiles()[3];
        assert!((sampled.eval(0.125) - 1.5).abs() < 1e-15);
        // wraps between the last and first samples
        assert!((sampled.eval(0.875) - 1.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_positive_profiles() {
        assert!(CoefficientProfile::constant(0.0).bounds().is_err());
        assert!(CoefficientProfile::sine(2.0, 1.0).bounds().is_err());
        let bad = CoefficientProfile::PiecewiseConstant {
            breakpoints: vec![0.0, 0.5],
            values: vec![1.0, -1.0],
        };
        assert!(matches!(bad.bounds(), Err(Error::InvalidCoefficient(_))));
        let unsorted = CoefficientProfile::PiecewiseConstant {
            breakpoints: vec![0.0, 0.6, 0.5],
            values: vec![1.0, 1.0, 1.0],
        };
        assert!(unsorted.bounds().is_err());
    }

    #[test]
    fn scaled_profile_is_eps_periodic() {
        let p = CoefficientProfile::reference_sine();
        let s = Scaled {
            profile: &p,
            epsilon: 0.02,
        };
        assert!((s.value(0.005) - p.eval(0.25)).abs() < 1e-12);
        assert!((s.value(0.013) - s.value(0.033)).abs() < 1e-12);
    }
}
