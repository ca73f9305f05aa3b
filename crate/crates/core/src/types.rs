//! Parameter and gradient containers plus optimizer hyperparameters.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::{Beta1Schedule, LrSchedule};

fn first_non_finite(values: &[f64]) -> Option<usize> {
    values.iter().position(|v| !v.is_finite())
}

macro_rules! flat_vector {
    ($name:ident, $what:literal) => {
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(Vec<f64>);

        impl $name {
            /// Wraps `values`, rejecting empty or non-finite input.
            pub fn new(values: Vec<f64>) -> Result<Self> {
                if values.is_empty() {
                    return Err(Error::Shape {
                        what: $what,
                        expected: 1,
                        got: 0,
                    });
                }
                if let Some(index) = first_non_finite(&values) {
                    return Err(Error::NonFinite { what: $what, index });
                }
                Ok(Self(values))
            }

            pub fn zeros(n: usize) -> Self {
                Self(vec![0.0; n])
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }

            pub fn into_vec(self) -> Vec<f64> {
                self.0
            }

            /// Index of the first NaN/Inf entry, if any.
            pub fn first_non_finite(&self) -> Option<usize> {
                first_non_finite(&self.0)
            }
        }

        impl Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.0
            }
        }

        impl From<$name> for Vec<f64> {
            fn from(v: $name) -> Vec<f64> {
                v.0
            }
        }
    };
}

flat_vector!(ParamVector, "parameters");
flat_vector!(GradVector, "gradient");

/// Optimizer hyperparameters.
///
/// `delta` is AGD's auto-switch threshold; the additive-stabilizer optimizers
/// (Adam, AdamW, AdaBelief) read it as their epsilon. SGD reads `beta1` as
/// its momentum coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperParams {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub delta: f64,
    #[serde(default)]
    pub weight_decay: f64,
    #[serde(default)]
    pub lr_schedule: LrSchedule,
    #[serde(default)]
    pub beta1_schedule: Beta1Schedule,
    /// AdaBelief only: add epsilon inside the second-moment EMA, as the
    /// published implementation does.
    #[serde(default = "default_true")]
    pub belief_eps_inside: bool,
}

fn default_true() -> bool {
    true
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            alpha: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            delta: 1e-8,
            weight_decay: 0.0,
            lr_schedule: LrSchedule::Constant,
            beta1_schedule: Beta1Schedule::Constant,
            belief_eps_inside: true,
        }
    }
}

impl HyperParams {
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_betas(mut self, beta1: f64, beta2: f64) -> Self {
        self.beta1 = beta1;
        self.beta2 = beta2;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_weight_decay(mut self, weight_decay: f64) -> Self {
        self.weight_decay = weight_decay;
        self
    }

    pub fn with_lr_schedule(mut self, schedule: LrSchedule) -> Self {
        self.lr_schedule = schedule;
        self
    }

    pub fn with_beta1_schedule(mut self, schedule: Beta1Schedule) -> Self {
        self.beta1_schedule = schedule;
        self
    }

    /// Checks the ranges every optimizer relies on. The error names the field.
    pub fn validate(&self) -> Result<()> {
        let finite = |field: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, "must be finite"))
            }
        };
        finite("alpha", self.alpha)?;
        finite("beta1", self.beta1)?;
        finite("beta2", self.beta2)?;
        finite("delta", self.delta)?;
        finite("weight_decay", self.weight_decay)?;
        if self.alpha <= 0.0 {
            return Err(Error::config("alpha", "must be > 0"));
        }
        if !(0.0..1.0).contains(&self.beta1) {
            return Err(Error::config("beta1", "must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::config("beta2", "must lie in [0, 1)"));
        }
        if self.delta <= 0.0 {
            return Err(Error::config("delta", "must be > 0"));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::config("weight_decay", "must be >= 0"));
        }
        self.lr_schedule.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(matches!(
            ParamVector::new(vec![]),
            Err(Error::Shape { .. })
        ));
        match GradVector::new(vec![1.0, f64::NAN]) {
            Err(Error::NonFinite { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validate_names_the_field() {
        let cases = [
            (HyperParams::default().with_delta(0.0), "delta"),
            (HyperParams::default().with_alpha(-1.0), "alpha"),
            (HyperParams::default().with_betas(1.0, 0.999), "beta1"),
            (HyperParams::default().with_betas(0.9, 1.0), "beta2"),
            (HyperParams::default().with_weight_decay(-0.1), "weight_decay"),
        ];
        for (hp, name) in cases {
            match hp.validate() {
                Err(Error::Config { field, .. }) => assert_eq!(field, name),
                other => panic!("{name}: unexpected {other:?}"),
            }
        }
        HyperParams::default().validate().unwrap();
    }
}
