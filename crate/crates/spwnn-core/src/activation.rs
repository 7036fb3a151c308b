use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Hidden-node wavelet activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActivationKind {
    /// cos(1.75 t) * exp(-t^2 / 2)
    Morlet,
    /// exp(-t^2)
    Gaussian,
}

impl ActivationKind {
    pub fn value(self, t: f64) -> f64 {
        match self {
            ActivationKind::Morlet => (1.75 * t).cos() * (-t * t / 2.0).exp(),
            ActivationKind::Gaussian => (-t * t).exp(),
        }
    }

    /// Analytic derivative of `value` with respect to t.
    pub fn derivative(self, t: f64) -> f64 {
        match self {
            ActivationKind::Morlet => {
                (-t * t / 2.0).exp() * (-1.75 * (1.75 * t).sin() - t * (1.75 * t).cos())
            }
            ActivationKind::Gaussian => -2.0 * t * (-t * t).exp(),
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActivationKind::Morlet => "morlet",
            ActivationKind::Gaussian => "gaussian",
        })
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "morlet" => Ok(ActivationKind::Morlet),
            "gaussian" => Ok(ActivationKind::Gaussian),
            other => Err(Error::InvalidArgument {
                what: "activation",
                why: format!("{other:?} is not one of morlet, gaussian"),
            }),
        }
    }
}

/// Logistic squashing used for classification outputs.
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
