//! Scalar coefficient functions shared by generators, envelopes, transforms
//! and terminal/obstacle specifications.
//!
//! The builtin variants are serializable so that scenario files can name
//! them; `Custom` carries an arbitrary closure and is in-process only.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// A real function of one real variable (time or state).
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarFn {
    /// `value`
    Constant { value: f64 },
    /// `intercept + slope * x`
    Affine { intercept: f64, slope: f64 },
    /// `intercept + slope * |x|`
    AbsAffine { intercept: f64, slope: f64 },
    /// `scale * x^exponent`, meant for `x > 0`
    Power { scale: f64, exponent: f64 },
    /// `scale * exp(rate * x)`
    Exp { scale: f64, rate: f64 },
    /// `intercept + slope * (1 + |x|) ln(1 + |x|)`
    AbsXLogX { intercept: f64, slope: f64 },
    #[serde(skip)]
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl ScalarFn {
    pub fn constant(value: f64) -> Self {
        ScalarFn::Constant { value }
    }

    pub fn zero() -> Self {
        ScalarFn::Constant { value: 0.0 }
    }

    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        ScalarFn::Custom(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ScalarFn::Constant { value } => *value,
            ScalarFn::Affine { intercept, slope } => intercept + slope * x,
            ScalarFn::AbsAffine { intercept, slope } => intercept + slope * x.abs(),
            ScalarFn::Power { scale, exponent } => scale * x.powf(*exponent),
            ScalarFn::Exp { scale, rate } => scale * (rate * x).exp(),
            ScalarFn::AbsXLogX { intercept, slope } => {
                let a = 1.0 + x.abs();
                intercept + slope * a * a.ln()
            }
            ScalarFn::Custom(f) => f(x),
        }
    }

    /// `Some(v)` when the function is the constant `v`.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            ScalarFn::Constant { value } => Some(*value),
            ScalarFn::Affine { intercept, slope }
            | ScalarFn::AbsAffine { intercept, slope }
            | ScalarFn::AbsXLogX { intercept, slope }
                if *slope == 0.0 =>
            {
                Some(*intercept)
            }
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarFn::Constant { value } => write!(f, "Constant({value})"),
            ScalarFn::Affine { intercept, slope } => write!(f, "Affine({intercept} + {slope}*x)"),
            ScalarFn::AbsAffine { intercept, slope } => {
                write!(f, "AbsAffine({intercept} + {slope}*|x|)")
            }
            ScalarFn::Power { scale, exponent } => write!(f, "Power({scale}*x^{exponent})"),
            ScalarFn::Exp { scale, rate } => write!(f, "Exp({scale}*e^({rate}x))"),
            ScalarFn::AbsXLogX { intercept, slope } => {
                write!(f, "AbsXLogX({intercept} + {slope}*(1+|x|)ln(1+|x|))")
            }
            ScalarFn::Custom(_) => write!(f, "Custom(<closure>)"),
        }
    }
}

impl From<f64> for ScalarFn {
    fn from(value: f64) -> Self {
        ScalarFn::Constant { value }
    }
}

/// A real function of the Brownian state vector. Builtins read the first
/// component only.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateFn {
    /// `scale * x + shift`
    Affine { scale: f64, shift: f64 },
    /// `a * x^2 + b * x + c`
    Quadratic { a: f64, b: f64, c: f64 },
    /// `max(scale * x + shift, floor)`
    MaxAffine { scale: f64, shift: f64, floor: f64 },
    /// `shift + scale * exp(rate * x)`
    Exp { scale: f64, rate: f64, shift: f64 },
    /// `scale * |x| + shift`
    Abs { scale: f64, shift: f64 },
    /// `shift + scale * sin(freq * x)`
    Sin { scale: f64, freq: f64, shift: f64 },
    #[serde(skip)]
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl StateFn {
    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        StateFn::Custom(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, state: &[f64]) -> f64 {
        let x = state.first().copied().unwrap_or(0.0);
        match self {
            StateFn::Affine { scale, shift } => scale * x + shift,
            StateFn::Quadratic { a, b, c } => a * x * x + b * x + c,
            StateFn::MaxAffine { scale, shift, floor } => (scale * x + shift).max(*floor),
            StateFn::Exp { scale, rate, shift } => shift + scale * (rate * x).exp(),
            StateFn::Abs { scale, shift } => scale * x.abs() + shift,
            StateFn::Sin { scale, freq, shift } => shift + scale * (freq * x).sin(),
            StateFn::Custom(f) => f(state),
        }
    }
}

impl fmt::Debug for StateFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateFn::Affine { scale, shift } => write!(f, "Affine({scale}*B + {shift})"),
            StateFn::Quadratic { a, b, c } => write!(f, "Quadratic({a}*B^2 + {b}*B + {c})"),
            StateFn::MaxAffine { scale, shift, floor } => {
                write!(f, "MaxAffine(max({scale}*B + {shift}, {floor}))")
            }
            StateFn::Exp { scale, rate, shift } => write!(f, "Exp({shift} + {scale}*e^({rate}B))"),
            StateFn::Abs { scale, shift } => write!(f, "Abs({scale}*|B| + {shift})"),
            StateFn::Sin { scale, freq, shift } => write!(f, "Sin({shift} + {scale}*sin({freq}B))"),
            StateFn::Custom(_) => write!(f, "Custom(<closure>)"),
        }
    }
}
