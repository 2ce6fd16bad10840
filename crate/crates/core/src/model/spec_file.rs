//! JSON problem files.
//!
//! ```json
//! { "a": "1.4", "b": "1.3", "g": "t-0.3", "h": "t+0.3",
//!   "delta1": 1, "delta2": -1, "t0": 0, "phi": "exp(-0.5436*t)", "x0": 1 }
//! ```
//!
//! `phi` defaults to the constant `x0`, and `x0` defaults to 1.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{parse_expr, CoefficientExpr, Ivp, ParseError, ProblemSpec, Sign};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub a: String,
    pub b: String,
    pub g: String,
    pub h: String,
    pub delta1: i64,
    pub delta2: i64,
    pub t0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
}

#[derive(Debug, Error)]
pub enum SpecFileError {
    #[error("cannot read spec file: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid spec JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("field '{field}': {source}")]
    Expr {
        field: &'static str,
        #[source]
        source: ParseError,
    },
    #[error("field '{0}' must be +1 or -1")]
    BadSign(&'static str),
    #[error("field '{0}' must be a finite number")]
    NotFinite(&'static str),
}

impl SpecFile {
    pub fn from_json(text: &str) -> Result<Self, SpecFileError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SpecFileError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serializes")
    }

    pub fn spec<T: Real>(&self) -> Result<ProblemSpec<T>, SpecFileError> {
        let expr = |field: &'static str, text: &str| {
            parse_expr::<T>(text).map_err(|source| SpecFileError::Expr { field, source })
        };
        let sign = |field, v| Sign::from_int(v).ok_or(SpecFileError::BadSign(field));
        Ok(ProblemSpec {
            a: expr("a", &self.a)?,
            b: expr("b", &self.b)?,
            g: expr("g", &self.g)?,
            h: expr("h", &self.h)?,
            delta1: sign("delta1", self.delta1)?,
            delta2: sign("delta2", self.delta2)?,
            t0: finite("t0", self.t0)?,
        })
    }

    pub fn ivp<T: Real>(&self) -> Result<Ivp<T>, SpecFileError> {
        let spec = self.spec()?;
        let x0: T = finite("x0", self.x0.unwrap_or(1.0))?;
        let phi = match &self.phi {
            Some(text) => parse_expr(text).map_err(|source| SpecFileError::Expr {
                field: "phi",
                source,
            })?,
            None => CoefficientExpr::Const(x0),
        };
        Ok(Ivp { spec, phi, x0 })
    }
}

fn finite<T: Real>(field: &'static str, v: f64) -> Result<T, SpecFileError> {
    T::from_f64(v)
        .filter(|x| x.is_finite())
        .ok_or(SpecFileError::NotFinite(field))
}
