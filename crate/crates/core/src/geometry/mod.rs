//! Discrete geometry: grid domains, distance fields, Whitney decompositions.

mod domain;
mod poly;
mod whitney;

pub use domain::{DistField, DomainError, DomainSpec, GridDomain, SlitSnowflakeSpec};
pub use poly::{
    point_segment_distance, polygon_area, segment_segment_distance, Segment, SegmentKind,
};
pub use whitney::{CubeFlag, Dilation, DyadicCube, WhitneyCube, WhitneyDecomposition};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Exponent pair for the fractional energy, with the spatial dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    pub s: f64,
    pub p: f64,
    pub n: u8,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("s must lie in (0,1), got {0}")]
    BadS(f64),
    #[error("p must be positive, got {0}")]
    BadP(f64),
    #[error("dimension must be 1 or 2, got {0}")]
    BadDim(u8),
    #[error("operation requires p > 1, got p = {0}")]
    NeedsPAboveOne(f64),
    #[error("operation requires sp < n, got sp = {sp}, n = {n}")]
    NeedsSubcritical { sp: f64, n: u8 },
}

impl EnergyParams {
    pub fn new(s: f64, p: f64, n: u8) -> Result<Self, ParamError> {
        if !(s > 0.0 && s < 1.0) {
            return Err(ParamError::BadS(s));
        }
        if !(p > 0.0 && p.is_finite()) {
            return Err(ParamError::BadP(p));
        }
        if n != 1 && n != 2 {
            return Err(ParamError::BadDim(n));
        }
        Ok(Self { s, p, n })
    }

    #[inline]
    pub fn sp(&self) -> f64 {
        self.s * self.p
    }

    /// Kernel decay exponent n + sp.
    #[inline]
    pub fn kernel_exponent(&self) -> f64 {
        self.n as f64 + self.sp()
    }

    /// Sobolev exponent p* = np/(n - sp); defined only in the subcritical range.
    pub fn sobolev_exponent(&self) -> Option<f64> {
        let sp = self.sp();
        if sp < self.n as f64 {
            Some(self.n as f64 * self.p / (self.n as f64 - sp))
        } else {
            None
        }
    }

    pub fn require_p_above_one(&self) -> Result<(), ParamError> {
        if self.p > 1.0 {
            Ok(())
        } else {
            Err(ParamError::NeedsPAboveOne(self.p))
        }
    }

    pub fn require_subcritical(&self) -> Result<(), ParamError> {
        if self.sp() < self.n as f64 {
            Ok(())
        } else {
            Err(ParamError::NeedsSubcritical { sp: self.sp(), n: self.n })
        }
    }

    /// Surface measure of the unit sphere in dimension n (2 for n=1, 2π for n=2).
    pub fn sphere_measure(&self) -> f64 {
        match self.n {
            1 => 2.0,
            _ => 2.0 * std::f64::consts::PI,
        }
    }
}

/// Grid step h = 2^{-exp}. Negative exponents describe coordinate-scaled copies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DyadicStep {
    exp: i32,
}

impl DyadicStep {
    pub fn from_exp(exp: i32) -> Self {
        Self { exp }
    }

    #[inline]
    pub fn exp(&self) -> i32 {
        self.exp
    }

    #[inline]
    pub fn value(&self) -> f64 {
        2f64.powi(-self.exp)
    }

    /// Step of the twice-refined grid.
    pub fn half(&self) -> Self {
        Self { exp: self.exp + 1 }
    }

    /// Step scaled by 2^k (coordinate dilation).
    pub fn scaled(&self, k: i32) -> Self {
        Self { exp: self.exp - k }
    }
}

impl fmt::Display for DyadicStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp > 0 {
            write!(f, "1/{}", 1u128 << self.exp.min(127))
        } else {
            write!(f, "{}", 1u128 << ((-self.exp) as u32).min(127))
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("cannot parse grid step `{0}`; expected a dyadic value like \"1/64\", \"1\" or \"2\"")]
pub struct StepParseError(String);

impl FromStr for DyadicStep {
    type Err = StepParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || StepParseError(s.to_string());
        let parse_pow2 = |t: &str| -> Option<u32> {
            let v: u128 = t.trim().parse().ok()?;
            (v > 0 && v.is_power_of_two()).then(|| v.trailing_zeros())
        };
        if let Some((num, den)) = s.split_once('/') {
            let n = parse_pow2(num).ok_or_else(bad)?;
            let d = parse_pow2(den).ok_or_else(bad)?;
            Ok(Self { exp: d as i32 - n as i32 })
        } else {
            let n = parse_pow2(s).ok_or_else(bad)?;
            Ok(Self { exp: -(n as i32) })
        }
    }
}

impl Serialize for DyadicStep {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for DyadicStep {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
