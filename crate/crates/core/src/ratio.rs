use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A prefix ratio expressed in whole tenths (1 = 10%, 9 = 90%).
///
/// Stored as an integer so that boundary arithmetic never goes through
/// floating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ratio(u8);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid prefix ratio {0:?}: expected one of 0.1, 0.2, ..., 0.9")]
pub struct InvalidRatio(pub String);

impl Ratio {
    pub const MIN_TENTHS: u8 = 1;
    pub const MAX_TENTHS: u8 = 9;

    pub fn from_tenths(tenths: u8) -> Result<Self, InvalidRatio> {
        if (Self::MIN_TENTHS..=Self::MAX_TENTHS).contains(&tenths) {
            Ok(Ratio(tenths))
        } else {
            Err(InvalidRatio(format!("{tenths}/10")))
        }
    }

    /// The nine default ratios, 0.1 through 0.9.
    pub fn all() -> Vec<Ratio> {
        (Self::MIN_TENTHS..=Self::MAX_TENTHS).map(Ratio).collect()
    }

    pub fn tenths(self) -> u8 {
        self.0
    }

    /// Zero-based column index in a nine-column grid.
    pub fn index(self) -> usize {
        usize::from(self.0 - 1)
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0) / 10.0
    }

    /// floor(n * tenths / 10), computed in integers.
    pub fn boundary(self, char_count: usize) -> usize {
        char_count * usize::from(self.0) / 10
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0.{}", self.0)
    }
}

impl FromStr for Ratio {
    type Err = InvalidRatio;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        let value: f64 = trimmed
            .parse()
            .map_err(|_| InvalidRatio(trimmed.to_string()))?;
        Ratio::try_from(value).map_err(|_| InvalidRatio(trimmed.to_string()))
    }
}

impl TryFrom<f64> for Ratio {
    type Error = InvalidRatio;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        let scaled = value * 10.0;
        let rounded = scaled.round();
        if !value.is_finite() || (scaled - rounded).abs() > 1e-9 {
            return Err(InvalidRatio(value.to_string()));
        }
        if !(f64::from(Self::MIN_TENTHS)..=f64::from(Self::MAX_TENTHS)).contains(&rounded) {
            return Err(InvalidRatio(value.to_string()));
        }
        Ok(Ratio(rounded as u8))
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = f64::deserialize(deserializer)?;
        Ratio::try_from(value).map_err(serde::de::Error::custom)
    }
}

/// Parses a comma-separated ratio list such as `0.1,0.5,0.9`.
pub fn parse_ratio_list(s: &str) -> Result<Vec<Ratio>, InvalidRatio> {
    let mut ratios = s
        .split(',')
        .filter(|part| !part.trim().is_empty())
        .map(Ratio::from_str)
        .collect::<Result<Vec<_>, _>>()?;
    ratios.sort();
    ratios.dedup();
    if ratios.is_empty() {
        return Err(InvalidRatio(s.to_string()));
    }
    Ok(ratios)
}
