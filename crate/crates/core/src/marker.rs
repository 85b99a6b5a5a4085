//! The Rio marker label space.
//!
//! Reported markers take the values 0, 1 and 2. Re-evaluations add a fourth
//! value, 99, for activities whose documentation is insufficient to decide.
//! Only {0, 1, 2} are ordered; 99 must go through [`RioMarker::effective`]
//! before any comparison.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RioMarker {
    /// 0: adaptation not targeted.
    NotTargeted,
    /// 1: adaptation is a significant objective.
    Significant,
    /// 2: adaptation is the principal objective.
    Principal,
    /// 99: insufficient information.
    Insufficient,
}

impl RioMarker {
    pub const ALL: [RioMarker; 4] = [
        RioMarker::NotTargeted,
        RioMarker::Significant,
        RioMarker::Principal,
        RioMarker::Insufficient,
    ];

    pub fn code(self) -> u8 {
        match self {
            RioMarker::NotTargeted => 0,
            RioMarker::Significant => 1,
            RioMarker::Principal => 2,
            RioMarker::Insufficient => 99,
        }
    }

    pub fn from_code(code: i64) -> Option<RioMarker> {
        match code {
            0 => Some(RioMarker::NotTargeted),
            1 => Some(RioMarker::Significant),
            2 => Some(RioMarker::Principal),
            99 => Some(RioMarker::Insufficient),
            _ => None,
        }
    }

    /// Maps 99 to 0 and leaves the ordered values unchanged.
    pub fn effective(self) -> RioMarker {
        match self {
            RioMarker::Insufficient => RioMarker::NotTargeted,
            m => m,
        }
    }

    /// Position on the ordered scale {0, 1, 2} after the 99 → 0 mapping.
    pub fn level(self) -> u8 {
        self.effective().code()
    }

    /// True for values that may appear as a donor-reported marker.
    pub fn is_reportable(self) -> bool {
        self != RioMarker::Insufficient
    }
}

/// Free-function form of [`RioMarker::effective`].
pub fn effective_marker(m: RioMarker) -> RioMarker {
    m.effective()
}

impl fmt::Display for RioMarker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

impl FromStr for RioMarker {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        let code: i64 = trimmed
            .parse()
            .or_else(|_| trimmed.parse::<f64>().map(|v| if v.fract() == 0.0 { v as i64 } else { -1 }))
            .map_err(|_| Error::InvalidArgument(format!("marker {trimmed:?} is not an integer")))?;
        RioMarker::from_code(code).ok_or_else(|| Error::InvalidArgument("marker out of range".into()))
    }
}

impl Serialize for RioMarker {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.code())
    }
}

impl<'de> Deserialize<'de> for RioMarker {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let code = i64::deserialize(deserializer)?;
        RioMarker::from_code(code)
            .ok_or_else(|| serde::de::Error::custom(format!("marker {code} out of range")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn effective_maps_insufficient_to_zero() {
        assert_eq!(effective_marker(RioMarker::Insufficient), RioMarker::NotTargeted);
        assert_eq!(effective_marker(RioMarker::Principal), RioMarker::Principal);
        assert_eq!(effective_marker(RioMarker::NotTargeted), RioMarker::NotTargeted);
    }

    #[test]
    fn parses_codes() {
        assert_eq!("2".parse::<RioMarker>().unwrap(), RioMarker::Principal);
        assert_eq!(" 99 ".parse::<RioMarker>().unwrap(), RioMarker::Insufficient);
        assert_eq!("1.0".parse::<RioMarker>().unwrap(), RioMarker::Significant);
        assert!("3".parse::<RioMarker>().is_err());
        assert!("x".parse::<RioMarker>().is_err());
    }

    #[test]
    fn serde_uses_numeric_codes() {
        let json = serde_json::to_string(&RioMarker::Insufficient).unwrap();
        assert_eq!(json, "99");
        let back: RioMarker = serde_json::from_str("1").unwrap();
        assert_eq!(back, RioMarker::Significant);
        assert!(serde_json::from_str::<RioMarker>("5").is_err());
    }
}
