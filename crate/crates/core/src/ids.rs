//! Identifiers for satellites and user equipment.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Satellite identity: shell, orbital plane and in-plane slot.
///
/// Ordering is lexicographic on (shell, plane, slot). The textual form is
/// `shell-plane-slot`, e.g. `0-12-3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SatelliteId {
    pub shell: u16,
    pub plane: u16,
    pub slot: u16,
}

impl SatelliteId {
    pub const fn new(shell: u16, plane: u16, slot: u16) -> Self {
        Self { shell, plane, slot }
    }
}

impl fmt::Display for SatelliteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.shell, self.plane, self.slot)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed satellite id `{0}` (expected shell-plane-slot)")]
pub struct ParseSatelliteIdError(String);

impl FromStr for SatelliteId {
    type Err = ParseSatelliteIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseSatelliteIdError(s.to_string());
        let mut parts = s.split('-');
        let mut next = || -> Result<u16, ParseSatelliteIdError> {
            parts.next().ok_or_else(err)?.parse().map_err(|_| err())
        };
        let id = SatelliteId::new(next()?, next()?, next()?);
        if parts.next().is_some() {
            return Err(err());
        }
        Ok(id)
    }
}

impl Serialize for SatelliteId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SatelliteId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// User equipment identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UeId(pub u32);

impl fmt::Display for UeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
