use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Every pooling scheme the crate implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Avg,
    Rp,
    Grp,
    Bkrp,
    Ibkrp,
    Krpfs,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [Scheme::Avg, Scheme::Rp, Scheme::Grp, Scheme::Bkrp, Scheme::Ibkrp, Scheme::Krpfs];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Avg => "avg",
            Scheme::Rp => "rp",
            Scheme::Grp => "grp",
            Scheme::Bkrp => "bkrp",
            Scheme::Ibkrp => "ibkrp",
            Scheme::Krpfs => "krpfs",
        }
    }

    /// Default ordering margin.
    pub fn default_eta(self) -> f64 {
        match self {
            Scheme::Avg => 0.0,
            Scheme::Rp => 1.0,
            Scheme::Bkrp | Scheme::Ibkrp => 0.1,
            Scheme::Grp | Scheme::Krpfs => 1e-4,
        }
    }

    pub fn uses_frame_kernel(self) -> bool {
        matches!(self, Scheme::Bkrp | Scheme::Ibkrp | Scheme::Krpfs)
    }

    pub fn is_subspace(self) -> bool {
        matches!(self, Scheme::Grp | Scheme::Krpfs)
    }

    pub(crate) fn tag(self) -> u32 {
        match self {
            Scheme::Avg => 0,
            Scheme::Rp => 1,
            Scheme::Grp => 2,
            Scheme::Bkrp => 3,
            Scheme::Ibkrp => 4,
            Scheme::Krpfs => 5,
        }
    }

    pub(crate) fn from_tag(tag: u32) -> Option<Self> {
        Scheme::ALL.into_iter().find(|s| s.tag() == tag)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == lower)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scheme {s:?} (expected avg|rp|grp|bkrp|ibkrp|krpfs)")))
    }
}
