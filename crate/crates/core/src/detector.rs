use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Every detector the toolkit can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DetectorKind {
    #[serde(rename = "MF")]
    Mf,
    #[serde(rename = "ZF")]
    Zf,
    #[serde(rename = "MMSE")]
    Mmse,
    #[serde(rename = "ML")]
    Ml,
    #[serde(rename = "PSO")]
    Pso,
    #[serde(rename = "DE")]
    De,
    #[serde(rename = "PSO-MF")]
    PsoMf,
    #[serde(rename = "PSO-MMSE")]
    PsoMmse,
    #[serde(rename = "DE-MF")]
    DeMf,
    #[serde(rename = "DE-MMSE")]
    DeMmse,
}

/// Which heuristic drives a population-based detector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Heuristic {
    Pso,
    De,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 10] = [
        Self::Mf,
        Self::Zf,
        Self::Mmse,
        Self::Ml,
        Self::Pso,
        Self::De,
        Self::PsoMf,
        Self::PsoMmse,
        Self::DeMf,
        Self::DeMmse,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Self::Mf => "MF",
            Self::Zf => "ZF",
            Self::Mmse => "MMSE",
            Self::Ml => "ML",
            Self::Pso => "PSO",
            Self::De => "DE",
            Self::PsoMf => "PSO-MF",
            Self::PsoMmse => "PSO-MMSE",
            Self::DeMf => "DE-MF",
            Self::DeMmse => "DE-MMSE",
        }
    }

    pub fn heuristic(self) -> Option<Heuristic> {
        match self {
            Self::Pso | Self::PsoMf | Self::PsoMmse => Some(Heuristic::Pso),
            Self::De | Self::DeMf | Self::DeMmse => Some(Heuristic::De),
            _ => None,
        }
    }

    pub fn is_hybrid(self) -> bool {
        matches!(self, Self::PsoMf | Self::PsoMmse | Self::DeMf | Self::DeMmse)
    }

    /// Linear detector that seeds a hybrid, or the detector itself if linear.
    pub fn linear_part(self) -> Option<crate::linear::LinearKind> {
        use crate::linear::LinearKind;
        match self {
            Self::Mf | Self::PsoMf | Self::DeMf => Some(LinearKind::Mf),
            Self::Zf => Some(LinearKind::Zf),
            Self::Mmse | Self::PsoMmse | Self::DeMmse => Some(LinearKind::Mmse),
            _ => None,
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Self::ALL
            .into_iter()
            .find(|k| k.id().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown detector `{s}`")))
    }
}
