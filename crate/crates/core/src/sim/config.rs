use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{GenerationMode, PdpSpec};
use crate::detector::{DetectorKind, Heuristic};
use crate::error::{Error, Result};
use crate::heuristic::{DeParams, HeuristicParams, PsoParams, HYBRID_ITERATIONS};

/// Top-level simulation settings. Every field has a default, so `{}` is a valid file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub n_t: usize,
    pub n_r: usize,
    pub n_subcarriers: usize,
    pub m_order: usize,
    pub rho_list: Vec<f64>,
    pub ebn0_db_list: Vec<f64>,
    pub detectors: Vec<DetectorConfig>,
    /// Symbol vectors per operating point, at most.
    pub max_trials: u64,
    /// Stop an operating point once this many bit errors are seen.
    pub target_bit_errors: u64,
    pub master_seed: u64,
    pub channel_mode: GenerationMode,
    pub pdp: PdpSpec,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n_t: 4,
            n_r: 4,
            n_subcarriers: 64,
            m_order: 4,
            rho_list: vec![0.0, 0.5, 0.9],
            ebn0_db_list: vec![0.0, 4.0, 8.0, 12.0, 16.0, 20.0, 24.0],
            detectors: ["MF", "ZF", "MMSE", "ML", "PSO", "DE", "PSO-MF", "PSO-MMSE", "DE-MF", "DE-MMSE"]
                .into_iter()
                .map(|id| DetectorConfig::new(id.parse().expect("known id")))
                .collect(),
            max_trials: 1_000_000,
            target_bit_errors: 200,
            master_seed: 0,
            channel_mode: GenerationMode::IidPerSubcarrier,
            pdp: PdpSpec::default(),
        }
    }
}

impl SimulationConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        for (name, v) in [("n_t", self.n_t), ("n_r", self.n_r), ("n_subcarriers", self.n_subcarriers)] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if self.max_trials == 0 || self.target_bit_errors == 0 {
            return bad("max_trials and target_bit_errors must be at least 1".into());
        }
        if self.m_order < 4 || !self.m_order.is_power_of_two() || !self.m_order.trailing_zeros().is_multiple_of(2) {
            return bad(format!("m_order {} is not a square QAM order", self.m_order));
        }
        if self.rho_list.is_empty() || self.ebn0_db_list.is_empty() {
            return bad("rho_list and ebn0_db_list must be non-empty".into());
        }
        if let Some(r) = self.rho_list.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return bad(format!("rho {r} outside [0, 1]"));
        }
        if let Some(e) = self.ebn0_db_list.iter().find(|e| e.is_nan() || **e == f64::NEG_INFINITY) {
            return bad(format!("Eb/N0 {e} dB is not usable"));
        }
        if self.detectors.is_empty() {
            return bad("detector list is empty".into());
        }
        for d in &self.detectors {
            d.validate()?;
        }
        if self.channel_mode == GenerationMode::PdpFrequencySelective {
            self.pdp.validate()?;
            if self.pdp.n_taps > self.n_subcarriers {
                return bad(format!("{} PDP taps exceed {} subcarriers", self.pdp.n_taps, self.n_subcarriers));
            }
        }
        Ok(())
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.m_order.trailing_zeros() as usize
    }

    pub fn bits_per_trial(&self) -> u64 {
        (self.n_t * self.bits_per_symbol()) as u64
    }
}

/// One detector to simulate. Heuristic parameters left out are taken from
/// the calibrated table at the nearest tabulated correlation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub detector: DetectorKind,
    /// Overrides the row id in outputs and the detector's random stream key.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<HeuristicParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
}

impl DetectorConfig {
    pub fn new(detector: DetectorKind) -> Self {
        Self { detector, label: None, params: None, iterations: None }
    }

    pub fn with_params(mut self, params: HeuristicParams) -> Self {
        self.params = Some(params);
        self
    }

    pub fn with_iterations(mut self, n: usize) -> Self {
        self.iterations = Some(n);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn id(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.detector.id().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        let heuristic = self.detector.heuristic();
        match (heuristic, &self.params) {
            (None, Some(_)) => {
                return Err(Error::Config(format!("{} takes no heuristic parameters", self.detector)));
            }
            (Some(Heuristic::Pso), Some(HeuristicParams::De(_)))
            | (Some(Heuristic::De), Some(HeuristicParams::Pso(_))) => {
                return Err(Error::Config(format!("{} given parameters of the other heuristic", self.detector)));
            }
            (Some(_), Some(p)) => p.validate().map_err(|e| Error::Config(e.to_string()))?,
            _ => {}
        }
        if heuristic.is_none() && self.iterations.is_some() {
            return Err(Error::Config(format!("{} has no iteration budget", self.detector)));
        }
        Ok(())
    }

    /// Concrete heuristic parameters at correlation `rho`, or `None` for non-heuristic detectors.
    pub fn resolve(&self, rho: f64) -> Option<HeuristicParams> {
        let base = self.params.or_else(|| calibrated_params(self.detector, rho))?;
        Some(match self.iterations {
            Some(n) => base.with_iterations(n),
            None => base,
        })
    }
}

/// Tabulated correlations of the calibrated parameter sets.
pub const CALIBRATED_RHO: [f64; 3] = [0.0, 0.5, 0.9];

fn nearest_rho_index(rho: f64) -> usize {
    CALIBRATED_RHO
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bd), (i, &r)| {
            let d = (r - rho).abs();
            if d < bd {
                (i, d)
            } else {
                (bi, bd)
            }
        })
        .0
}

/// Calibrated parameters at 24 dB for 4×4 4-QAM with 40 members, by nearest tabulated `rho`.
pub fn calibrated_params(kind: DetectorKind, rho: f64) -> Option<HeuristicParams> {
    let i = nearest_rho_index(rho);
    let pso = |c1: [f64; 3], c2: [f64; 3], w: [f64; 3], n_iter| {
        HeuristicParams::Pso(PsoParams { c1: c1[i], c2: c2[i], w0: w[i], n_iter, ..PsoParams::default() })
    };
    let de = |f_mut: [f64; 3], f_cr: [f64; 3], n_gen| {
        HeuristicParams::De(DeParams { f_mut: f_mut[i], f_cr: f_cr[i], n_gen, ..DeParams::default() })
    };
    let h = HYBRID_ITERATIONS;
    Some(match kind {
        DetectorKind::Pso => pso([4.0; 3], [1.0, 0.5, 1.0], [1.5, 1.5, 3.5], 100),
        DetectorKind::PsoMf => pso([4.0; 3], [0.5, 0.5, 1.0], [1.5, 2.0, 2.5], h),
        DetectorKind::PsoMmse => pso([3.5, 4.0, 4.0], [0.5; 3], [2.0, 3.0, 3.0], h),
        DetectorKind::De => de([0.6, 0.8, 1.8], [0.6, 0.6, 0.8], 100),
        DetectorKind::DeMf => de([2.0; 3], [0.8, 0.7, 0.9], h),
        DetectorKind::DeMmse => de([1.7, 2.0, 2.0], [0.6, 0.7, 0.8], h),
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let cfg = SimulationConfig::default();
        cfg.validate().unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(SimulationConfig::from_json(&text).unwrap(), cfg);
        assert_eq!(SimulationConfig::from_json("{}").unwrap(), cfg);
        assert_eq!(cfg.bits_per_trial(), 8);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            r#"{"detectors": []}"#,
            r#"{"rho_list": [1.5]}"#,
            r#"{"n_t": 0}"#,
            r#"{"m_order": 8}"#,
            r#"{"bogus": 1}"#,
            r#"{"detectors": [{"detector": "MF", "iterations": 3}]}"#,
            r#"{"detectors": [{"detector": "NOPE"}]}"#,
            r#"{"detectors": [{"detector": "PSO", "params": {"algorithm": "de"}}]}"#,
            r#"{"detectors": [{"detector": "DE", "params": {"algorithm": "de", "f_mut": 3.0}}]}"#,
        ] {
            assert!(matches!(SimulationConfig::from_json(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn calibrated_lookup_by_nearest_rho() {
        let HeuristicParams::Pso(p) = calibrated_params(DetectorKind::PsoMmse, 0.45).unwrap() else { panic!() };
        assert_eq!((p.c1, p.c2, p.w0, p.n_iter), (4.0, 0.5, 3.0, 15));
        let HeuristicParams::De(d) = calibrated_params(DetectorKind::De, 1.0).unwrap() else { panic!() };
        assert_eq!((d.f_mut, d.f_cr, d.n_gen), (1.8, 0.8, 100));
        assert!(calibrated_params(DetectorKind::Ml, 0.0).is_none());
    }

    #[test]
    fn detector_overrides() {
        let text = r#"{"detector": "PSO-MMSE", "iterations": 25, "params": {"algorithm": "pso", "c1": 1.0}}"#;
        let d: DetectorConfig = serde_json::from_str(text).unwrap();
        d.validate().unwrap();
        let HeuristicParams::Pso(p) = d.resolve(0.0).unwrap() else { panic!() };
        assert_eq!((p.c1, p.c2, p.n_iter), (1.0, 2.0, 25));
        assert_eq!(DetectorConfig::new(DetectorKind::Zf).resolve(0.0), None);
    }
}
