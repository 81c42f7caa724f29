//! TOML run configuration shared by every CLI subcommand.
//!
//! Parsing is strict: unknown keys are rejected and every physics parameter
//! must be given explicitly. Numerical controls that have a documented
//! automatic choice (`state.n_max`, `state.n_phi`) may be omitted.
//!
//! ```toml
//! [field]
//! kappa = 1e-4
//! omega = 0.057
//! alpha_abs = 265.0
//! phase = 0.0
//! n_cycles = 8
//! envelope = { kind = "flat" }
//!
//! [grid]
//! samples_per_cycle = 1024
//!
//! [engine]
//! kind = "sfa"
//! ip = 0.5
//! epsilon = 1e-6
//! window_cycles = 1.0
//!
//! [drive]
//! kind = "phase_averaged"
//! n_phi = 256
//!
//! [quadrature]
//! kind = "classical_limit"
//!
//! [harmonics]
//! min = 1
//! max = 31
//! window = "none"
//! ```

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dipole::{AtomParams, Engine, SfaEngine, ToyDipoleParams, ToyEngine};
use crate::error::{invalid, Error, Result};
use crate::field::{DrivingState, FieldConfig, TimeGrid};
use crate::harmonics::{QRange, Window};
use crate::phasespace::{Quadrature, QuadratureSpec};
use crate::quantum_state::truncation_rule;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub samples_per_cycle: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EngineSection {
    Sfa { ip: f64, epsilon: f64, window_cycles: f64 },
    Toy(ToyDipoleParams),
}

impl EngineSection {
    pub fn build(&self) -> Result<Engine> {
        match self {
            EngineSection::Sfa { ip, epsilon, window_cycles } => {
                let atom = AtomParams { ip: *ip, epsilon: *epsilon, window_cycles: *window_cycles };
                atom.validate()?;
                Ok(Engine::Sfa(SfaEngine::new(atom)))
            }
            EngineSection::Toy(params) => {
                params.validate()?;
                Ok(Engine::Toy(ToyEngine::new(params.clone())))
            }
        }
    }
}

/// Quantum state of the driving mode; amplitude and phase come from
/// `[field]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriveSection {
    Coherent,
    PhaseAveraged { n_phi: usize },
    Fock { n: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicsSection {
    pub min: u32,
    pub max: u32,
    pub window: Window,
}

impl HarmonicsSection {
    pub fn q_range(&self) -> Result<QRange> {
        QRange::new(self.min, self.max)
    }
}

/// Harmonic mode states to export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    pub orders: Vec<u32>,
    /// Fock-space cutoff; chosen per order from `|χ_q|²` when absent.
    pub n_max: Option<usize>,
    /// Phase samples of the phase-averaged mixture; `q · n_max + 1` when absent.
    pub n_phi: Option<usize>,
}

impl StateSection {
    pub fn n_max_for(&self, mean_photon: f64) -> usize {
        self.n_max.unwrap_or_else(|| truncation_rule(mean_photon))
    }

    pub fn n_phi_for(&self, q: u32, n_max: usize) -> usize {
        self.n_phi.unwrap_or(q as usize * n_max + 1)
    }
}

/// Square grid of Husimi samples of the driving state around the origin,
/// `points × points` over `[-extent, extent]²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HusimiSection {
    pub extent: f64,
    pub points: usize,
}

/// κ scans of Fock drives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockScanSection {
    pub n: Vec<u64>,
    pub kappa: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioId {
    #[serde(rename = "A_coherent")]
    ACoherent,
    #[serde(rename = "B_phase_averaged")]
    BPhaseAveraged,
    #[serde(rename = "C_fock_limit")]
    CFockLimit,
    #[serde(rename = "D_indistinguishability")]
    DIndistinguishability,
}

impl ScenarioId {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioId::ACoherent => "A_coherent",
            ScenarioId::BPhaseAveraged => "B_phase_averaged",
            ScenarioId::CFockLimit => "C_fock_limit",
            ScenarioId::DIndistinguishability => "D_indistinguishability",
        }
    }
}

impl std::fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub id: ScenarioId,
    pub fock_scan: Option<FockScanSection>,
}

/// A complete configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub field: FieldConfig,
    pub grid: GridSection,
    pub engine: EngineSection,
    pub drive: DriveSection,
    pub harmonics: HarmonicsSection,
    pub quadrature: Option<Quadrature>,
    pub state: Option<StateSection>,
    pub husimi: Option<HusimiSection>,
    pub scenario: Option<ScenarioSection>,
}

impl RunFile {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let file: RunFile = toml::from_str(text).map_err(|e| Error::Schema {
            file: origin.to_string(),
            reason: e.to_string().trim_end().to_string(),
        })?;
        file.validate()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        self.field.validate()?;
        if self.grid.samples_per_cycle < 2 {
            return Err(invalid("grid.samples_per_cycle", "must be >= 2"));
        }
        self.engine.build()?;
        self.driving_state()?.validate()?;
        self.harmonics.q_range()?;
        // harmonics above the grid Nyquist order cannot be resolved
        let nyquist_order = self.grid.samples_per_cycle / 2;
        if self.harmonics.max as usize > nyquist_order {
            return Err(invalid(
                "harmonics.max",
                format!("exceeds the Nyquist order {nyquist_order} of grid.samples_per_cycle"),
            ));
        }
        if let Some(Quadrature::Gaussian { radial, angular }) = self.quadrature {
            QuadratureSpec { radial, angular }.validate()?;
        }
        if let Some(state) = &self.state {
            if state.orders.is_empty() {
                return Err(invalid("state.orders", "must list at least one order"));
            }
            for (i, &q) in state.orders.iter().enumerate() {
                if q < self.harmonics.min || q > self.harmonics.max {
                    return Err(invalid(&format!("state.orders[{i}]"), "must lie inside [harmonics] min..=max"));
                }
            }
        }
        if let Some(h) = &self.husimi {
            if !(h.extent.is_finite() && h.extent > 0.0) {
                return Err(invalid("husimi.extent", "must be finite and > 0"));
            }
            if h.points < 2 {
                return Err(invalid("husimi.points", "must be >= 2"));
            }
        }
        if let Some(scan) = self.scenario.as_ref().and_then(|s| s.fock_scan.as_ref()) {
            if scan.n.is_empty() {
                return Err(invalid("scenario.fock_scan.n", "must list at least one photon number"));
            }
            if scan.kappa.len() < 3 {
                return Err(Error::InsufficientScan(scan.kappa.len()));
            }
            for (i, &k) in scan.kappa.iter().enumerate() {
                if !(k.is_finite() && k > 0.0) {
                    return Err(invalid(&format!("scenario.fock_scan.kappa[{i}]"), "must be finite and > 0"));
                }
            }
        }
        Ok(())
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::for_config(&self.field, self.grid.samples_per_cycle)
    }

    pub fn driving_state(&self) -> Result<DrivingState> {
        Ok(match self.drive {
            DriveSection::Coherent => DrivingState::coherent(self.field.alpha()),
            DriveSection::PhaseAveraged { n_phi } => DrivingState::phase_averaged(self.field.alpha_abs, n_phi),
            DriveSection::Fock { n } => DrivingState::fock(n),
        })
    }

    /// Quadrature for ensemble averages; required for non-coherent drives.
    pub fn quadrature(&self) -> Result<Quadrature> {
        self.quadrature
            .ok_or_else(|| invalid("quadrature", "section is required for phase_averaged and fock drives"))
    }

    pub fn coherent_alpha(&self) -> Complex64 {
        self.field.alpha()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[field]
kappa = 1e-4
omega = 0.057
alpha_abs = 265.0
phase = 0.0
n_cycles = 8
envelope = { kind = "flat" }

[grid]
samples_per_cycle = 64

[engine]
kind = "toy"
e_ref = 0.053
terms = [{ q = 3, c = 1.0, p = 3 }]

[drive]
kind = "coherent"

[harmonics]
min = 1
max = 9
window = "none"
"#;

    #[test]
    fn base_config_parses() {
        let f = RunFile::from_toml_str(BASE, "base").unwrap();
        assert_eq!(f.drive, DriveSection::Coherent);
        assert!(matches!(f.engine.build().unwrap(), Engine::Toy(_)));
    }

    #[test]
    fn zero_kappa_names_the_field() {
        let text = BASE.replace("kappa = 1e-4", "kappa = 0.0");
        match RunFile::from_toml_str(&text, "x") {
            Err(Error::InvalidConfig { field, .. }) => assert_eq!(field, "field.kappa"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let text = BASE.replace("[grid]\n", "[grid]\nspc = 3\n");
        let err = RunFile::from_toml_str(&text, "x").unwrap_err().to_string();
        assert!(err.contains("spc"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn missing_physics_parameter_is_an_error() {
        let text = BASE.replace("omega = 0.057\n", "");
        let err = RunFile::from_toml_str(&text, "x").unwrap_err().to_string();
        assert!(err.contains("omega"), "{err}");
    }

    #[test]
    fn sfa_engine_requires_every_parameter() {
        let text = BASE.replace(
            "kind = \"toy\"\ne_ref = 0.053\nterms = [{ q = 3, c = 1.0, p = 3 }]",
            "kind = \"sfa\"\nip = 0.5",
        );
        let err = RunFile::from_toml_str(&text, "x").unwrap_err().to_string();
        assert!(err.contains("epsilon"), "{err}");
    }

    #[test]
    fn harmonics_above_nyquist_rejected() {
        let text = BASE.replace("max = 9", "max = 40");
        match RunFile::from_toml_str(&text, "x") {
            Err(Error::InvalidConfig { field, .. }) => assert_eq!(field, "harmonics.max"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn scenario_ids_use_documented_names() {
        let text = format!("{BASE}\n[scenario]\nid = \"D_indistinguishability\"\n");
        let f = RunFile::from_toml_str(&text, "x").unwrap();
        assert_eq!(f.scenario.unwrap().id, ScenarioId::DIndistinguishability);
    }
}
