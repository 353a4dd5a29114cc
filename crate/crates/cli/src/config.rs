//! Job configuration: one JSON document describing the optics, both
//! apertures with their grid resolutions and intensities, the solver
//! settings, and where artifacts go. Unknown keys are rejected everywhere.

use serde::{Deserialize, Serialize};

use biref_core::grid::{IntensityModel, NormalizationPolicy};
use biref_core::optics::{OpticalConfig, SourceAperture, TargetAperture};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub optical: OpticalConfig,
    pub source: SourceSection,
    pub target: TargetSection,
    pub solver: SolverSection,
    pub outputs: OutputsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub aperture: SourceAperture,
    pub resolution: SourceResolution,
    pub intensity: IntensityModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceResolution {
    pub n_mz: usize,
    pub n_phi: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub aperture: TargetAperture,
    pub resolution: TargetResolution,
    pub intensity: IntensityModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetResolution {
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tolerance: f64,
    pub normalization: NormalizationPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSection {
    pub directory: String,
    /// `[n_u, n_v]` samples per mesh axis.
    pub mesh_resolution: [usize; 2],
}

impl JobConfig {
    /// Parses and re-runs the module invariants that serde cannot express
    /// (`delta * ell = 1/2`, aperture ordering, positive resolutions).
    pub fn from_json(text: &str) -> Result<Self, String> {
        let cfg: JobConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        OpticalConfig::from_parts(
            cfg.optical.ell,
            cfg.optical.delta,
            cfg.optical.d,
            cfg.optical.gauge,
        )
        .map_err(|e| e.to_string())?;
        cfg.source.aperture.validate().map_err(|e| e.to_string())?;
        cfg.target.aperture.validate().map_err(|e| e.to_string())?;
        if cfg.source.resolution.n_mz == 0
            || cfg.source.resolution.n_phi == 0
            || cfg.target.resolution.nx == 0
            || cfg.target.resolution.ny == 0
        {
            return Err("grid resolutions must be positive".into());
        }
        if cfg.outputs.mesh_resolution[0] < 2 || cfg.outputs.mesh_resolution[1] < 2 {
            return Err("mesh_resolution entries must be >= 2".into());
        }
        if !(cfg.solver.tolerance > 0.0) {
            return Err("solver.tolerance must be positive".into());
        }
        Ok(cfg)
    }
}
