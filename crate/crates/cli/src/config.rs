//! Configuration files.
//!
//! TOML with `[scenario]`, `[run]` and optional `[sweep]` sections. Decibel
//! quantities stay in decibels here and are converted once in
//! [`ConfigFile::scenario`]. A JSON file with the same layout (such as the
//! config echo of a manifest) is accepted as well.

use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use uavsense_core::beamforming::BeamformerKind;
use uavsense_core::config::units::{dbm_per_hz_to_watts_per_hz, dbsm_to_m2};
use uavsense_core::config::{AltitudeMode, ScenarioConfig};
use uavsense_core::engine::SimOptions;
use uavsense_core::fusion::FusionRule;
use uavsense_core::sweep::{SweepParam, SweepSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    pub transmit_power_w: f64,
    pub transmit_gain: f64,
    pub area_side_m: f64,
    pub uav_count: usize,
    pub noise_density_dbm_per_hz: f64,
    pub ground_rcs_dbsm: f64,
    pub target_rcs_dbsm: f64,
    pub symbols: usize,
    pub subcarriers: usize,
    pub array_side: usize,
    pub carrier_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub cp_duration_s: f64,
    pub grid_side: usize,
    pub doppler_hz: f64,
    /// Absent: lowest altitude whose footprint covers one UAV block.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub altitude_m: Option<f64>,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        let d = ScenarioConfig::default();
        Self {
            transmit_power_w: d.transmit_power,
            transmit_gain: d.transmit_gain,
            area_side_m: d.area_side,
            uav_count: d.uav_count,
            noise_density_dbm_per_hz: -174.0,
            ground_rcs_dbsm: -30.0,
            target_rcs_dbsm: 10.0,
            symbols: d.symbols_per_frame,
            subcarriers: d.subcarriers,
            array_side: d.array_side,
            carrier_frequency_hz: d.carrier_frequency,
            bandwidth_hz: d.bandwidth,
            cp_duration_s: d.cp_duration,
            grid_side: d.grid_side,
            doppler_hz: d.doppler,
            altitude_m: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub trials: usize,
    pub seed: u64,
    pub beamformer: String,
    pub fusion: String,
    pub fast_path: bool,
    /// Δ reported by `run`.
    pub delta: usize,
    pub capon_loading: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        let d = ScenarioConfig::default();
        let o = SimOptions::default();
        Self {
            trials: d.trials,
            seed: d.master_seed,
            beamformer: o.beamformer.as_str().to_owned(),
            fusion: FusionRule::default().as_str().to_owned(),
            fast_path: o.fast_path,
            delta: 0,
            capon_loading: o.capon_loading,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub param: String,
    pub values: Vec<f64>,
    #[serde(default = "all_beamformers")]
    pub beamformers: Vec<String>,
    #[serde(default = "all_fusions")]
    pub fusions: Vec<String>,
    #[serde(default)]
    pub ground_rcs_dbsm: Vec<f64>,
    #[serde(default = "zero_delta")]
    pub deltas: Vec<usize>,
}

fn all_beamformers() -> Vec<String> {
    BeamformerKind::ALL.iter().map(|b| b.as_str().to_owned()).collect()
}

fn all_fusions() -> Vec<String> {
    FusionRule::ALL.iter().map(|f| f.as_str().to_owned()).collect()
}

fn zero_delta() -> Vec<usize> {
    vec![0]
}

impl SweepSection {
    pub fn from_spec(spec: &SweepSpec) -> Self {
        Self {
            param: spec.param.as_str().to_owned(),
            values: spec.values.clone(),
            beamformers: spec.beamformers.iter().map(|b| b.as_str().to_owned()).collect(),
            fusions: spec.fusions.iter().map(|f| f.as_str().to_owned()).collect(),
            ground_rcs_dbsm: spec.ground_rcs_dbsm.clone(),
            deltas: spec.deltas.clone(),
        }
    }

    pub fn spec(&self) -> anyhow::Result<SweepSpec> {
        let spec = SweepSpec {
            param: self.param.parse::<SweepParam>()?,
            values: self.values.clone(),
            beamformers: self
                .beamformers
                .iter()
                .map(|b| b.parse())
                .collect::<Result<_, _>>()
                .context("sweep.beamformers")?,
            fusions: self
                .fusions
                .iter()
                .map(|f| f.parse())
                .collect::<Result<_, _>>()
                .context("sweep.fusions")?,
            ground_rcs_dbsm: self.ground_rcs_dbsm.clone(),
            deltas: self.deltas.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub scenario: ScenarioSection,
    pub run: RunSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

impl ConfigFile {
    pub fn from_toml_str(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_json_str(text: &str) -> anyhow::Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        };
        parsed.with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_toml_string(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Resolved and validated scenario in SI units.
    pub fn scenario(&self) -> anyhow::Result<ScenarioConfig> {
        let s = &self.scenario;
        let config = ScenarioConfig {
            transmit_power: s.transmit_power_w,
            transmit_gain: s.transmit_gain,
            area_side: s.area_side_m,
            uav_count: s.uav_count,
            noise_density: dbm_per_hz_to_watts_per_hz(s.noise_density_dbm_per_hz),
            ground_rcs: dbsm_to_m2(s.ground_rcs_dbsm),
            target_rcs: dbsm_to_m2(s.target_rcs_dbsm),
            symbols_per_frame: s.symbols,
            subcarriers: s.subcarriers,
            array_side: s.array_side,
            carrier_frequency: s.carrier_frequency_hz,
            bandwidth: s.bandwidth_hz,
            cp_duration: s.cp_duration_s,
            grid_side: s.grid_side,
            doppler: s.doppler_hz,
            altitude: s.altitude_m.map_or(AltitudeMode::DerivedFromCoverage, AltitudeMode::Explicit),
            trials: self.run.trials,
            master_seed: self.run.seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn options(&self) -> anyhow::Result<SimOptions> {
        let loading = self.run.capon_loading;
        if !(loading.is_finite() && loading > 0.0) {
            bail!("invalid value for `run.capon_loading`: must be finite and > 0, got {loading}");
        }
        Ok(SimOptions {
            beamformer: self.beamformer()?,
            fast_path: self.run.fast_path,
            capon_loading: loading,
            ..SimOptions::default()
        })
    }

    pub fn beamformer(&self) -> anyhow::Result<BeamformerKind> {
        Ok(self.run.beamformer.parse()?)
    }

    pub fn fusion(&self) -> anyhow::Result<FusionRule> {
        Ok(self.run.fusion.parse()?)
    }
}
