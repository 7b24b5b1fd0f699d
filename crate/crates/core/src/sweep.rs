//! Parameter sweeps and the named figure presets.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::beamforming::BeamformerKind;
use crate::config::units::{dbsm_to_m2, m2_to_dbsm};
use crate::config::{AltitudeMode, ScenarioConfig};
use crate::engine::{BatchStats, SimOptions, Simulator};
use crate::error::{Error, Result};
use crate::fusion::FusionRule;
use crate::geometry::derive_altitude;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    /// d with L, U and n fixed; h re-derived so each UAV keeps its block.
    CellSizeConstantCoverage,
    /// d with ℓ and h fixed; L = round(ℓ/d).
    CellSizeConstantArea,
    /// Array side n; h re-derived.
    Antennas,
    /// Explicit common altitude h.
    Altitude,
    /// σ_G in dBsm.
    GroundRcs,
}

impl SweepParam {
    pub const ALL: [SweepParam; 5] = [
        SweepParam::CellSizeConstantCoverage,
        SweepParam::CellSizeConstantArea,
        SweepParam::Antennas,
        SweepParam::Altitude,
        SweepParam::GroundRcs,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParam::CellSizeConstantCoverage => "cell_size_constant_coverage",
            SweepParam::CellSizeConstantArea => "cell_size_constant_area",
            SweepParam::Antennas => "antennas",
            SweepParam::Altitude => "altitude",
            SweepParam::GroundRcs => "ground_rcs",
        }
    }
}

impl core::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepParam::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig {
                field: "sweep.param",
                reason: format!("unknown sweep parameter `{s}`"),
            })
    }
}

/// Applies one sweep value to `base`. The result is validated.
pub fn apply(base: &ScenarioConfig, param: SweepParam, value: f64) -> Result<ScenarioConfig> {
    let mut cfg = base.clone();
    match param {
        SweepParam::CellSizeConstantCoverage => {
            cfg.area_side = value * cfg.grid_side as f64;
            cfg.altitude = AltitudeMode::DerivedFromCoverage;
        }
        SweepParam::CellSizeConstantArea => {
            if !(value.is_finite() && value > 0.0) {
                return Err(invalid_value(param, value));
            }
            cfg.altitude = AltitudeMode::Explicit(base.altitude()?);
            cfg.grid_side = libm::round(cfg.area_side / value) as usize;
        }
        SweepParam::Antennas => {
            if !(value >= 2.0 && value.fract() == 0.0) {
                return Err(invalid_value(param, value));
            }
            cfg.array_side = value as usize;
            cfg.altitude = AltitudeMode::DerivedFromCoverage;
        }
        SweepParam::Altitude => cfg.altitude = AltitudeMode::Explicit(value),
        SweepParam::GroundRcs => cfg.ground_rcs = dbsm_to_m2(value),
    }
    cfg.validate()?;
    cfg.altitude()?;
    Ok(cfg)
}

fn invalid_value(param: SweepParam, value: f64) -> Error {
    Error::InvalidConfig {
        field: "sweep.values",
        reason: format!("{value} is not a valid {} value", param.as_str()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub beamformers: Vec<BeamformerKind>,
    pub fusions: Vec<FusionRule>,
    /// σ_G values in dBsm; empty keeps the base value.
    pub ground_rcs_dbsm: Vec<f64>,
    pub deltas: Vec<usize>,
}

pub const PRESETS: [&str; 5] = ["fig3", "fig4", "fig5", "fig6", "fig7"];

impl SweepSpec {
    /// Named figure preset. Altitude presets depend on `base`.
    pub fn preset(name: &str, base: &ScenarioConfig) -> Result<Self> {
        let both_bf = vec![BeamformerKind::LeastSquares, BeamformerKind::Capon];
        let both_fusion = FusionRule::ALL.to_vec();
        let spec = match name {
            "fig3" => SweepSpec {
                param: SweepParam::CellSizeConstantCoverage,
                values: vec![0.5, 1.0, 2.0, 4.0, 8.0, 16.0],
                beamformers: both_bf,
                fusions: both_fusion,
                ground_rcs_dbsm: vec![-30.0, -10.0, 0.0],
                deltas: vec![0],
            },
            "fig4" => SweepSpec {
                param: SweepParam::CellSizeConstantArea,
                values: vec![2.5, 3.125, 5.0, 6.25, 12.5, 25.0],
                beamformers: both_bf,
                fusions: both_fusion,
                ground_rcs_dbsm: vec![-30.0, -10.0, 0.0],
                deltas: vec![0],
            },
            "fig5" => SweepSpec {
                param: SweepParam::CellSizeConstantCoverage,
                values: vec![0.5, 1.0, 2.0, 5.0],
                beamformers: vec![BeamformerKind::Capon],
                fusions: vec![FusionRule::PrenormAverage],
                ground_rcs_dbsm: vec![-30.0, -20.0, -10.0, 0.0],
                deltas: vec![0, 1, 2],
            },
            "fig6" => SweepSpec {
                param: SweepParam::Antennas,
                values: vec![4.0, 6.0, 8.0, 10.0, 12.0, 16.0],
                beamformers: both_bf,
                fusions: vec![FusionRule::Average],
                ground_rcs_dbsm: vec![-30.0, -10.0, 0.0],
                deltas: vec![0],
            },
            "fig7" => SweepSpec {
                param: SweepParam::Altitude,
                values: altitude_regimes(base)?.into_iter().flatten().collect(),
                beamformers: vec![BeamformerKind::Capon],
                fusions: vec![FusionRule::Average],
                ground_rcs_dbsm: vec![-30.0, -10.0],
                deltas: vec![0, 1, 2],
            },
            other => {
                return Err(Error::InvalidConfig {
                    field: "preset",
                    reason: format!("unknown preset `{other}`, expected one of {}", PRESETS.join(", ")),
                })
            }
        };
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |field: &'static str| Error::InvalidConfig {
            field,
            reason: String::from("must not be empty"),
        };
        if self.values.is_empty() {
            return Err(empty("sweep.values"));
        }
        if self.beamformers.is_empty() {
            return Err(empty("sweep.beamformers"));
        }
        if self.fusions.is_empty() {
            return Err(empty("sweep.fusions"));
        }
        if self.deltas.is_empty() {
            return Err(empty("sweep.deltas"));
        }
        if let Some(d) = self.deltas.iter().find(|d| **d > 2) {
            return Err(Error::InvalidConfig {
                field: "sweep.deltas",
                reason: format!("Δ = {d} is not tracked, expected 0, 1 or 2"),
            });
        }
        Ok(())
    }
}

/// Explicit altitudes covering the 1×1, 3×3 and 5×5 intended-cell regimes
/// of the default block. Each regime starts at its threshold altitude;
/// the last one is the single altitude at which every cell is intended once.
pub fn altitude_regimes(base: &ScenarioConfig) -> Result<[Vec<f64>; 3]> {
    let d = base.cell_size();
    let n = base.array_side;
    let t1 = derive_altitude(d, n, 1)?;
    let t3 = derive_altitude(d, n, 3)?;
    let t5 = derive_altitude(d, n, 5)?;
    let steps = |lo: f64, hi: f64| (0..4).map(|k| lo + (hi - lo) * k as f64 / 4.0).collect::<Vec<_>>();
    Ok([steps(t1, t3), steps(t3, t5), vec![t5]])
}

/// One result row: a sweep point, σ_G, beamformer, fusion rule and Δ.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sweep_param: String,
    /// `None` for single runs.
    pub sweep_value: Option<f64>,
    pub beamformer: BeamformerKind,
    pub fusion: FusionRule,
    pub sigma_g_dbsm: f64,
    pub delta: usize,
    pub trials: u64,
    pub hits: u64,
    pub p_detect: f64,
    pub ci95_halfwidth: f64,
    pub seed: u64,
}

/// A sweep value whose configuration failed validation.
#[derive(Debug, Clone, PartialEq)]
pub struct InvalidPoint {
    pub value: f64,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub invalid: Vec<InvalidPoint>,
}

/// Rows for one batch.
pub fn rows_for(
    stats: &BatchStats,
    sweep: Option<(SweepParam, f64)>,
    config: &ScenarioConfig,
    beamformer: BeamformerKind,
    fusions: &[FusionRule],
    deltas: &[usize],
) -> Vec<SweepRow> {
    let mut rows = Vec::with_capacity(fusions.len() * deltas.len());
    for &fusion in fusions {
        let s = stats.get(fusion);
        for &delta in deltas {
            rows.push(SweepRow {
                sweep_param: String::from(sweep.map_or("none", |(p, _)| p.as_str())),
                sweep_value: sweep.map(|(_, v)| v),
                beamformer,
                fusion,
                sigma_g_dbsm: m2_to_dbsm(config.ground_rcs),
                delta,
                trials: s.trials,
                hits: s.hits_at(delta),
                p_detect: s.probability(delta),
                ci95_halfwidth: s.ci95_halfwidth(delta),
                seed: config.master_seed,
            });
        }
    }
    rows
}

/// Runs `spec` over `base`; `run` executes one Monte Carlo batch.
///
/// Rows are ordered by value, beamformer, σ_G, fusion rule and Δ.
pub fn sweep_with<F>(spec: &SweepSpec, base: &ScenarioConfig, options: &SimOptions, mut run: F) -> Result<SweepTable>
where
    F: FnMut(&Simulator) -> Result<BatchStats>,
{
    spec.validate()?;
    let mut table = SweepTable::default();
    for &value in &spec.values {
        let config = match apply(base, spec.param, value) {
            Ok(c) => c,
            Err(error) => {
                table.invalid.push(InvalidPoint { value, error });
                continue;
            }
        };
        let sigmas: Vec<Option<f64>> = if spec.ground_rcs_dbsm.is_empty() {
            vec![None]
        } else {
            spec.ground_rcs_dbsm.iter().map(|s| Some(dbsm_to_m2(*s))).collect()
        };
        for &beamformer in &spec.beamformers {
            let opts = SimOptions {
                beamformer,
                ..options.clone()
            };
            let sim = match Simulator::new(config.clone(), opts) {
                Ok(s) => s,
                Err(error) => {
                    table.invalid.push(InvalidPoint { value, error });
                    break;
                }
            };
            for sigma in &sigmas {
                let point = match sigma {
                    Some(s) => match sim.with_ground_rcs(*s) {
                        Ok(p) => p,
                        Err(error) => {
                            table.invalid.push(InvalidPoint { value, error });
                            continue;
                        }
                    },
                    None => sim.clone(),
                };
                let stats = run(&point)?;
                table.rows.extend(rows_for(
                    &stats,
                    Some((spec.param, value)),
                    point.config(),
                    beamformer,
                    &spec.fusions,
                    &spec.deltas,
                ));
            }
        }
    }
    Ok(table)
}

/// Serial sweep.
pub fn sweep(spec: &SweepSpec, base: &ScenarioConfig, options: &SimOptions) -> Result<SweepTable> {
    sweep_with(spec, base, options, Simulator::run_monte_carlo)
}
