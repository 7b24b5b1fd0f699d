//! Scenario parameters and the quantities derived from them.
//!
//! All fields are stored in linear SI units. Conversions from the decibel
//! units used in configuration files live in [`units`].

use alloc::format;

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub mod units {
    /// dBsm to m².
    pub fn dbsm_to_m2(dbsm: f64) -> f64 {
        libm::pow(10.0, dbsm / 10.0)
    }

    pub fn m2_to_dbsm(m2: f64) -> f64 {
        10.0 * libm::log10(m2)
    }

    /// dBm/Hz to W/Hz.
    pub fn dbm_per_hz_to_watts_per_hz(dbm: f64) -> f64 {
        libm::pow(10.0, (dbm - 30.0) / 10.0)
    }

    pub fn watts_per_hz_to_dbm_per_hz(w: f64) -> f64 {
        10.0 * libm::log10(w) + 30.0
    }
}

/// How the common UAV altitude is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AltitudeMode {
    /// Lowest altitude whose inscribed footprint square spans one UAV block.
    DerivedFromCoverage,
    /// Fixed altitude in meters.
    Explicit(f64),
}

/// Every physical and protocol parameter of one simulated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// P_T, watts.
    pub transmit_power: f64,
    /// G_T, linear.
    pub transmit_gain: f64,
    /// Side of the square sensed area, meters.
    pub area_side: f64,
    pub uav_count: usize,
    /// N_0, W/Hz.
    pub noise_density: f64,
    /// σ_G, m².
    pub ground_rcs: f64,
    /// σ_T, m².
    pub target_rcs: f64,
    pub symbols_per_frame: usize,
    pub subcarriers: usize,
    /// UPA side; the array has `array_side²` elements.
    pub array_side: usize,
    /// f_0, Hz.
    pub carrier_frequency: f64,
    /// BW, Hz.
    pub bandwidth: f64,
    /// T_CP, seconds.
    pub cp_duration: f64,
    /// Cells per grid side.
    pub grid_side: usize,
    /// f_D, Hz.
    pub doppler: f64,
    pub altitude: AltitudeMode,
    pub trials: usize,
    pub master_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            transmit_power: 1.0,
            transmit_gain: 1.0,
            area_side: 100.0,
            uav_count: 16,
            noise_density: units::dbm_per_hz_to_watts_per_hz(-174.0),
            ground_rcs: units::dbsm_to_m2(-30.0),
            target_rcs: units::dbsm_to_m2(10.0),
            symbols_per_frame: 16,
            subcarriers: 64,
            array_side: 8,
            carrier_frequency: 24e9,
            bandwidth: 200e6,
            cp_duration: 2.3e-6,
            grid_side: 20,
            doppler: 0.0,
            altitude: AltitudeMode::DerivedFromCoverage,
            trials: 1000,
            master_seed: 0x5eed_2023,
        }
    }
}

fn invalid(field: &'static str, reason: impl Into<alloc::string::String>) -> Error {
    Error::InvalidConfig {
        field,
        reason: reason.into(),
    }
}

fn positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite and > 0, got {value}")))
    }
}

fn nonzero(field: &'static str, value: usize) -> Result<()> {
    if value == 0 {
        Err(invalid(field, "must be at least 1"))
    } else {
        Ok(())
    }
}

/// Integer square root when `value` is a perfect square.
pub fn exact_sqrt(value: usize) -> Option<usize> {
    let mut root = libm::sqrt(value as f64) as usize;
    while root * root > value {
        root -= 1;
    }
    while (root + 1) * (root + 1) <= value {
        root += 1;
    }
    (root * root == value).then_some(root)
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        positive("transmit_power", self.transmit_power)?;
        positive("transmit_gain", self.transmit_gain)?;
        positive("area_side", self.area_side)?;
        positive("noise_density", self.noise_density)?;
        positive("ground_rcs", self.ground_rcs)?;
        positive("target_rcs", self.target_rcs)?;
        positive("carrier_frequency", self.carrier_frequency)?;
        positive("bandwidth", self.bandwidth)?;
        positive("cp_duration", self.cp_duration)?;
        if !self.doppler.is_finite() {
            return Err(invalid("doppler", "must be finite"));
        }
        nonzero("symbols_per_frame", self.symbols_per_frame)?;
        nonzero("subcarriers", self.subcarriers)?;
        nonzero("grid_side", self.grid_side)?;
        nonzero("trials", self.trials)?;
        if self.array_side < 2 {
            return Err(invalid("array_side", "must be at least 2"));
        }
        if self.ground_rcs >= self.target_rcs {
            return Err(invalid(
                "ground_rcs",
                "ground RCS must be smaller than the target RCS",
            ));
        }
        let per_side = exact_sqrt(self.uav_count)
            .filter(|&r| r > 0)
            .ok_or_else(|| invalid("uav_count", format!("U = {} is not a positive perfect square", self.uav_count)))?;
        if !self.grid_side.is_multiple_of(per_side) {
            return Err(invalid(
                "grid_side",
                format!(
                    "{} cells per side cannot be split evenly among {} UAVs per side",
                    self.grid_side, per_side
                ),
            ));
        }
        if let AltitudeMode::Explicit(h) = self.altitude {
            positive("altitude", h)?;
        }
        Ok(())
    }

    /// λ = c_0 / f_0.
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    /// Δf = BW / M.
    pub fn subcarrier_spacing(&self) -> f64 {
        self.bandwidth / self.subcarriers as f64
    }

    /// T_o = 1/Δf + T_CP.
    pub fn symbol_duration(&self) -> f64 {
        1.0 / self.subcarrier_spacing() + self.cp_duration
    }

    /// d = ℓ / L.
    pub fn cell_size(&self) -> f64 {
        self.area_side / self.grid_side as f64
    }

    /// √U. Zero when `uav_count` is not a perfect square.
    pub fn uavs_per_side(&self) -> usize {
        exact_sqrt(self.uav_count).unwrap_or(0)
    }

    /// L / √U, the side of each UAV's block in cells.
    pub fn block_side(&self) -> usize {
        match self.uavs_per_side() {
            0 => 0,
            r => self.grid_side / r,
        }
    }

    /// Per-sample noise power before beamforming, N_0 · BW.
    pub fn noise_power(&self) -> f64 {
        self.noise_density * self.bandwidth
    }

    /// Resolved common altitude, meters.
    pub fn altitude(&self) -> Result<f64> {
        match self.altitude {
            AltitudeMode::Explicit(h) => Ok(h),
            AltitudeMode::DerivedFromCoverage => {
                crate::geometry::derive_altitude(self.cell_size(), self.array_side, self.block_side())
            }
        }
    }
}
