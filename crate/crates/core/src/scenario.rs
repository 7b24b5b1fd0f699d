//! Resolved geometry of one scenario: grid, UAVs and per-UAV cell sets.

use alloc::vec::Vec;

use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::geometry::{self, CellGrid, CellSets, Point3, UavDeployment};
use crate::ofdm::OfdmParams;

#[derive(Debug, Clone)]
pub struct Scenario {
    config: ScenarioConfig,
    grid: CellGrid,
    deployment: UavDeployment,
    cell_sets: Vec<CellSets>,
    footprint_radius: f64,
}

impl Scenario {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let grid = geometry::build_grid(&config)?;
        let deployment = geometry::deploy_uavs(&config, &grid)?;
        let footprint_radius = geometry::footprint_radius(deployment.altitude(), config.array_side)?;
        let cell_sets = (0..deployment.len())
            .map(|u| geometry::classify_cells(u, &grid, &deployment, config.array_side))
            .collect::<Result<_>>()?;
        Ok(Self {
            config,
            grid,
            deployment,
            cell_sets,
            footprint_radius,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn grid(&self) -> &CellGrid {
        &self.grid
    }

    pub fn deployment(&self) -> &UavDeployment {
        &self.deployment
    }

    pub fn uav_count(&self) -> usize {
        self.deployment.len()
    }

    pub fn cell_sets(&self, uav: usize) -> &CellSets {
        &self.cell_sets[uav]
    }

    pub fn footprint_radius(&self) -> f64 {
        self.footprint_radius
    }

    /// δ_u: whether `point` lies inside the HPBW circle of `uav`.
    pub fn illuminates(&self, uav: usize, point: &Point3) -> bool {
        geometry::in_footprint(point, &self.deployment.position(uav), self.footprint_radius)
    }

    pub fn ofdm_params(&self) -> OfdmParams {
        OfdmParams::from_config(&self.config)
    }

    /// Cells that are intended for at least one UAV.
    pub fn covered_cells(&self) -> Vec<bool> {
        let mut covered = alloc::vec![false; self.grid.len()];
        for sets in &self.cell_sets {
            for &c in &sets.intended {
                covered[c] = true;
            }
        }
        covered
    }
}
