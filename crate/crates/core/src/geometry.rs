//! Grid, UAV placement, angles of arrival and footprint cell sets.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, SQRT_2, TAU};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};

/// Tolerance, in cell sizes, for the footprint containment checks.
const CONTAINMENT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        libm::sqrt(dx * dx + dy * dy + dz * dz)
    }

    pub fn horizontal_distance(&self, other: &Point3) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }
}

/// Row/column position of a cell; the row runs along x, the column along y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellIndex {
    pub row: usize,
    pub col: usize,
}

impl CellIndex {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

/// Chebyshev (L∞) distance between two cells, in cells.
pub fn chebyshev_cell_distance(a: CellIndex, b: CellIndex) -> usize {
    a.row.abs_diff(b.row).max(a.col.abs_diff(b.col))
}

/// The L×L partition of the sensed area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGrid {
    side: usize,
    cell_size: f64,
}

impl CellGrid {
    pub fn new(area_side: f64, side: usize) -> Result<Self> {
        if side == 0 {
            return Err(Error::InvalidConfig {
                field: "grid_side",
                reason: "must be at least 1".into(),
            });
        }
        if !(area_side.is_finite() && area_side > 0.0) {
            return Err(Error::InvalidConfig {
                field: "area_side",
                reason: "must be finite and > 0".into(),
            });
        }
        Ok(Self {
            side,
            cell_size: area_side / side as f64,
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn area_side(&self) -> f64 {
        self.cell_size * self.side as f64
    }

    pub fn len(&self) -> usize {
        self.side * self.side
    }

    pub fn is_empty(&self) -> bool {
        self.side == 0
    }

    /// Row-major flat index.
    pub fn flat(&self, cell: CellIndex) -> usize {
        cell.row * self.side + cell.col
    }

    pub fn unflat(&self, index: usize) -> CellIndex {
        CellIndex::new(index / self.side, index % self.side)
    }

    pub fn center(&self, cell: CellIndex) -> Point3 {
        Point3::new(
            (cell.row as f64 + 0.5) * self.cell_size,
            (cell.col as f64 + 0.5) * self.cell_size,
            0.0,
        )
    }

    pub fn center_flat(&self, index: usize) -> Point3 {
        self.center(self.unflat(index))
    }

    /// Cell holding a ground point; points on the far border clamp inward.
    pub fn cell_containing(&self, point: &Point3) -> Option<CellIndex> {
        let limit = self.area_side();
        if !(0.0..=limit).contains(&point.x) || !(0.0..=limit).contains(&point.y) {
            return None;
        }
        let idx = |v: f64| ((v / self.cell_size) as usize).min(self.side - 1);
        Some(CellIndex::new(idx(point.x), idx(point.y)))
    }

    pub fn cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        (0..self.len()).map(move |i| self.unflat(i))
    }
}

pub fn build_grid(config: &ScenarioConfig) -> Result<CellGrid> {
    CellGrid::new(config.area_side, config.grid_side)
}

/// UAV positions over the grid; UAV `u` owns block (u / per_side, u % per_side).
#[derive(Debug, Clone, PartialEq)]
pub struct UavDeployment {
    positions: Vec<Point3>,
    altitude: f64,
    per_side: usize,
    block_side: usize,
}

impl UavDeployment {
    pub fn positions(&self) -> &[Point3] {
        &self.positions
    }

    pub fn position(&self, uav: usize) -> Point3 {
        self.positions[uav]
    }

    pub fn altitude(&self) -> f64 {
        self.altitude
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn uavs_per_side(&self) -> usize {
        self.per_side
    }

    /// Cells per side of each UAV's assigned block.
    pub fn block_side(&self) -> usize {
        self.block_side
    }

    /// Cells of the block assigned to `uav`, row-major.
    pub fn block(&self, uav: usize) -> impl Iterator<Item = CellIndex> + '_ {
        let (br, bc) = (uav / self.per_side, uav % self.per_side);
        let b = self.block_side;
        (0..b * b).map(move |k| CellIndex::new(br * b + k / b, bc * b + k % b))
    }
}

pub fn deploy_uavs(config: &ScenarioConfig, grid: &CellGrid) -> Result<UavDeployment> {
    let per_side = crate::config::exact_sqrt(config.uav_count)
        .filter(|&r| r > 0)
        .ok_or_else(|| Error::InvalidConfig {
            field: "uav_count",
            reason: alloc::format!("{} is not a positive perfect square", config.uav_count),
        })?;
    if !grid.side().is_multiple_of(per_side) {
        return Err(Error::InvalidConfig {
            field: "grid_side",
            reason: alloc::format!("{} UAVs per side do not divide {} cells", per_side, grid.side()),
        });
    }
    let block_side = grid.side() / per_side;
    let altitude = match config.altitude {
        crate::config::AltitudeMode::Explicit(h) => h,
        crate::config::AltitudeMode::DerivedFromCoverage => {
            derive_altitude(grid.cell_size(), config.array_side, block_side)?
        }
    };
    let span = block_side as f64 * grid.cell_size();
    let positions = (0..config.uav_count)
        .map(|u| {
            let (br, bc) = (u / per_side, u % per_side);
            Point3::new((br as f64 + 0.5) * span, (bc as f64 + 0.5) * span, altitude)
        })
        .collect();
    Ok(UavDeployment {
        positions,
        altitude,
        per_side,
        block_side,
    })
}

/// Broadside half-power beam width of an n-element, λ/2-spaced line, radians.
pub fn hpbw(array_side: usize) -> Result<f64> {
    if array_side < 2 {
        return Err(Error::ArrayTooSmall {
            min: 2,
            got: array_side,
        });
    }
    Ok(0.886 * 2.0 / array_side as f64)
}

/// Radius of the HPBW ground circle below a UAV at `altitude`.
pub fn footprint_radius(altitude: f64, array_side: usize) -> Result<f64> {
    Ok(altitude * libm::tan(hpbw(array_side)? / 2.0))
}

/// Lowest altitude whose inscribed footprint square spans `cells` cells of side `cell_size`.
pub fn derive_altitude(cell_size: f64, array_side: usize, cells: usize) -> Result<f64> {
    let half = hpbw(array_side)? / 2.0;
    Ok(cells as f64 * cell_size / (SQRT_2 * libm::tan(half)))
}

/// Partition of the cells illuminated by one transmitting UAV.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CellSets {
    /// P_u: cells fully inside the inscribed square of the footprint, row-major flat indices.
    pub intended: Vec<usize>,
    /// P_u': remaining cells whose centers fall inside the footprint circle.
    pub clutter: Vec<usize>,
}

impl CellSets {
    /// Q_u = P_u ∪ P_u', row-major.
    pub fn illuminated(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.intended.iter().chain(&self.clutter).copied().collect();
        all.sort_unstable();
        all
    }

    pub fn illuminated_count(&self) -> usize {
        self.intended.len() + self.clutter.len()
    }
}

/// Footprint classification for UAV `uav`.
pub fn classify_cells(
    uav: usize,
    grid: &CellGrid,
    deployment: &UavDeployment,
    array_side: usize,
) -> Result<CellSets> {
    let pos = deployment.position(uav);
    let radius = footprint_radius(deployment.altitude(), array_side)?;
    let half_square = radius * SQRT_2 / 2.0;
    let d = grid.cell_size();
    let slack = CONTAINMENT_SLACK * d;
    let mut sets = CellSets::default();
    for (index, cell) in grid.cells().enumerate() {
        let c = grid.center(cell);
        let (dx, dy) = ((c.x - pos.x).abs(), (c.y - pos.y).abs());
        if dx + d / 2.0 <= half_square + slack && dy + d / 2.0 <= half_square + slack {
            sets.intended.push(index);
        } else if dx * dx + dy * dy <= radius * radius + slack {
            sets.clutter.push(index);
        }
    }
    Ok(sets)
}

/// Whether a ground point falls inside the HPBW circle of UAV `uav`.
pub fn in_footprint(point: &Point3, uav: &Point3, radius: f64) -> bool {
    point.horizontal_distance(uav) <= radius
}

/// Angle of arrival at a downward-facing array.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AoA {
    /// Elevation from the downward boresight, [0, π/2).
    pub elevation: f64,
    /// Azimuth from +x, [0, 2π).
    pub azimuth: f64,
}

impl AoA {
    pub const fn new(elevation: f64, azimuth: f64) -> Self {
        Self { elevation, azimuth }
    }
}

pub fn aoa(observer: &Point3, point: &Point3) -> Result<AoA> {
    let height = observer.z - point.z;
    if height <= 0.0 {
        return Err(Error::PointAboveObserver);
    }
    let (dx, dy) = (point.x - observer.x, point.y - observer.y);
    let horizontal = libm::hypot(dx, dy);
    let elevation = libm::atan(horizontal / height);
    let azimuth = if horizontal == 0.0 {
        0.0
    } else {
        let a = libm::atan2(dy, dx);
        if a < 0.0 {
            a + TAU
        } else {
            a
        }
    };
    debug_assert!(elevation < FRAC_PI_2);
    Ok(AoA::new(elevation, azimuth.min(TAU.next_down())))
}

/// Transmitter-to-point and point-to-receiver distances.
pub fn path_distances(tx: &Point3, point: &Point3, rx: &Point3) -> (f64, f64) {
    (tx.distance(point), point.distance(rx))
}
