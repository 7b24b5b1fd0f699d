//! Local RCS maps, fusion at the fusion center and argmax detection.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{CellGrid, CellIndex, Point3};

/// RCS map estimated by one listening UAV; `None` marks cells without an estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalRcsMap {
    pub owner: usize,
    side: usize,
    values: Vec<Option<f64>>,
}

impl LocalRcsMap {
    pub fn empty(owner: usize, side: usize) -> Self {
        Self {
            owner,
            side,
            values: vec![None; side * side],
        }
    }

    pub fn from_values(owner: usize, side: usize, values: Vec<Option<f64>>) -> Result<Self> {
        if values.len() != side * side {
            return Err(Error::ShapeMismatch {
                expected: side * side,
                found: values.len(),
            });
        }
        Ok(Self { owner, side, values })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn get(&self, cell: usize) -> Option<f64> {
        self.values[cell]
    }

    pub fn set(&mut self, cell: usize, value: Option<f64>) {
        self.values[cell] = value;
    }

    fn finite(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FusionRule {
    /// Per-cell mean of the raw local estimates.
    #[default]
    Average,
    /// Per-cell mean of min-max normalized local maps.
    PrenormAverage,
}

impl FusionRule {
    pub const ALL: [FusionRule; 2] = [FusionRule::Average, FusionRule::PrenormAverage];

    pub fn as_str(&self) -> &'static str {
        match self {
            FusionRule::Average => "avg",
            FusionRule::PrenormAverage => "prenorm",
        }
    }
}

impl core::str::FromStr for FusionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "avg" | "average" => Ok(FusionRule::Average),
            "prenorm" | "prenorm-average" => Ok(FusionRule::PrenormAverage),
            other => Err(Error::InvalidConfig {
                field: "fusion",
                reason: alloc::format!("unknown fusion rule `{other}`, expected avg or prenorm"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedMap {
    pub rule: FusionRule,
    side: usize,
    values: Vec<Option<f64>>,
}

impl FusedMap {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn get(&self, cell: usize) -> Option<f64> {
        self.values[cell]
    }
}

/// Min-max normalization of the finite entries. A constant map becomes all zeros.
pub fn normalize_map(map: &LocalRcsMap) -> LocalRcsMap {
    let (lo, hi) = map
        .finite()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    let values = map
        .values
        .iter()
        .map(|v| {
            v.map(|x| {
                if span > 0.0 {
                    (x - lo) / span
                } else {
                    0.0
                }
            })
        })
        .collect();
    LocalRcsMap {
        owner: map.owner,
        side: map.side,
        values,
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
    count: usize,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
        self.count += 1;
    }

    fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| (self.sum + self.carry) / self.count as f64)
    }
}

/// Per-cell mean over the maps that hold an estimate for the cell.
pub fn fuse(maps: &[LocalRcsMap], rule: FusionRule) -> Result<FusedMap> {
    let side = maps.first().ok_or(Error::NoEstimate)?.side;
    let mut acc = vec![CompensatedSum::default(); side * side];
    for map in maps {
        if map.side != side {
            return Err(Error::ShapeMismatch {
                expected: side * side,
                found: map.values.len(),
            });
        }
        let normalized;
        let source = match rule {
            FusionRule::Average => map,
            FusionRule::PrenormAverage => {
                normalized = normalize_map(map);
                &normalized
            }
        };
        for (a, v) in acc.iter_mut().zip(&source.values) {
            if let Some(x) = v {
                a.add(*x);
            }
        }
    }
    Ok(FusedMap {
        rule,
        side,
        values: acc.iter().map(CompensatedSum::mean).collect(),
    })
}

/// Argmax over cells with an estimate; the smallest row-major index wins ties.
pub fn detect(fused: &FusedMap) -> Result<CellIndex> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in fused.values.iter().enumerate() {
        if let Some(x) = *v {
            if best.is_none_or(|(_, b)| x > b) {
                best = Some((i, x));
            }
        }
    }
    let (i, _) = best.ok_or(Error::NoEstimate)?;
    Ok(CellIndex::new(i / fused.side, i % fused.side))
}

/// H1 when ||target − center||_∞ ≤ d(½ + Δ).
pub fn hypothesis_test(target: &Point3, center: &Point3, cell_size: f64, delta: usize) -> bool {
    linf(target, center) <= cell_size * (0.5 + delta as f64)
}

fn linf(a: &Point3, b: &Point3) -> f64 {
    (a.x - b.x).abs().max((a.y - b.y).abs())
}

/// Tolerances Δ reported per detection.
pub const DELTAS: [usize; 3] = [0, 1, 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectionResult {
    pub detected: CellIndex,
    /// Cell holding the target; `None` only for targets outside the grid.
    pub truth: Option<CellIndex>,
    /// Smallest Δ for which the hypothesis test accepts.
    pub min_delta: usize,
}

impl DetectionResult {
    pub fn evaluate(detected: CellIndex, target: &Point3, grid: &CellGrid) -> Self {
        let excess = linf(target, &grid.center(detected)) / grid.cell_size() - 0.5;
        let min_delta = if excess <= 0.0 { 0 } else { libm::ceil(excess) as usize };
        Self {
            detected,
            truth: grid.cell_containing(target),
            min_delta,
        }
    }

    pub fn hit(&self, delta: usize) -> bool {
        self.min_delta <= delta
    }

    pub fn hits(&self) -> [bool; DELTAS.len()] {
        DELTAS.map(|d| self.hit(d))
    }
}
