//! Steering vectors of the downward n×n UPA and the two receive beamformers.
//!
//! Element (i, j) sits at index `i * n + j`. Receive gain is always the
//! Hermitian product `wᴴ g`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::AoA;
use crate::linalg::{self, Cholesky};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn phasor(angle: f64) -> Complex64 {
    Complex64::new(libm::cos(angle), libm::sin(angle))
}

/// Direction cosines scaled so that the element phase is `-π (i·u + j·v)`.
fn direction_terms(aoa: AoA) -> (f64, f64) {
    let s = libm::sin(aoa.elevation);
    (s * libm::sin(aoa.azimuth), s * libm::cos(aoa.azimuth))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    side: usize,
    entries: Vec<Complex64>,
}

impl SteeringVector {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.side + j]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// g(θ, φ) with entry(i, j) = exp(-jπ i sinθ sinφ) · exp(-jπ j sinθ cosφ).
pub fn steering_vector(aoa: AoA, side: usize) -> SteeringVector {
    let (u, v) = direction_terms(aoa);
    let rows: Vec<Complex64> = (0..side).map(|i| phasor(-PI * i as f64 * u)).collect();
    let cols: Vec<Complex64> = (0..side).map(|j| phasor(-PI * j as f64 * v)).collect();
    let mut entries = Vec::with_capacity(side * side);
    for r in &rows {
        entries.extend(cols.iter().map(|c| r * c));
    }
    SteeringVector { side, entries }
}

/// Columns are steering vectors for a list of AoAs (n² × H).
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringMatrix {
    side: usize,
    columns: Vec<SteeringVector>,
}

impl SteeringMatrix {
    pub fn from_aoas(aoas: impl IntoIterator<Item = AoA>, side: usize) -> Self {
        Self {
            side,
            columns: aoas.into_iter().map(|a| steering_vector(a, side)).collect(),
        }
    }

    pub fn from_columns(side: usize, columns: Vec<SteeringVector>) -> Result<Self> {
        for c in &columns {
            if c.len() != side * side {
                return Err(Error::ShapeMismatch {
                    expected: side * side,
                    found: c.len(),
                });
            }
        }
        Ok(Self { side, columns })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn columns(&self) -> &[SteeringVector] {
        &self.columns
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BeamformerKind {
    LeastSquares,
    Capon,
}

impl BeamformerKind {
    pub const ALL: [BeamformerKind; 2] = [BeamformerKind::LeastSquares, BeamformerKind::Capon];

    pub fn as_str(&self) -> &'static str {
        match self {
            BeamformerKind::LeastSquares => "ls",
            BeamformerKind::Capon => "capon",
        }
    }
}

impl core::str::FromStr for BeamformerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ls" | "LS" => Ok(Self::LeastSquares),
            "capon" | "Capon" => Ok(Self::Capon),
            _ => Err(Error::InvalidConfig {
                field: "beamformer",
                reason: alloc::format!("unknown beamformer `{s}` (expected ls or capon)"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerWeights {
    weights: Vec<Complex64>,
    kind: BeamformerKind,
    intended: AoA,
}

impl BeamformerWeights {
    pub fn new(weights: Vec<Complex64>, kind: BeamformerKind, intended: AoA) -> Self {
        Self {
            weights,
            kind,
            intended,
        }
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn kind(&self) -> BeamformerKind {
        self.kind
    }

    pub fn intended(&self) -> AoA {
        self.intended
    }

    pub fn norm_sqr(&self) -> f64 {
        self.weights.iter().map(Complex64::norm_sqr).sum()
    }

    /// wᴴ g.
    pub fn gain(&self, g: &SteeringVector) -> Complex64 {
        linalg::dot_conj(&self.weights, g.entries())
    }

    /// wᴴ g(aoa) evaluated without materializing the steering vector.
    pub fn gain_at(&self, aoa: AoA, side: usize) -> Complex64 {
        let (u, v) = direction_terms(aoa);
        let cols: Vec<Complex64> = (0..side).map(|j| phasor(-PI * j as f64 * v)).collect();
        (0..side)
            .map(|i| {
                let inner: Complex64 = self.weights[i * side..(i + 1) * side]
                    .iter()
                    .zip(&cols)
                    .map(|(w, c)| w.conj() * c)
                    .sum();
                inner * phasor(-PI * i as f64 * u)
            })
            .sum()
    }
}

/// Complex gain wᴴ g at every column of `steering`.
pub fn beam_pattern(steering: &SteeringMatrix, w: &BeamformerWeights) -> Result<Vec<Complex64>> {
    let elements = steering.side() * steering.side();
    if w.weights().len() != elements {
        return Err(Error::ShapeMismatch {
            expected: elements,
            found: w.weights().len(),
        });
    }
    Ok(steering.columns().iter().map(|g| w.gain(g)).collect())
}

fn wrap(x: f64, period: f64) -> f64 {
    let r = x - period * libm::floor(x / period);
    if r >= period {
        0.0
    } else {
        r
    }
}

/// Elevation/azimuth mesh centred on the intended AoA for the LS design.
#[derive(Debug, Clone, PartialEq)]
pub struct AoAMesh {
    pub intended: AoA,
    /// n elevations; `elevations[0]` is the intended one.
    pub elevations: Vec<f64>,
    /// 4n azimuths; `azimuths[0]` is the intended one.
    pub azimuths: Vec<f64>,
    /// Desired response per mesh point, elevation-major.
    pub desired: Vec<Complex64>,
}

impl AoAMesh {
    pub fn len(&self) -> usize {
        self.elevations.len() * self.azimuths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Mesh AoAs, elevation-major: index = i · 4n + j.
    pub fn aoas(&self) -> impl Iterator<Item = AoA> + '_ {
        self.elevations
            .iter()
            .flat_map(move |&t| self.azimuths.iter().map(move |&p| AoA::new(t, p)))
    }
}

pub fn aoa_mesh(intended: AoA, side: usize) -> Result<AoAMesh> {
    if side < 2 {
        return Err(Error::ArrayTooSmall { min: 2, got: side });
    }
    let elevations: Vec<f64> = (0..side)
        .map(|i| wrap(intended.elevation + i as f64 * PI / (2.0 * (side - 1) as f64), FRAC_PI_2))
        .collect();
    let azimuths: Vec<f64> = (0..4 * side)
        .map(|j| wrap(intended.azimuth + j as f64 * TAU / (4 * side - 1) as f64, TAU))
        .collect();
    let mut desired = vec![ZERO; elevations.len() * azimuths.len()];
    desired[0] = ONE;
    Ok(AoAMesh {
        intended,
        elevations,
        azimuths,
        desired,
    })
}

/// Controls for the least-squares design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsOptions {
    /// Iterative-refinement passes after the first solve.
    pub max_iterations: usize,
    /// Stop once the residual changes by less than this.
    pub tolerance: f64,
    /// Diagonal loading applied when the normal matrix is singular.
    pub loading: f64,
}

impl Default for LsOptions {
    fn default() -> Self {
        Self {
            max_iterations: 10,
            tolerance: 1e-10,
            loading: 1e-9,
        }
    }
}

/// Normal matrix G Gᴴ of the mesh. For a UPA it only depends on element
/// index differences, so it is assembled from a (2n-1)² kernel.
fn mesh_gram(mesh: &AoAMesh, side: usize) -> Vec<Complex64> {
    let span = 2 * side - 1;
    let offset = side - 1;
    let mut kernel = vec![ZERO; span * span];
    let mut row_ph = vec![ZERO; span];
    let mut col_ph = vec![ZERO; span];
    for aoa in mesh.aoas() {
        let (u, v) = direction_terms(aoa);
        for d in 0..side {
            let a = phasor(-PI * d as f64 * u);
            let b = phasor(-PI * d as f64 * v);
            row_ph[offset + d] = a;
            row_ph[offset - d] = a.conj();
            col_ph[offset + d] = b;
            col_ph[offset - d] = b.conj();
        }
        for (di, r) in row_ph.iter().enumerate() {
            for (dj, c) in col_ph.iter().enumerate() {
                kernel[di * span + dj] += r * c;
            }
        }
    }
    let elements = side * side;
    let mut gram = vec![ZERO; elements * elements];
    for a in 0..elements {
        let (i, j) = (a / side, a % side);
        for b in 0..elements {
            let (k, l) = (b / side, b % side);
            let di = offset + i - k;
            let dj = offset + j - l;
            gram[a * elements + b] = kernel[di * span + dj];
        }
    }
    gram
}

/// ||Gᴴ w − v||² over the mesh.
pub fn mesh_residual(mesh_steering: &[SteeringVector], desired: &[Complex64], w: &[Complex64]) -> f64 {
    mesh_steering
        .iter()
        .zip(desired)
        .map(|(g, v)| (linalg::dot_conj(g.entries(), w) - v).norm_sqr())
        .sum()
}

/// Least-squares fit of the mesh response, rescaled to unit norm.
pub fn ls_beamformer(mesh: &AoAMesh, side: usize, options: &LsOptions) -> Result<BeamformerWeights> {
    if side < 2 {
        return Err(Error::ArrayTooSmall { min: 2, got: side });
    }
    let elements = side * side;
    let mesh_steering: Vec<SteeringVector> = mesh.aoas().map(|a| steering_vector(a, side)).collect();
    let gram = mesh_gram(mesh, side);
    let mut rhs = vec![ZERO; elements];
    for (g, v) in mesh_steering.iter().zip(&mesh.desired) {
        if *v != ZERO {
            for (r, e) in rhs.iter_mut().zip(g.entries()) {
                *r += e * v;
            }
        }
    }

    let max_diag = (0..elements).map(|k| gram[k * elements + k].re).fold(0.0, f64::max);
    // Refinement runs against whichever matrix was factored; refining a loaded
    // factor against the singular matrix wanders off in its null space.
    let (system, chol) = match Cholesky::factor(&gram, elements, 1e-12 * max_diag) {
        Some(c) => (gram, c),
        None => {
            let mut loaded = gram.clone();
            let mut eps = options.loading;
            loop {
                for k in 0..elements {
                    loaded[k * elements + k] = gram[k * elements + k] + eps;
                }
                if let Some(c) = Cholesky::factor(&loaded, elements, 0.0) {
                    break (loaded, c);
                }
                eps *= 10.0;
            }
        }
    };

    let mut w = rhs.clone();
    chol.solve(&mut w);
    let mut residual = mesh_residual(&mesh_steering, &mesh.desired, &w);
    for _ in 0..options.max_iterations {
        let applied = linalg::matvec(&system, &w);
        let mut step: Vec<Complex64> = rhs.iter().zip(&applied).map(|(b, a)| b - a).collect();
        chol.solve(&mut step);
        let candidate: Vec<Complex64> = w.iter().zip(&step).map(|(x, s)| x + s).collect();
        let next = mesh_residual(&mesh_steering, &mesh.desired, &candidate);
        // Steps that only move within the null space of the mesh leave the
        // residual unchanged up to rounding; those are still taken.
        if next.is_nan() || next > residual * (1.0 + 1e-12) + f64::EPSILON {
            break;
        }
        let change = (residual - next).abs();
        let moved = linalg::norm(&step) / linalg::norm(&candidate).max(f64::MIN_POSITIVE);
        w = candidate;
        residual = residual.min(next);
        if change < options.tolerance && moved < 1e-14 {
            break;
        }
    }

    let scale = linalg::norm(&w);
    if scale > 0.0 {
        for x in &mut w {
            *x /= scale;
        }
    }
    Ok(BeamformerWeights::new(w, BeamformerKind::LeastSquares, mesh.intended))
}

/// Capon/MVDR weights for R = g gᴴ + αI, w = R⁻¹g / (gᴴR⁻¹g).
///
/// R⁻¹g is taken from the Sherman–Morrison identity, R⁻¹g = g / (α + gᴴg).
pub fn capon_beamformer(intended: AoA, side: usize, loading: f64) -> Result<BeamformerWeights> {
    if !(loading.is_finite() && loading > 0.0) {
        return Err(Error::InvalidConfig {
            field: "capon_loading",
            reason: alloc::format!("must be finite and > 0, got {loading}"),
        });
    }
    let g = steering_vector(intended, side);
    let energy: f64 = g.entries().iter().map(Complex64::norm_sqr).sum();
    let r_inv_g: Vec<Complex64> = g.entries().iter().map(|e| e / (loading + energy)).collect();
    let denom = linalg::dot_conj(g.entries(), &r_inv_g);
    let w = r_inv_g.into_iter().map(|x| x / denom).collect();
    Ok(BeamformerWeights::new(w, BeamformerKind::Capon, intended))
}

/// Designs the requested beamformer for `intended`.
pub fn design(kind: BeamformerKind, intended: AoA, side: usize, ls: &LsOptions, capon_loading: f64) -> Result<BeamformerWeights> {
    match kind {
        BeamformerKind::LeastSquares => ls_beamformer(&aoa_mesh(intended, side)?, side, ls),
        BeamformerKind::Capon => capon_beamformer(intended, side, capon_loading),
    }
}
