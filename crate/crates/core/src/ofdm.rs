//! OFDM frame synthesis, data removal, periodogram and per-cell RCS estimates.
//!
//! Frames are N×M, row-major with symbol index k and subcarrier index l.
//! The delay ramp runs along subcarriers and the Doppler ramp along symbols:
//!
//! ```text
//! c_rx[k][l] = Σ_r b_r χ_r c_tx[k][l] exp(j2π f_r T_o k) exp(-j2π τ_r Δf l) exp(-jζ_r) + z[k][l]
//! ```

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::beamforming::BeamformerWeights;
use crate::config::{ScenarioConfig, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::fft::{self, Direction};
use crate::geometry::{self, Point3};
use crate::scenario::Scenario;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn phasor(angle: f64) -> Complex64 {
    Complex64::new(libm::cos(angle), libm::sin(angle))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmParams {
    /// N.
    pub symbols: usize,
    /// M.
    pub subcarriers: usize,
    /// Δf, Hz.
    pub subcarrier_spacing: f64,
    /// T_o = 1/Δf + T_CP, seconds.
    pub symbol_duration: f64,
}

impl OfdmParams {
    pub fn new(symbols: usize, subcarriers: usize, bandwidth: f64, cp_duration: f64) -> Self {
        let spacing = bandwidth / subcarriers as f64;
        Self {
            symbols,
            subcarriers,
            subcarrier_spacing: spacing,
            symbol_duration: 1.0 / spacing + cp_duration,
        }
    }

    pub fn from_config(config: &ScenarioConfig) -> Self {
        Self::new(
            config.symbols_per_frame,
            config.subcarriers,
            config.bandwidth,
            config.cp_duration,
        )
    }

    /// N · M.
    pub fn samples(&self) -> usize {
        self.symbols * self.subcarriers
    }
}

/// N×M complex samples, row-major by symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    symbols: usize,
    subcarriers: usize,
    data: Vec<Complex64>,
}

impl Frame {
    pub fn zeros(symbols: usize, subcarriers: usize) -> Self {
        Self {
            symbols,
            subcarriers,
            data: vec![ZERO; symbols * subcarriers],
        }
    }

    pub fn from_fn(symbols: usize, subcarriers: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let data = (0..symbols * subcarriers)
            .map(|i| f(i / subcarriers, i % subcarriers))
            .collect();
        Self {
            symbols,
            subcarriers,
            data,
        }
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn get(&self, symbol: usize, subcarrier: usize) -> Complex64 {
        self.data[symbol * self.subcarriers + subcarrier]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    fn check_shape(&self, other: &Frame) -> Result<()> {
        if self.symbols != other.symbols || self.subcarriers != other.subcarriers {
            return Err(Error::ShapeMismatch {
                expected: self.data.len(),
                found: other.data.len(),
            });
        }
        Ok(())
    }
}

impl core::ops::Add for &Frame {
    type Output = Frame;

    fn add(self, rhs: &Frame) -> Frame {
        assert_eq!((self.symbols, self.subcarriers), (rhs.symbols, rhs.subcarriers));
        Frame {
            symbols: self.symbols,
            subcarriers: self.subcarriers,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

/// F = F_RX ⊘ F_TX.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedFrame(pub Frame);

impl ProcessedFrame {
    pub fn frame(&self) -> &Frame {
        &self.0
    }
}

/// Unit-modulus QPSK data frame.
pub fn synth_tx_frame<R: Rng + ?Sized>(params: &OfdmParams, rng: &mut R) -> Frame {
    Frame::from_fn(params.symbols, params.subcarriers, |_, _| {
        let bits: u8 = rng.random();
        let re = if bits & 1 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
        let im = if bits & 2 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
        Complex64::new(re, im)
    })
}

/// One reflected path as seen after receive beamforming.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionComponent {
    /// b ≥ 0.
    pub amplitude: f64,
    /// χ = wᴴ g(AoA).
    pub gain: Complex64,
    /// τ, seconds.
    pub delay: f64,
    /// f_D, Hz.
    pub doppler: f64,
    /// ζ ∈ [0, 2π).
    pub phase: f64,
}

impl ReflectionComponent {
    /// b χ e^{-jζ}.
    pub fn coefficient(&self) -> Complex64 {
        self.gain * self.amplitude * phasor(-self.phase)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReflectionSet {
    /// Ground reflections of Q_u in row-major cell order, then the target when illuminated.
    pub components: Vec<ReflectionComponent>,
    pub includes_target: bool,
}

impl ReflectionSet {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// Two-hop point-scatterer amplitude b = √(P_T G_T σ λ² / ((4π)³ d₁² d₂²)).
pub fn reflection_amplitude(config: &ScenarioConfig, rcs: f64, d1: f64, d2: f64) -> f64 {
    let lambda = config.wavelength();
    let four_pi_cubed = (4.0 * PI) * (4.0 * PI) * (4.0 * PI);
    libm::sqrt(
        config.transmit_power * config.transmit_gain * rcs * lambda * lambda
            / (four_pi_cubed * d1 * d1 * d2 * d2),
    )
}

fn uniform_phase<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>() * TAU
}

/// Reflections of one illumination by `tx` as received by `listener`.
///
/// Phases are drawn from `phase_rng` in a fixed order: the target phase first
/// (drawn whether or not the target is illuminated), then one per cell of Q_u.
pub fn build_reflections<R: Rng + ?Sized>(
    tx: usize,
    listener: usize,
    cell: usize,
    scenario: &Scenario,
    beamformer: &BeamformerWeights,
    target: Option<&Point3>,
    phase_rng: &mut R,
) -> Result<ReflectionSet> {
    if tx == listener {
        return Err(Error::SelfListening(tx));
    }
    let uavs = scenario.uav_count();
    for idx in [tx, listener] {
        if idx >= uavs {
            return Err(Error::OutOfRange { index: idx, len: uavs });
        }
    }
    if cell >= scenario.grid().len() {
        return Err(Error::OutOfRange {
            index: cell,
            len: scenario.grid().len(),
        });
    }
    let config = scenario.config();
    let side = config.array_side;
    let tx_pos = scenario.deployment().position(tx);
    let rx_pos = scenario.deployment().position(listener);
    let target_phase = uniform_phase(phase_rng);

    let component = |point: &Point3, rcs: f64, phase: f64| -> Result<ReflectionComponent> {
        let (d1, d2) = geometry::path_distances(&tx_pos, point, &rx_pos);
        let arrival = geometry::aoa(&rx_pos, point)?;
        Ok(ReflectionComponent {
            amplitude: reflection_amplitude(config, rcs, d1, d2),
            gain: beamformer.gain_at(arrival, side),
            delay: (d1 + d2) / SPEED_OF_LIGHT,
            doppler: config.doppler,
            phase,
        })
    };

    let illuminated = scenario.cell_sets(tx).illuminated();
    let mut components = Vec::with_capacity(illuminated.len() + 1);
    for q in illuminated {
        let phase = uniform_phase(phase_rng);
        components.push(component(&scenario.grid().center_flat(q), config.ground_rcs, phase)?);
    }
    let includes_target = match target {
        Some(t) if scenario.illuminates(tx, t) => {
            components.push(component(t, config.target_rcs, target_phase)?);
            true
        }
        _ => false,
    };
    Ok(ReflectionSet {
        components,
        includes_target,
    })
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = libm::sqrt(variance / 2.0);
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * scale, im * scale)
}

/// Received frame per the multi-path model plus circular Gaussian noise of
/// variance `noise_variance` per sample.
pub fn synth_rx_frame<R: Rng + ?Sized>(
    tx_frame: &Frame,
    reflections: &ReflectionSet,
    params: &OfdmParams,
    noise_variance: f64,
    noise_rng: &mut R,
) -> Result<Frame> {
    if tx_frame.symbols() != params.symbols || tx_frame.subcarriers() != params.subcarriers {
        return Err(Error::ShapeMismatch {
            expected: params.samples(),
            found: tx_frame.data().len(),
        });
    }
    let (n, m) = (params.symbols, params.subcarriers);
    // Channel response h[k][l] summed over reflections.
    let mut channel = vec![ZERO; n * m];
    let mut delay_ramp = vec![ZERO; m];
    for r in &reflections.components {
        let coef = r.coefficient();
        for (l, d) in delay_ramp.iter_mut().enumerate() {
            *d = phasor(-TAU * r.delay * params.subcarrier_spacing * l as f64);
        }
        for k in 0..n {
            let row = coef * phasor(TAU * r.doppler * params.symbol_duration * k as f64);
            for (h, d) in channel[k * m..(k + 1) * m].iter_mut().zip(&delay_ramp) {
                *h += row * d;
            }
        }
    }
    let mut rx = Frame::zeros(n, m);
    for ((out, h), c) in rx.data.iter_mut().zip(&channel).zip(tx_frame.data()) {
        *out = h * c;
        if noise_variance > 0.0 {
            *out += complex_gaussian(noise_rng, noise_variance);
        }
    }
    Ok(rx)
}

/// Element-wise division removing the transmitted data.
pub fn remove_data(rx: &Frame, tx: &Frame) -> Result<ProcessedFrame> {
    rx.check_shape(tx)?;
    let mut out = Frame::zeros(rx.symbols, rx.subcarriers);
    for (i, (o, (r, t))) in out.data.iter_mut().zip(rx.data.iter().zip(&tx.data)).enumerate() {
        if t.norm_sqr() == 0.0 {
            return Err(Error::ZeroSymbol {
                symbol: i / rx.subcarriers,
                subcarrier: i % rx.subcarriers,
            });
        }
        *o = r / t;
    }
    Ok(ProcessedFrame(out))
}

/// Periodogram on the integer bin grid: rows are Doppler bins n (FFT over
/// symbols), columns are delay bins m (IFFT over subcarriers).
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodogramMap {
    pub doppler_bins: usize,
    pub delay_bins: usize,
    pub values: Vec<f64>,
}

impl PeriodogramMap {
    pub fn get(&self, n: usize, m: usize) -> f64 {
        self.values[n * self.delay_bins + m]
    }

    /// (n̂, m̂) of the largest value; the first in row-major order wins ties.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        (best / self.delay_bins, best % self.delay_bins)
    }
}

/// P(n, m) = (1/NM) |Σ_k Σ_l c[k][l] e^{+j2π lm/M'} e^{-j2π kn/N'}|², zero-padded to N'×M'.
pub fn periodogram_grid(frame: &ProcessedFrame, doppler_bins: usize, delay_bins: usize) -> Result<PeriodogramMap> {
    let f = frame.frame();
    let (n, m) = (f.symbols(), f.subcarriers());
    if doppler_bins < n {
        return Err(Error::PaddingTooShort { len: n, padded: doppler_bins });
    }
    if delay_bins < m {
        return Err(Error::PaddingTooShort { len: m, padded: delay_bins });
    }
    let mut grid = vec![ZERO; doppler_bins * delay_bins];
    for k in 0..n {
        let row = &mut grid[k * delay_bins..(k + 1) * delay_bins];
        row[..m].copy_from_slice(&f.data()[k * m..(k + 1) * m]);
        fft::transform(row, Direction::Inverse)?;
    }
    let mut column = vec![ZERO; doppler_bins];
    for col in 0..delay_bins {
        for (k, c) in column.iter_mut().enumerate() {
            *c = grid[k * delay_bins + col];
        }
        fft::transform(&mut column, Direction::Forward)?;
        for (k, c) in column.iter().enumerate() {
            grid[k * delay_bins + col] = *c;
        }
    }
    let scale = 1.0 / (n * m) as f64;
    Ok(PeriodogramMap {
        doppler_bins,
        delay_bins,
        values: grid.iter().map(|c| c.norm_sqr() * scale).collect(),
    })
}

/// Periodogram evaluated at the continuous point matching (`delay`, `doppler`):
/// (1/NM) |Σ c[k][l] e^{+j2π τ Δf l} e^{-j2π f_D T_o k}|².
pub fn matched_point_value(frame: &ProcessedFrame, delay: f64, doppler: f64, params: &OfdmParams) -> f64 {
    let f = frame.frame();
    let (n, m) = (f.symbols(), f.subcarriers());
    let delay_ramp: Vec<Complex64> = (0..m)
        .map(|l| phasor(TAU * delay * params.subcarrier_spacing * l as f64))
        .collect();
    let mut sum = ZERO;
    for k in 0..n {
        let row: Complex64 = f.data()[k * m..(k + 1) * m]
            .iter()
            .zip(&delay_ramp)
            .map(|(c, d)| c * d)
            .sum();
        sum += row * phasor(-TAU * doppler * params.symbol_duration * k as f64);
    }
    sum.norm_sqr() / (n * m) as f64
}

/// σ̂ = P* (4π)³ d₁² d₂² / (NM P_T G_T λ²).
pub fn estimate_rcs(peak: f64, config: &ScenarioConfig, d1: f64, d2: f64) -> f64 {
    let lambda = config.wavelength();
    let four_pi_cubed = (4.0 * PI) * (4.0 * PI) * (4.0 * PI);
    let samples = (config.symbols_per_frame * config.subcarriers) as f64;
    peak * four_pi_cubed * d1 * d1 * d2 * d2
        / (samples * config.transmit_power * config.transmit_gain * lambda * lambda)
}

/// Σ_{l=0}^{len-1} e^{-j2π x l}.
pub fn dirichlet(x: f64, len: usize) -> Complex64 {
    let s = libm::sin(PI * x);
    if s.abs() < 1e-9 {
        return (0..len).map(|l| phasor(-TAU * x * l as f64)).sum();
    }
    let ratio = libm::sin(PI * x * len as f64) / s;
    phasor(-PI * x * (len as f64 - 1.0)) * ratio
}

/// Matched-point correlation of a unit reflection at (`delay`, `doppler`)
/// against the ramps of (`matched_delay`, `matched_doppler`).
pub fn cross_kernel(delay: f64, doppler: f64, matched_delay: f64, matched_doppler: f64, params: &OfdmParams) -> Complex64 {
    dirichlet((delay - matched_delay) * params.subcarrier_spacing, params.subcarriers)
        * dirichlet(-(doppler - matched_doppler) * params.symbol_duration, params.symbols)
}

/// Closed-form matched-point value: Σ_r b_r χ_r e^{-jζ_r} K_r plus one noise
/// draw of variance NM σ_z², squared and scaled by 1/NM. `None` when the
/// reflections do not share one Doppler shift.
pub fn fast_matched_value<R: Rng + ?Sized>(
    reflections: &ReflectionSet,
    delay: f64,
    doppler: f64,
    params: &OfdmParams,
    noise_variance: f64,
    noise_rng: &mut R,
) -> Option<f64> {
    let mut dopplers = reflections.components.iter().map(|r| r.doppler);
    if let Some(first) = dopplers.next() {
        if dopplers.any(|d| d != first) {
            return None;
        }
    }
    let mut sum: Complex64 = reflections
        .components
        .iter()
        .map(|r| r.coefficient() * cross_kernel(r.delay, r.doppler, delay, doppler, params))
        .sum();
    let samples = params.samples() as f64;
    if noise_variance > 0.0 {
        sum += complex_gaussian(noise_rng, samples * noise_variance);
    }
    Some(sum.norm_sqr() / samples)
}

/// One per-cell RCS estimate produced by a listener.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcsEstimate {
    pub cell: usize,
    pub value: f64,
    pub listener: usize,
    pub transmitter: usize,
}

/// Matched delay and path lengths of cell `cell` for the (`tx`, `listener`) pair.
pub fn matched_geometry(scenario: &Scenario, tx: usize, listener: usize, cell: usize) -> (f64, f64, f64) {
    let p = scenario.grid().center_flat(cell);
    let (d1, d2) = geometry::path_distances(
        &scenario.deployment().position(tx),
        &p,
        &scenario.deployment().position(listener),
    );
    ((d1 + d2) / SPEED_OF_LIGHT, d1, d2)
}

/// Noise variance after beamforming, N_0 · BW · ||w||².
pub fn beamformed_noise_variance(config: &ScenarioConfig, beamformer: &BeamformerWeights) -> f64 {
    config.noise_power() * beamformer.norm_sqr()
}

/// Random inputs for one cell estimate.
pub struct CellStreams<'a, R: Rng + ?Sized> {
    pub phases: &'a mut R,
    pub noise: &'a mut R,
}

/// Reference path: synthesize the frame, remove data, evaluate the matched point.
#[allow(clippy::too_many_arguments)]
pub fn reference_cell_estimate<R: Rng + ?Sized>(
    tx: usize,
    listener: usize,
    cell: usize,
    scenario: &Scenario,
    beamformer: &BeamformerWeights,
    target: Option<&Point3>,
    tx_frame: &Frame,
    noise_enabled: bool,
    streams: CellStreams<'_, R>,
) -> Result<RcsEstimate> {
    let config = scenario.config();
    let params = scenario.ofdm_params();
    let reflections = build_reflections(tx, listener, cell, scenario, beamformer, target, streams.phases)?;
    let variance = if noise_enabled {
        beamformed_noise_variance(config, beamformer)
    } else {
        0.0
    };
    let rx = synth_rx_frame(tx_frame, &reflections, &params, variance, streams.noise)?;
    let processed = remove_data(&rx, tx_frame)?;
    let (delay, d1, d2) = matched_geometry(scenario, tx, listener, cell);
    let peak = matched_point_value(&processed, delay, config.doppler, &params);
    Ok(RcsEstimate {
        cell,
        value: estimate_rcs(peak, config, d1, d2),
        listener,
        transmitter: tx,
    })
}

/// Fast path: closed-form matched point, falling back to the reference path
/// (with a TX frame drawn from the noise stream) when Dopplers differ.
#[allow(clippy::too_many_arguments)]
pub fn fast_cell_estimate<R: Rng + ?Sized>(
    tx: usize,
    listener: usize,
    cell: usize,
    scenario: &Scenario,
    beamformer: &BeamformerWeights,
    target: Option<&Point3>,
    noise_enabled: bool,
    streams: CellStreams<'_, R>,
) -> Result<RcsEstimate> {
    let config = scenario.config();
    let params = scenario.ofdm_params();
    let reflections = build_reflections(tx, listener, cell, scenario, beamformer, target, streams.phases)?;
    let variance = if noise_enabled {
        beamformed_noise_variance(config, beamformer)
    } else {
        0.0
    };
    let (delay, d1, d2) = matched_geometry(scenario, tx, listener, cell);
    let peak = match fast_matched_value(&reflections, delay, config.doppler, &params, variance, streams.noise) {
        Some(v) => v,
        None => {
            let tx_frame = synth_tx_frame(&params, streams.noise);
            let rx = synth_rx_frame(&tx_frame, &reflections, &params, variance, streams.noise)?;
            matched_point_value(&remove_data(&rx, &tx_frame)?, delay, config.doppler, &params)
        }
    };
    Ok(RcsEstimate {
        cell,
        value: estimate_rcs(peak, config, d1, d2),
        listener,
        transmitter: tx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamforming::{capon_beamformer, BeamformerKind};
    use crate::geometry::AoA;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(n: usize, m: usize) -> OfdmParams {
        OfdmParams::new(n, m, 200e6, 2.3e-6)
    }

    fn unit_reflection(amplitude: f64, delay: f64, doppler: f64) -> ReflectionComponent {
        ReflectionComponent {
            amplitude,
            gain: Complex64::new(1.0, 0.0),
            delay,
            doppler,
            phase: 0.0,
        }
    }

    /// Oracle: direct O(N'M'NM) evaluation of the bin-grid periodogram.
    fn direct_periodogram(f: &Frame, np: usize, mp: usize) -> Vec<f64> {
        let (n, m) = (f.symbols(), f.subcarriers());
        let mut out = Vec::with_capacity(np * mp);
        for nb in 0..np {
            for mb in 0..mp {
                let mut s = ZERO;
                for k in 0..n {
                    for l in 0..m {
                        let a = TAU * (l * mb) as f64 / mp as f64 - TAU * (k * nb) as f64 / np as f64;
                        s += f.get(k, l) * phasor(a);
                    }
                }
                out.push(s.norm_sqr() / (n * m) as f64);
            }
        }
        out
    }

    #[test]
    fn tx_frame_is_unit_modulus_and_seeded() {
        let p = params(16, 64);
        let a = synth_tx_frame(&p, &mut ChaCha8Rng::seed_from_u64(3));
        let b = synth_tx_frame(&p, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        assert_eq!(a.data().len(), 1024);
        assert!(a.data().iter().all(|c| (c.norm() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn amplitude_examples() {
        let cfg = ScenarioConfig {
            carrier_frequency: SPEED_OF_LIGHT / 0.0125,
            ..Default::default()
        };
        let b = reflection_amplitude(&cfg, 10.0, 100.0, 100.0);
        assert_relative_eq!(b, 8.873_505_380_474_137e-8, max_relative = 1e-12);
        assert_relative_eq!(reflection_amplitude(&cfg, 10.0, 400.0, 100.0), b / 4.0, max_relative = 1e-12);
        assert_eq!(reflection_amplitude(&cfg, 0.0, 100.0, 100.0), 0.0);
    }

    #[test]
    fn rx_frame_examples() {
        let p = params(4, 8);
        let tx = synth_tx_frame(&p, &mut ChaCha8Rng::seed_from_u64(1));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let empty = synth_rx_frame(&tx, &ReflectionSet::default(), &p, 0.0, &mut rng).unwrap();
        assert!(empty.data().iter().all(|c| *c == ZERO));

        let single = ReflectionSet { components: vec![unit_reflection(0.5, 0.0, 0.0)], includes_target: false };
        let rx = synth_rx_frame(&tx, &single, &p, 0.0, &mut rng).unwrap();
        for (r, t) in rx.data().iter().zip(tx.data()) {
            assert!((r - t * 0.5).norm() < 1e-15);
        }

        let quarter = ReflectionSet {
            components: vec![unit_reflection(1.0, 0.25 / p.subcarrier_spacing, 0.0)],
            includes_target: false,
        };
        let rx = synth_rx_frame(&tx, &quarter, &p, 0.0, &mut rng).unwrap();
        let processed = remove_data(&rx, &tx).unwrap();
        for k in 0..4 {
            for l in 0..8 {
                let want = phasor(-PI * l as f64 / 2.0);
                assert!((processed.frame().get(k, l) - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn data_removal_examples() {
        let p = params(4, 8);
        let tx = synth_tx_frame(&p, &mut ChaCha8Rng::seed_from_u64(5));
        let ones = remove_data(&tx, &tx).unwrap();
        assert!(ones.frame().data().iter().all(|c| (c - Complex64::new(1.0, 0.0)).norm() < 1e-15));

        let refl = ReflectionSet { components: vec![unit_reflection(0.3, 1.7e-8, 0.0)], includes_target: false };
        let other_tx = synth_tx_frame(&p, &mut ChaCha8Rng::seed_from_u64(6));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = remove_data(&synth_rx_frame(&tx, &refl, &p, 0.0, &mut rng).unwrap(), &tx).unwrap();
        let b = remove_data(&synth_rx_frame(&other_tx, &refl, &p, 0.0, &mut rng).unwrap(), &other_tx).unwrap();
        for (x, y) in a.frame().data().iter().zip(b.frame().data()) {
            assert!((x - y).norm() < 1e-14);
        }

        let rx1 = Frame::from_fn(4, 8, |k, l| Complex64::new(k as f64, l as f64));
        let rx2 = Frame::from_fn(4, 8, |k, l| Complex64::new(-(l as f64), 0.5 * k as f64));
        let sum = remove_data(&(&rx1 + &rx2), &tx).unwrap();
        let parts = &remove_data(&rx1, &tx).unwrap().0 + &remove_data(&rx2, &tx).unwrap().0;
        for (x, y) in sum.frame().data().iter().zip(parts.data()) {
            assert!((x - y).norm() < 1e-12);
        }

        let mut zero_tx = tx.clone();
        zero_tx.data_mut()[9] = ZERO;
        assert_eq!(remove_data(&rx1, &zero_tx), Err(Error::ZeroSymbol { symbol: 1, subcarrier: 1 }));
        assert!(remove_data(&rx1, &Frame::zeros(2, 8)).is_err());
    }

    #[test]
    fn periodogram_examples() {
        let ones = ProcessedFrame(Frame::from_fn(4, 4, |_, _| Complex64::new(1.0, 0.0)));
        let p = periodogram_grid(&ones, 4, 4).unwrap();
        assert_relative_eq!(p.get(0, 0), 16.0, max_relative = 1e-12);
        assert!(p.values.iter().skip(1).all(|v| v.abs() < 1e-20));

        let impulse = ProcessedFrame(Frame::from_fn(4, 8, |k, l| {
            if k == 0 && l == 0 { Complex64::new(1.0, 0.0) } else { ZERO }
        }));
        let p = periodogram_grid(&impulse, 8, 16).unwrap();
        assert!(p.values.iter().all(|v| (v - 1.0 / 32.0).abs() < 1e-15));

        assert!(periodogram_grid(&impulse, 2, 16).is_err());
        assert!(periodogram_grid(&impulse, 8, 4).is_err());
        assert!(matches!(periodogram_grid(&impulse, 6, 16), Err(Error::NotPowerOfTwo(6))));
    }

    #[test]
    fn periodogram_matches_direct_sum_and_parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let f = Frame::from_fn(8, 8, |_, _| complex_gaussian(&mut rng, 1.0));
            let map = periodogram_grid(&ProcessedFrame(f.clone()), 16, 16).unwrap();
            let want = direct_periodogram(&f, 16, 16);
            let peak = want.iter().cloned().fold(0.0, f64::max);
            for (a, b) in map.values.iter().zip(&want) {
                assert!((a - b).abs() <= 1e-9 * peak);
            }
            let energy: f64 = f.data().iter().map(Complex64::norm_sqr).sum();
            let total: f64 = map.values.iter().sum();
            assert_relative_eq!(total, (16.0 * 16.0 / 64.0) * energy, max_relative = 1e-12);
        }
    }

    #[test]
    fn grid_peak_lands_on_matching_bins() {
        let p = params(8, 8);
        let (np, mp) = (16usize, 16usize);
        let tx = synth_tx_frame(&p, &mut ChaCha8Rng::seed_from_u64(9));
        for (n_hat, m_hat) in [(0usize, 0usize), (3, 5), (15, 1), (7, 12)] {
            let delay = m_hat as f64 / mp as f64 / p.subcarrier_spacing;
            let doppler = n_hat as f64 / np as f64 / p.symbol_duration;
            let refl = ReflectionSet { components: vec![unit_reflection(1.0, delay, doppler)], includes_target: false };
            let rx = synth_rx_frame(&tx, &refl, &p, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
            let map = periodogram_grid(&remove_data(&rx, &tx).unwrap(), np, mp).unwrap();
            assert_eq!(map.argmax(), (n_hat, m_hat));
        }
    }

    #[test]
    fn matched_point_examples() {
        let p = params(16, 64);
        let tx = synth_tx_frame(&p, &mut ChaCha8Rng::seed_from_u64(4));
        let amp = 0.37;
        let delay = 123.4e-9;
        let refl = ReflectionSet { components: vec![unit_reflection(amp, delay, 0.0)], includes_target: false };
        let rx = synth_rx_frame(&tx, &refl, &p, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let f = remove_data(&rx, &tx).unwrap();
        let nm = p.samples() as f64;
        assert_relative_eq!(matched_point_value(&f, delay, 0.0, &p), nm * amp * amp, max_relative = 1e-12);

        // Off the matched delay the value follows the Dirichlet kernel.
        for offset in [1e-9, 2.2e-9, 7.9e-9] {
            let got = matched_point_value(&f, delay + offset, 0.0, &p);
            let brute: Complex64 = (0..64).map(|l| phasor(TAU * offset * p.subcarrier_spacing * l as f64)).sum();
            let want = 16.0 * amp * amp * brute.norm_sqr() / 64.0;
            assert_relative_eq!(got, want, max_relative = 1e-9);
        }

        let zero = ProcessedFrame(Frame::zeros(16, 64));
        assert_eq!(matched_point_value(&zero, delay, 0.0, &p), 0.0);
    }

    #[test]
    fn dirichlet_matches_brute_force() {
        for &x in &[0.0, 1e-12, 0.013, 0.25, 0.5, 1.0, 1.0 + 1e-11, -0.37, 3.0001] {
            for len in [1usize, 7, 16, 64] {
                let brute: Complex64 = (0..len).map(|l| phasor(-TAU * x * l as f64)).sum();
                assert!((dirichlet(x, len) - brute).norm() < 1e-9 * len as f64, "x={x} len={len}");
            }
        }
    }

    #[test]
    fn rcs_roundtrip() {
        let cfg = ScenarioConfig::default();
        let p = OfdmParams::from_config(&cfg);
        let (d1, d2) = (171.3, 204.9);
        let b = reflection_amplitude(&cfg, 10.0, d1, d2);
        let tx = synth_tx_frame(&p, &mut ChaCha8Rng::seed_from_u64(1));
        let delay = (d1 + d2) / SPEED_OF_LIGHT;
        let refl = ReflectionSet { components: vec![unit_reflection(b, delay, 0.0)], includes_target: true };
        let rx = synth_rx_frame(&tx, &refl, &p, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let peak = matched_point_value(&remove_data(&rx, &tx).unwrap(), delay, 0.0, &p);
        assert_relative_eq!(estimate_rcs(peak, &cfg, d1, d2), 10.0, max_relative = 1e-6);
        assert_eq!(estimate_rcs(0.0, &cfg, d1, d2), 0.0);
        assert_relative_eq!(estimate_rcs(2.0 * peak, &cfg, d1, d2), 2.0 * estimate_rcs(peak, &cfg, d1, d2));
    }

    #[test]
    fn fast_value_equals_reference_noiseless() {
        let p = params(16, 64);
        let tx = synth_tx_frame(&p, &mut ChaCha8Rng::seed_from_u64(8));
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let components = (0..30)
            .map(|_| ReflectionComponent {
                amplitude: rng.random::<f64>(),
                gain: Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
                delay: 5e-7 + 3e-8 * rng.random::<f64>(),
                doppler: 0.0,
                phase: rng.random::<f64>() * TAU,
            })
            .collect();
        let refl = ReflectionSet { components, includes_target: false };
        let rx = synth_rx_frame(&tx, &refl, &p, 0.0, &mut rng).unwrap();
        let f = remove_data(&rx, &tx).unwrap();
        for matched in [5e-7, 5.1e-7, 5.29e-7] {
            let reference = matched_point_value(&f, matched, 0.0, &p);
            let fast = fast_matched_value(&refl, matched, 0.0, &p, 0.0, &mut rng).unwrap();
            assert_relative_eq!(fast, reference, max_relative = 1e-9);
        }
        let single = ReflectionSet { components: vec![unit_reflection(1.0, 4e-7, 0.0)], includes_target: false };
        assert_relative_eq!(cross_kernel(4e-7, 0.0, 4e-7, 0.0, &p).re, 1024.0);
        assert_relative_eq!(fast_matched_value(&single, 4e-7, 0.0, &p, 0.0, &mut rng).unwrap(), 1024.0);

        let mixed = ReflectionSet {
            components: vec![unit_reflection(1.0, 4e-7, 0.0), unit_reflection(1.0, 4e-7, 10.0)],
            includes_target: false,
        };
        assert!(fast_matched_value(&mixed, 4e-7, 0.0, &p, 0.0, &mut rng).is_none());
    }

    #[test]
    fn noise_only_matched_value_has_noise_power_mean() {
        let p = params(16, 64);
        let tx = synth_tx_frame(&p, &mut ChaCha8Rng::seed_from_u64(2));
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let sigma2 = 3.5e-3;
        let draws = 10_000;
        let mut mean = 0.0;
        for _ in 0..draws {
            let rx = synth_rx_frame(&tx, &ReflectionSet::default(), &p, sigma2, &mut rng).unwrap();
            mean += matched_point_value(&remove_data(&rx, &tx).unwrap(), 1e-7, 0.0, &p);
        }
        mean /= draws as f64;
        assert!((mean / sigma2 - 1.0).abs() < 0.05, "{}", mean / sigma2);
    }

    #[test]
    fn high_snr_median_is_near_truth() {
        let cfg = ScenarioConfig::default();
        let p = OfdmParams::from_config(&cfg);
        let (d1, d2) = (160.0, 190.0);
        let b = reflection_amplitude(&cfg, 10.0, d1, d2);
        let delay = (d1 + d2) / SPEED_OF_LIGHT;
        // Post-processing SNR NM b² / σ_z² = 10 dB.
        let sigma2 = p.samples() as f64 * b * b / 10.0;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut estimates: Vec<f64> = (0..1000)
            .map(|_| {
                let refl = ReflectionSet {
                    components: vec![ReflectionComponent { phase: uniform_phase(&mut rng), ..unit_reflection(b, delay, 0.0) }],
                    includes_target: true,
                };
                let v = fast_matched_value(&refl, delay, 0.0, &p, sigma2, &mut rng).unwrap();
                estimate_rcs(v, &cfg, d1, d2)
            })
            .collect();
        estimates.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = estimates[500];
        assert!((median / 10.0 - 1.0).abs() < 0.10, "{median}");
    }

    #[test]
    fn self_listening_is_rejected() {
        let scenario = Scenario::new(ScenarioConfig::default()).unwrap();
        let w = capon_beamformer(AoA::default(), 8, 1e-2).unwrap();
        assert_eq!(w.kind(), BeamformerKind::Capon);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = build_reflections(3, 3, 0, &scenario, &w, None, &mut rng).unwrap_err();
        assert_eq!(err, Error::SelfListening(3));
    }

    #[test]
    fn reflection_set_sizes_follow_target_illumination() {
        let scenario = Scenario::new(ScenarioConfig::default()).unwrap();
        let q = scenario.cell_sets(0).illuminated_count();
        let w = capon_beamformer(AoA::default(), 8, 1e-2).unwrap();
        let far = Point3::new(90.0, 90.0, 0.0);
        let near = Point3::new(11.0, 13.0, 0.0);
        let a = build_reflections(0, 5, 0, &scenario, &w, Some(&far), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = build_reflections(0, 5, 0, &scenario, &w, Some(&near), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a.len(), q);
        assert_eq!(b.len(), q + 1);
        assert!(b.includes_target && !a.includes_target);
        assert!(a.components.iter().all(|r| (0.0..TAU).contains(&r.phase)));
        assert_eq!(a.components, b.components[..q]);
    }
}
