//! Trial orchestration: illumination, per-cell estimation, local maps, fusion
//! and detection, plus serial Monte Carlo batches.
//!
//! A [`Simulator`] precomputes everything that does not depend on the trial:
//! one beamformer per distinct angle of arrival and, for every
//! (transmitter, listener, intended cell) link, the unit-RCS matched-point
//! coefficient of each illuminated ground cell. A fast-path trial then only
//! draws phases, places the target and evaluates short complex sums.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::beamforming::{self, BeamformerKind, BeamformerWeights, LsOptions};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::fusion::{self, DetectionResult, FusionRule, LocalRcsMap, DELTAS};
use crate::geometry::{self, Point3};
use crate::ofdm::{self, CellStreams, OfdmParams, RcsEstimate};
use crate::rng::{stream_rng, Stream, MAX_UAVS};
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub beamformer: BeamformerKind,
    /// Closed-form matched point instead of full frame synthesis.
    pub fast_path: bool,
    /// Receiver noise on/off; off is only useful for tests.
    pub noise: bool,
    /// Diagonal loading α of the Capon covariance model.
    pub capon_loading: f64,
    pub ls: LsOptions,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            beamformer: BeamformerKind::Capon,
            fast_path: true,
            noise: true,
            capon_loading: 1e-2,
            ls: LsOptions::default(),
        }
    }
}

/// One (transmitter, listener, intended cell) estimate slot.
#[derive(Debug, Clone)]
struct CellLink {
    cell: usize,
    beamformer: usize,
    delay: f64,
    d1: f64,
    d2: f64,
    /// b(σ = 1 m²) χ K for every cell of Q_tx, in row-major order.
    ground: Vec<Complex64>,
}

#[derive(Debug, Clone)]
struct ListenerLinks {
    listener: usize,
    cells: Vec<CellLink>,
}

/// Trial-independent precomputation for one scenario and beamformer kind.
#[derive(Debug, Clone)]
pub struct SensingPlan {
    beamformers: Vec<BeamformerWeights>,
    /// Indexed by transmitter.
    links: Vec<Vec<ListenerLinks>>,
}

impl SensingPlan {
    pub fn build(scenario: &Scenario, options: &SimOptions) -> Result<Self> {
        let config = scenario.config();
        let side = config.array_side;
        let params = scenario.ofdm_params();
        let uavs = scenario.uav_count();
        if uavs > MAX_UAVS {
            return Err(Error::InvalidConfig {
                field: "uav_count",
                reason: alloc::format!("at most {MAX_UAVS} UAVs are supported"),
            });
        }
        let mut cache: BTreeMap<(u64, u64), usize> = BTreeMap::new();
        let mut beamformers = Vec::new();
        let mut links = Vec::with_capacity(uavs);
        for tx in 0..uavs {
            let sets = scenario.cell_sets(tx);
            let illuminated = sets.illuminated();
            let tx_pos = scenario.deployment().position(tx);
            let mut per_tx = Vec::with_capacity(uavs.saturating_sub(1));
            for listener in (0..uavs).filter(|&l| l != tx) {
                let rx_pos = scenario.deployment().position(listener);
                let arrivals = illuminated
                    .iter()
                    .map(|&q| geometry::aoa(&rx_pos, &scenario.grid().center_flat(q)))
                    .collect::<Result<Vec<_>>>()?;
                let steering: Vec<_> = arrivals.iter().map(|a| beamforming::steering_vector(*a, side)).collect();
                let mut cells = Vec::with_capacity(sets.intended.len());
                for &p in &sets.intended {
                    let intended = geometry::aoa(&rx_pos, &scenario.grid().center_flat(p))?;
                    let key = (intended.elevation.to_bits(), intended.azimuth.to_bits());
                    let index = match cache.get(&key) {
                        Some(&i) => i,
                        None => {
                            let w = beamforming::design(options.beamformer, intended, side, &options.ls, options.capon_loading)?;
                            beamformers.push(w);
                            cache.insert(key, beamformers.len() - 1);
                            beamformers.len() - 1
                        }
                    };
                    let w = &beamformers[index];
                    let (delay, d1, d2) = ofdm::matched_geometry(scenario, tx, listener, p);
                    let ground = illuminated
                        .iter()
                        .zip(&steering)
                        .map(|(&q, g)| {
                            let (e1, e2) = geometry::path_distances(&tx_pos, &scenario.grid().center_flat(q), &rx_pos);
                            let tau = (e1 + e2) / crate::config::SPEED_OF_LIGHT;
                            let b = ofdm::reflection_amplitude(config, 1.0, e1, e2);
                            w.gain(g) * b * ofdm::cross_kernel(tau, config.doppler, delay, config.doppler, &params)
                        })
                        .collect();
                    cells.push(CellLink {
                        cell: p,
                        beamformer: index,
                        delay,
                        d1,
                        d2,
                        ground,
                    });
                }
                per_tx.push(ListenerLinks { listener, cells });
            }
            links.push(per_tx);
        }
        Ok(Self { beamformers, links })
    }

    /// Number of distinct beamformers designed.
    pub fn beamformer_count(&self) -> usize {
        self.beamformers.len()
    }

    /// Number of (transmitter, listener, cell) estimates per trial.
    pub fn estimate_count(&self) -> usize {
        self.links.iter().flatten().map(|l| l.cells.len()).sum()
    }
}

/// Result of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub trial: u64,
    pub target: Point3,
    /// Indexed like [`FusionRule::ALL`].
    pub detections: [DetectionResult; 2],
}

impl TrialOutcome {
    pub fn detection(&self, rule: FusionRule) -> &DetectionResult {
        &self.detections[rule_index(rule)]
    }
}

fn rule_index(rule: FusionRule) -> usize {
    match rule {
        FusionRule::Average => 0,
        FusionRule::PrenormAverage => 1,
    }
}

/// Hit counts of a batch of trials for one fusion rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DetectionStats {
    pub trials: u64,
    /// Indexed like [`DELTAS`].
    pub hits: [u64; DELTAS.len()],
}

impl DetectionStats {
    pub fn record(&mut self, result: &DetectionResult) {
        self.trials += 1;
        for (h, hit) in self.hits.iter_mut().zip(result.hits()) {
            *h += hit as u64;
        }
    }

    pub fn merge(&mut self, other: &DetectionStats) {
        self.trials += other.trials;
        for (a, b) in self.hits.iter_mut().zip(other.hits) {
            *a += b;
        }
    }

    pub fn hits_at(&self, delta: usize) -> u64 {
        self.hits[delta_index(delta)]
    }

    /// P_d(Δ) = hits / trials.
    pub fn probability(&self, delta: usize) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        self.hits_at(delta) as f64 / self.trials as f64
    }

    /// Wald 95% half-width 1.96 √(p(1 − p)/T).
    pub fn ci95_halfwidth(&self, delta: usize) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        let p = self.probability(delta);
        1.96 * libm::sqrt(p * (1.0 - p) / self.trials as f64)
    }
}

fn delta_index(delta: usize) -> usize {
    DELTAS
        .iter()
        .position(|&d| d == delta)
        .unwrap_or_else(|| panic!("Δ = {delta} is not tracked"))
}

/// Statistics of a batch for both fusion rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BatchStats {
    by_rule: [DetectionStats; 2],
}

impl BatchStats {
    pub fn record(&mut self, outcome: &TrialOutcome) {
        for (s, d) in self.by_rule.iter_mut().zip(&outcome.detections) {
            s.record(d);
        }
    }

    pub fn merge(&mut self, other: &BatchStats) {
        for (a, b) in self.by_rule.iter_mut().zip(&other.by_rule) {
            a.merge(b);
        }
    }

    pub fn get(&self, rule: FusionRule) -> &DetectionStats {
        &self.by_rule[rule_index(rule)]
    }

    pub fn trials(&self) -> u64 {
        self.by_rule[0].trials
    }
}

/// Uniform target position over the sensed area.
pub fn draw_target(config: &ScenarioConfig, master_seed: u64, trial: u64) -> Point3 {
    let mut rng = stream_rng(master_seed, trial, Stream::Target);
    let x = rng.random::<f64>() * config.area_side;
    let y = rng.random::<f64>() * config.area_side;
    Point3::new(x, y, 0.0)
}

/// Scenario, options and precomputed plan.
#[derive(Debug, Clone)]
pub struct Simulator {
    scenario: Scenario,
    options: SimOptions,
    plan: SensingPlan,
}

impl Simulator {
    pub fn new(config: ScenarioConfig, options: SimOptions) -> Result<Self> {
        let scenario = Scenario::new(config)?;
        let plan = SensingPlan::build(&scenario, &options)?;
        Ok(Self { scenario, options, plan })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn config(&self) -> &ScenarioConfig {
        self.scenario.config()
    }

    pub fn options(&self) -> &SimOptions {
        &self.options
    }

    pub fn plan(&self) -> &SensingPlan {
        &self.plan
    }

    /// Switches σ_G without rebuilding the plan.
    pub fn with_ground_rcs(&self, ground_rcs: f64) -> Result<Self> {
        let mut config = self.config().clone();
        config.ground_rcs = ground_rcs;
        config.validate()?;
        let scenario = Scenario::new(config)?;
        Ok(Self {
            scenario,
            options: self.options.clone(),
            plan: self.plan.clone(),
        })
    }

    pub fn with_fast_path(mut self, fast_path: bool) -> Self {
        self.options.fast_path = fast_path;
        self
    }

    pub fn with_noise(mut self, noise: bool) -> Self {
        self.options.noise = noise;
        self
    }

    /// All per-cell estimates of one trial. Transmitters run in index order;
    /// within each, listeners and then intended cells in row-major order.
    pub fn estimates(&self, trial: u64, target: &Point3) -> Result<Vec<RcsEstimate>> {
        if self.options.fast_path {
            self.fast_estimates(trial, target)
        } else {
            self.reference_estimates(trial, target)
        }
    }

    fn fast_estimates(&self, trial: u64, target: &Point3) -> Result<Vec<RcsEstimate>> {
        let scenario = &self.scenario;
        let config = scenario.config();
        let params = scenario.ofdm_params();
        let seed = config.master_seed;
        let side = config.array_side;
        let samples = params.samples() as f64;
        let ground_scale = libm::sqrt(config.ground_rcs);
        let mut out = Vec::with_capacity(self.plan.estimate_count());
        for (tx, per_tx) in self.plan.links.iter().enumerate() {
            let tx_pos = scenario.deployment().position(tx);
            let illuminates = scenario.illuminates(tx, target);
            let q_len = scenario.cell_sets(tx).illuminated_count();
            for link in per_tx {
                let listener = link.listener;
                let rx_pos = scenario.deployment().position(listener);
                let mut phase_rng = stream_rng(seed, trial, Stream::Phases { tx, listener });
                let target_rotation = rotation(&mut phase_rng);
                let rotations: Vec<Complex64> = (0..q_len).map(|_| rotation(&mut phase_rng)).collect();
                let target_path = if illuminates {
                    let (t1, t2) = geometry::path_distances(&tx_pos, target, &rx_pos);
                    let g = beamforming::steering_vector(geometry::aoa(&rx_pos, target)?, side);
                    let b = ofdm::reflection_amplitude(config, config.target_rcs, t1, t2);
                    Some((g, b, (t1 + t2) / crate::config::SPEED_OF_LIGHT))
                } else {
                    None
                };
                for cell in &link.cells {
                    let w = &self.plan.beamformers[cell.beamformer];
                    let mut sum: Complex64 = cell.ground.iter().zip(&rotations).map(|(c, r)| c * r).sum();
                    sum *= ground_scale;
                    if let Some((g, b, tau)) = &target_path {
                        let k = ofdm::cross_kernel(*tau, config.doppler, cell.delay, config.doppler, &params);
                        sum += w.gain(g) * *b * target_rotation * k;
                    }
                    if self.options.noise {
                        let variance = samples * ofdm::beamformed_noise_variance(config, w);
                        let mut noise_rng = stream_rng(seed, trial, Stream::Noise { tx, listener, cell: cell.cell });
                        sum += complex_gaussian(&mut noise_rng, variance);
                    }
                    let peak = sum.norm_sqr() / samples;
                    out.push(RcsEstimate {
                        cell: cell.cell,
                        value: ofdm::estimate_rcs(peak, config, cell.d1, cell.d2),
                        listener,
                        transmitter: tx,
                    });
                }
            }
        }
        Ok(out)
    }

    fn reference_estimates(&self, trial: u64, target: &Point3) -> Result<Vec<RcsEstimate>> {
        let scenario = &self.scenario;
        let config = scenario.config();
        let params: OfdmParams = scenario.ofdm_params();
        let seed = config.master_seed;
        let mut out = Vec::with_capacity(self.plan.estimate_count());
        for (tx, per_tx) in self.plan.links.iter().enumerate() {
            let tx_frame = ofdm::synth_tx_frame(&params, &mut stream_rng(seed, trial, Stream::TxData { tx }));
            for link in per_tx {
                let listener = link.listener;
                for cell in &link.cells {
                    let mut phases = stream_rng(seed, trial, Stream::Phases { tx, listener });
                    let mut noise = stream_rng(seed, trial, Stream::Noise { tx, listener, cell: cell.cell });
                    out.push(ofdm::reference_cell_estimate(
                        tx,
                        listener,
                        cell.cell,
                        scenario,
                        &self.plan.beamformers[cell.beamformer],
                        Some(target),
                        &tx_frame,
                        self.options.noise,
                        CellStreams {
                            phases: &mut phases,
                            noise: &mut noise,
                        },
                    )?);
                }
            }
        }
        Ok(out)
    }

    /// Local maps of one trial, one per UAV in index order.
    pub fn local_maps(&self, trial: u64) -> Result<(Point3, Vec<LocalRcsMap>)> {
        let target = draw_target(self.config(), self.config().master_seed, trial);
        let estimates = self.estimates(trial, &target)?;
        Ok((target, assemble_local_maps(&self.scenario, &estimates)?))
    }

    pub fn run_trial(&self, trial: u64) -> Result<TrialOutcome> {
        let (target, maps) = self.local_maps(trial)?;
        let grid = self.scenario.grid();
        let mut detections = [DetectionResult::evaluate(geometry::CellIndex::new(0, 0), &target, grid); 2];
        for (slot, rule) in detections.iter_mut().zip(FusionRule::ALL) {
            let fused = fusion::fuse(&maps, rule)?;
            *slot = DetectionResult::evaluate(fusion::detect(&fused)?, &target, grid);
        }
        Ok(TrialOutcome {
            trial,
            target,
            detections,
        })
    }

    /// Serial batch over trials `0..config.trials`.
    pub fn run_monte_carlo(&self) -> Result<BatchStats> {
        self.run_range(0..self.config().trials as u64)
    }

    pub fn run_range(&self, trials: core::ops::Range<u64>) -> Result<BatchStats> {
        let mut stats = BatchStats::default();
        for t in trials {
            stats.record(&self.run_trial(t)?);
        }
        Ok(stats)
    }
}

fn rotation<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let zeta = rng.random::<f64>() * TAU;
    Complex64::new(libm::cos(-zeta), libm::sin(-zeta))
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = libm::sqrt(variance / 2.0);
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * scale, im * scale)
}

/// Builds one map per UAV from the estimates it received as listener.
/// Repeated estimates of a cell are averaged; the owner's own intended cells stay empty.
pub fn assemble_local_maps(scenario: &Scenario, estimates: &[RcsEstimate]) -> Result<Vec<LocalRcsMap>> {
    let uavs = scenario.uav_count();
    let cells = scenario.grid().len();
    let mut sums = vec![(0.0f64, 0u32); uavs * cells];
    for e in estimates {
        if e.transmitter == e.listener {
            return Err(Error::SelfListening(e.listener));
        }
        let slot = &mut sums[e.listener * cells + e.cell];
        slot.0 += e.value;
        slot.1 += 1;
    }
    let side = scenario.grid().side();
    (0..uavs)
        .map(|u| {
            let mut values: Vec<Option<f64>> = sums[u * cells..(u + 1) * cells]
                .iter()
                .map(|&(s, n)| (n > 0).then(|| s / n as f64))
                .collect();
            for &own in &scenario.cell_sets(u).intended {
                values[own] = None;
            }
            LocalRcsMap::from_values(u, side, values)
        })
        .collect()
}
