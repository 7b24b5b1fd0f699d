//! Runtime oracle checks: transform equivalence, beamformer constraints and
//! the RCS round trip.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64;
use rand::Rng;
use uavsense_core::beamforming::{self, aoa_mesh, capon_beamformer, ls_beamformer, LsOptions, SteeringMatrix};
use uavsense_core::config::{ScenarioConfig, SPEED_OF_LIGHT};
use uavsense_core::geometry::AoA;
use uavsense_core::ofdm::{self, Frame, OfdmParams, ProcessedFrame, ReflectionComponent, ReflectionSet};
use uavsense_core::rng::{stream_rng, SimRng, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn rng(salt: u64) -> SimRng {
    stream_rng(0x5e1f_7e57, salt, Stream::Target)
}

fn direct_periodogram(f: &Frame, np: usize, mp: usize) -> Vec<f64> {
    let (n, m) = (f.symbols(), f.subcarriers());
    let mut out = Vec::with_capacity(np * mp);
    for nb in 0..np {
        for mb in 0..mp {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..n {
                for l in 0..m {
                    let a = TAU * (l * mb) as f64 / mp as f64 - TAU * (k * nb) as f64 / np as f64;
                    s += f.get(k, l) * Complex64::from_polar(1.0, a);
                }
            }
            out.push(s.norm_sqr() / (n * m) as f64);
        }
    }
    out
}

/// Fast periodogram against the direct double sum on random 8×8 frames padded to 16×16.
pub fn transform_equivalence(frames: usize) -> CheckResult {
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for _ in 0..frames {
        let f = Frame::from_fn(8, 8, |_, _| Complex64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5));
        let fast = match ofdm::periodogram_grid(&ProcessedFrame(f.clone()), 16, 16) {
            Ok(p) => p,
            Err(e) => return fail("transform equivalence", e.to_string()),
        };
        let direct = direct_periodogram(&f, 16, 16);
        let peak = direct.iter().cloned().fold(0.0, f64::max);
        for (a, b) in fast.values.iter().zip(&direct) {
            worst = worst.max((a - b).abs() / peak);
        }
    }
    check("transform equivalence", worst <= 1e-9, format!("{frames} frames, worst relative error {worst:.3e}"))
}

fn random_aoa<R: Rng>(r: &mut R) -> AoA {
    AoA::new(r.random::<f64>() * FRAC_PI_2, r.random::<f64>() * TAU)
}

/// Capon distortionless response on random arrival angles.
pub fn capon_constraint(angles: usize, side: usize) -> CheckResult {
    let mut r = rng(2);
    let mut worst = 0.0f64;
    for _ in 0..angles {
        let a = random_aoa(&mut r);
        match capon_beamformer(a, side, 1e-2) {
            Ok(w) => worst = worst.max((w.gain_at(a, side) - 1.0).norm()),
            Err(e) => return fail("capon distortionless", e.to_string()),
        }
    }
    check("capon distortionless", worst < 1e-12, format!("{angles} angles, worst |wᴴg − 1| {worst:.3e}"))
}

/// LS unit norm and mesh residual no worse than the normalized steering vector.
pub fn ls_contracts(angles: usize, side: usize) -> CheckResult {
    let mut r = rng(3);
    let mut worst_norm = 0.0f64;
    let mut worst_margin = f64::NEG_INFINITY;
    for _ in 0..angles {
        let a = random_aoa(&mut r);
        let outcome = aoa_mesh(a, side).and_then(|mesh| {
            let w = ls_beamformer(&mesh, side, &LsOptions::default())?;
            let columns = SteeringMatrix::from_aoas(mesh.aoas(), side);
            let g = beamforming::steering_vector(a, side);
            let scale = 1.0 / (g.len() as f64).sqrt();
            let baseline: Vec<Complex64> = g.entries().iter().map(|e| e * scale).collect();
            let ls = beamforming::mesh_residual(columns.columns(), &mesh.desired, w.weights());
            let base = beamforming::mesh_residual(columns.columns(), &mesh.desired, &baseline);
            Ok((w.norm_sqr().sqrt(), ls - base))
        });
        match outcome {
            Ok((norm, margin)) => {
                worst_norm = worst_norm.max((norm - 1.0).abs());
                worst_margin = worst_margin.max(margin);
            }
            Err(e) => return fail("ls contracts", e.to_string()),
        }
    }
    check(
        "ls contracts",
        worst_norm <= 1e-9 && worst_margin <= 0.0,
        format!("{angles} angles, worst | ||w|| − 1 | {worst_norm:.3e}, worst residual excess {worst_margin:.3e}"),
    )
}

/// Noiseless single reflection with unit gain recovers σ_T.
pub fn rcs_roundtrip() -> CheckResult {
    let cfg = ScenarioConfig::default();
    let params = OfdmParams::from_config(&cfg);
    let (d1, d2) = (171.3, 204.9);
    let delay = (d1 + d2) / SPEED_OF_LIGHT;
    let refl = ReflectionSet {
        components: vec![ReflectionComponent {
            amplitude: ofdm::reflection_amplitude(&cfg, cfg.target_rcs, d1, d2),
            gain: Complex64::new(1.0, 0.0),
            delay,
            doppler: 0.0,
            phase: 1.1,
        }],
        includes_target: true,
    };
    let mut r = rng(4);
    let result = (|| {
        let tx = ofdm::synth_tx_frame(&params, &mut r);
        let rx = ofdm::synth_rx_frame(&tx, &refl, &params, 0.0, &mut r)?;
        let peak = ofdm::matched_point_value(&ofdm::remove_data(&rx, &tx)?, delay, 0.0, &params);
        Ok::<_, uavsense_core::error::Error>(ofdm::estimate_rcs(peak, &cfg, d1, d2))
    })();
    match result {
        Ok(sigma) => {
            let rel = (sigma / cfg.target_rcs - 1.0).abs();
            check("rcs roundtrip", rel <= 1e-6, format!("σ̂ = {sigma:.12} m², relative error {rel:.3e}"))
        }
        Err(e) => fail("rcs roundtrip", e.to_string()),
    }
}

pub fn run_all() -> Vec<CheckResult> {
    vec![
        transform_equivalence(100),
        capon_constraint(1000, 8),
        ls_contracts(50, 8),
        rcs_roundtrip(),
    ]
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

fn fail(name: &'static str, detail: String) -> CheckResult {
    check(name, false, detail)
}
