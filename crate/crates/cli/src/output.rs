//! CSV tables and JSON run manifests.

use std::io::{Read, Write};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use serde_json::{Number, Value};
use uavsense_core::sweep::{InvalidPoint, SweepRow};

use crate::config::ConfigFile;

pub const CSV_HEADER: [&str; 11] = [
    "sweep_param",
    "sweep_value",
    "beamformer",
    "fusion",
    "sigma_G_dBsm",
    "delta",
    "trials",
    "hits",
    "p_detect",
    "ci95_halfwidth",
    "seed",
];

/// 17 significant digits, enough to round-trip any f64.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes the header and one line per row.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> anyhow::Result<()> {
    if rows.is_empty() {
        bail!("no result rows to write");
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.sweep_param.clone(),
            r.sweep_value.map(format_f64).unwrap_or_default(),
            r.beamformer.as_str().to_owned(),
            r.fusion.as_str().to_owned(),
            format_f64(r.sigma_g_dbsm),
            r.delta.to_string(),
            r.trials.to_string(),
            r.hits.to_string(),
            format_f64(r.p_detect),
            format_f64(r.ci95_halfwidth),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_record(rec: &csv::StringRecord) -> anyhow::Result<SweepRow> {
    let f = |k: usize| rec.get(k).unwrap_or_default();
    Ok(SweepRow {
        sweep_param: f(0).to_owned(),
        sweep_value: match f(1) {
            "" => None,
            v => Some(v.parse()?),
        },
        beamformer: f(2).parse()?,
        fusion: f(3).parse()?,
        sigma_g_dbsm: f(4).parse()?,
        delta: f(5).parse()?,
        trials: f(6).parse()?,
        hits: f(7).parse()?,
        p_detect: f(8).parse()?,
        ci95_halfwidth: f(9).parse()?,
        seed: f(10).parse()?,
    })
}

pub fn read_csv<R: Read>(input: R) -> anyhow::Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        bail!("unexpected CSV header {header:?}");
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| parse_record(&rec?).with_context(|| format!("CSV data line {}", i + 1)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub sweep_param: String,
    pub sweep_value: Option<f64>,
    pub beamformer: String,
    pub fusion: String,
    #[serde(rename = "sigma_G_dBsm")]
    pub sigma_g_dbsm: f64,
    pub delta: usize,
    pub trials: u64,
    pub hits: u64,
    pub p_detect: f64,
    pub ci95_halfwidth: f64,
    pub seed: u64,
}

impl From<&SweepRow> for ManifestRow {
    fn from(r: &SweepRow) -> Self {
        Self {
            sweep_param: r.sweep_param.clone(),
            sweep_value: r.sweep_value,
            beamformer: r.beamformer.as_str().to_owned(),
            fusion: r.fusion.as_str().to_owned(),
            sigma_g_dbsm: r.sigma_g_dbsm,
            delta: r.delta,
            trials: r.trials,
            hits: r.hits,
            p_detect: r.p_detect,
            ci95_halfwidth: r.ci95_halfwidth,
            seed: r.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvalidEntry {
    pub value: f64,
    pub error: String,
}

impl From<&InvalidPoint> for InvalidEntry {
    fn from(p: &InvalidPoint) -> Self {
        Self {
            value: p.value,
            error: p.error.to_string(),
        }
    }
}

/// Everything needed to rerun and compare a result table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub master_seed: u64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    /// Resolved configuration; feeding it back through `--config` reproduces the rows.
    pub config: ConfigFile,
    pub rows: Vec<ManifestRow>,
    pub invalid_points: Vec<InvalidEntry>,
}

impl RunManifest {
    pub fn new(command: &str, preset: Option<&str>, config: &ConfigFile, rows: &[SweepRow], invalid: &[InvalidPoint]) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.to_owned(),
            preset: preset.map(str::to_owned),
            master_seed: config.run.seed,
            timestamp,
            config: config.clone(),
            rows: rows.iter().map(ManifestRow::from).collect(),
            invalid_points: invalid.iter().map(InvalidEntry::from).collect(),
        }
    }

    /// Pretty JSON with every non-integer number written to 17 significant digits.
    pub fn to_json_string(&self) -> anyhow::Result<String> {
        let mut value = serde_json::to_value(self)?;
        widen_floats(&mut value)?;
        Ok(serde_json::to_string_pretty(&value)?)
    }

    pub fn from_json_str(text: &str) -> anyhow::Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn widen_floats(value: &mut Value) -> anyhow::Result<()> {
    match value {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => {
            let x = n.as_f64().context("non-finite number")?;
            *n = format_f64(x).parse::<Number>()?;
        }
        Value::Array(items) => items.iter_mut().try_for_each(widen_floats)?,
        Value::Object(map) => map.values_mut().try_for_each(widen_floats)?,
        _ => {}
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(format_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(format_f64(-30.0), "-3.0000000000000000e1");
        for x in [0.1, 1.0 / 3.0, 0.844, f64::MIN_POSITIVE, 1e300] {
            assert_eq!(format_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
