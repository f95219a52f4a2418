use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::link::{process_frame, receiver_for, CodedLink, FrameOutcome};
use crate::online_scaling::{normalized_mean_error, Factors, ScalingReport};
use crate::Result;

/// Two-sided Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    MinFrameErrors,
    MaxFrames,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorSign {
    Both,
    Plus,
    Minus,
}

/// Mean online factor of one class (and sign) over the frames of a point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanFactor {
    pub class: u8,
    pub sign: FactorSign,
    pub mean: f64,
}

/// Accuracy of decided-bit factors against genie factors from the same records.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorAccuracy {
    pub class: u8,
    pub sign: FactorSign,
    pub mean_genie_factor: f64,
    pub mean_decided_factor: f64,
    pub normalized_mean_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrPoint {
    pub snr_db: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub bit_errors: u64,
    pub fer: f64,
    pub ber: f64,
    /// 95% Wilson interval of the FER.
    pub fer_interval: (f64, f64),
    pub stop: StopReason,
    pub mean_factors: Vec<MeanFactor>,
    pub factor_accuracy: Vec<FactorAccuracy>,
    /// Mean per-coded-bit I-curve at `s = 1`, before and after scaling.
    pub gmi_unscaled: f64,
    pub gmi_scaled: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub code_version: String,
}

impl Provenance {
    pub fn of(config: &SimConfig) -> Self {
        Self {
            config_hash: config.hash(),
            seed: config.seed,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub config: SimConfig,
    pub points: Vec<SnrPoint>,
    pub provenance: Provenance,
}

fn flatten(report: &ScalingReport) -> Vec<(u8, FactorSign, f64)> {
    report
        .channels
        .iter()
        .flat_map(|c| match c.factors {
            Factors::Single { factor } => vec![(c.class, FactorSign::Both, factor)],
            Factors::Split { s_plus, s_minus } => {
                vec![
                    (c.class, FactorSign::Plus, s_plus),
                    (c.class, FactorSign::Minus, s_minus),
                ]
            }
        })
        .collect()
}

fn summarize(
    snr_db: f64,
    info_bits: usize,
    outcomes: &[FrameOutcome],
    stop: StopReason,
) -> Result<SnrPoint> {
    let frames = outcomes.len() as u64;
    let frame_errors = outcomes.iter().filter(|o| o.frame_error).count() as u64;
    let bit_errors: u64 = outcomes.iter().map(|o| o.bit_errors).sum();
    let n = frames.max(1) as f64;

    let decided: Vec<Vec<(u8, FactorSign, f64)>> = outcomes
        .iter()
        .filter_map(|o| o.report.as_ref())
        .map(flatten)
        .collect();
    let mean_factors = match decided.first() {
        Some(first) => (0..first.len())
            .map(|k| MeanFactor {
                class: first[k].0,
                sign: first[k].1,
                mean: decided.iter().map(|f| f[k].2).sum::<f64>() / decided.len() as f64,
            })
            .collect(),
        None => Vec::new(),
    };

    let genie: Vec<Vec<(u8, FactorSign, f64)>> = outcomes
        .iter()
        .filter_map(|o| o.genie_report.as_ref())
        .map(flatten)
        .collect();
    let mut factor_accuracy = Vec::new();
    if let Some(first) = genie.first() {
        for k in 0..first.len() {
            let g: Vec<f64> = genie.iter().map(|f| f[k].2).collect();
            let d: Vec<f64> = decided.iter().map(|f| f[k].2).collect();
            factor_accuracy.push(FactorAccuracy {
                class: first[k].0,
                sign: first[k].1,
                mean_genie_factor: g.iter().sum::<f64>() / g.len() as f64,
                mean_decided_factor: d.iter().sum::<f64>() / d.len() as f64,
                normalized_mean_error: normalized_mean_error(&g, &d)?,
            });
        }
    }

    Ok(SnrPoint {
        snr_db,
        frames,
        frame_errors,
        bit_errors,
        fer: frame_errors as f64 / n,
        ber: bit_errors as f64 / (n * info_bits as f64),
        fer_interval: wilson_interval(frame_errors, frames, 1.96),
        stop,
        mean_factors,
        factor_accuracy,
        gmi_unscaled: outcomes.iter().map(|o| o.gmi_unscaled).sum::<f64>() / n,
        gmi_scaled: outcomes.iter().map(|o| o.gmi_scaled).sum::<f64>() / n,
    })
}

/// Simulates one SNR point until the stopping rule fires. Frames run in
/// parallel batches and are aggregated in index order.
pub fn run_snr_point(config: &SimConfig, link: &CodedLink, snr_db: f64) -> Result<SnrPoint> {
    let receiver = receiver_for(config, snr_db)?;
    let rule = config.stopping;
    let mut outcomes: Vec<FrameOutcome> = Vec::new();
    let mut errors = 0;
    let stop = loop {
        if errors >= rule.min_frame_errors {
            break StopReason::MinFrameErrors;
        }
        let start = outcomes.len() as u64;
        if start >= rule.max_frames {
            break StopReason::MaxFrames;
        }
        let end = (start + rule.batch_frames).min(rule.max_frames);
        let batch = (start..end)
            .into_par_iter()
            .map(|f| process_frame(link, config, &receiver, f, snr_db))
            .collect::<Result<Vec<_>>>()?;
        errors += batch.iter().filter(|o| o.frame_error).count() as u64;
        outcomes.extend(batch.into_iter().map(|mut o| {
            o.decoded = Vec::new();
            o
        }));
    };
    summarize(snr_db, link.code().info_len(), &outcomes, stop)
}

/// FER/BER over the configured SNR grid.
pub fn run_fer_experiment(config: &SimConfig) -> Result<ScenarioResult> {
    config.validate()?;
    let link = CodedLink::new(config)?;
    let points = config
        .snr_db
        .iter()
        .map(|&snr| run_snr_point(config, &link, snr))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioResult {
        config: config.clone(),
        points,
        provenance: Provenance::of(config),
    })
}

impl ScenarioResult {
    /// CSV summary, one row per SNR point.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "snr_db",
            "frames",
            "frame_errors",
            "fer",
            "fer_lo",
            "fer_hi",
            "bit_errors",
            "ber",
            "stop",
            "gmi_unscaled",
            "gmi_scaled",
        ])?;
        for p in &self.points {
            let stop = match p.stop {
                StopReason::MinFrameErrors => "min-frame-errors",
                StopReason::MaxFrames => "max-frames",
            };
            w.write_record([
                p.snr_db.to_string(),
                p.frames.to_string(),
                p.frame_errors.to_string(),
                format!("{:.6e}", p.fer),
                format!("{:.6e}", p.fer_interval.0),
                format!("{:.6e}", p.fer_interval.1),
                p.bit_errors.to_string(),
                format!("{:.6e}", p.ber),
                stop.to_string(),
                format!("{:.6}", p.gmi_unscaled),
                format!("{:.6}", p.gmi_scaled),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
