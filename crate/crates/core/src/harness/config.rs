use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{ChannelKind, MismatchModel};
use crate::constellation::Constellation;
use crate::detector::Demapper;
use crate::gmi::{BitSource, HistogramOptions};
use crate::online_scaling::{OnlineMode, SearchParams};
use crate::turbo::{DecisionFeedback, DecoderConfig, PUNCTURE_RATE_0_4};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScalingMode {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "lut-offline")]
    LutOffline,
    #[serde(rename = "uniform-offline")]
    UniformOffline,
    #[serde(rename = "online-1level")]
    Online1Level,
    #[serde(rename = "online-2level")]
    Online2Level,
}

impl ScalingMode {
    pub const ALL: [ScalingMode; 5] = [
        ScalingMode::None,
        ScalingMode::LutOffline,
        ScalingMode::UniformOffline,
        ScalingMode::Online1Level,
        ScalingMode::Online2Level,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScalingMode::None => "none",
            ScalingMode::LutOffline => "lut-offline",
            ScalingMode::UniformOffline => "uniform-offline",
            ScalingMode::Online1Level => "online-1level",
            ScalingMode::Online2Level => "online-2level",
        }
    }

    pub fn online(self) -> Option<OnlineMode> {
        match self {
            ScalingMode::Online1Level => Some(OnlineMode::OneLevel),
            ScalingMode::Online2Level => Some(OnlineMode::TwoLevel),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodeConfig {
    pub info_bits: usize,
    /// Periodic keep-mask over the parity stream; empty keeps everything.
    pub puncture: Vec<bool>,
}

impl Default for CodeConfig {
    fn default() -> Self {
        Self {
            info_bits: 1024,
            puncture: PUNCTURE_RATE_0_4.to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StoppingRule {
    pub min_frame_errors: u64,
    pub max_frames: u64,
    /// Frames simulated between stopping checks.
    pub batch_frames: u64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            min_frame_errors: 100,
            max_frames: 100_000,
            batch_frames: 32,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Uncoded symbols per SNR point.
    pub symbols: usize,
    pub histogram: HistogramOptions,
    pub lut_segments: usize,
    /// Log-spaced curve grid `(lo, hi, points)`.
    pub grid: (f64, f64, usize),
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            symbols: 200_000,
            histogram: HistogramOptions::default(),
            lut_segments: 16,
            grid: (0.1, 10.0, 201),
        }
    }
}

/// Start of the decode that follows online scaling.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PostScaling {
    Restart,
    #[default]
    Continue,
}

/// One experiment. Missing JSON fields take their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub modulation: usize,
    pub channel: ChannelKind,
    pub snr_db: Vec<f64>,
    pub mismatch: MismatchModel,
    pub demapper: Demapper,
    pub code: CodeConfig,
    pub decoder: DecoderConfig,
    /// Iterations of the full decode after online scaling; defaults to
    /// `decoder.max_iters - 1` so the total matches the unscaled budget.
    pub post_scaling_iters: Option<usize>,
    pub scaling: ScalingMode,
    pub bit_source: BitSource,
    /// Coded-bit decisions used when `bit_source` is `decided`.
    pub decision_feedback: DecisionFeedback,
    /// Whether the decode after online scaling restarts from zero a priori
    /// information or continues from the initial iteration's extrinsics.
    pub post_scaling: PostScaling,
    pub search: SearchParams,
    pub stopping: StoppingRule,
    pub analysis: AnalysisConfig,
    /// Uncoded symbols used to train offline schemes for FER runs.
    pub offline_training_symbols: usize,
    /// Multiplies every channel LLR before any scaling or decoding.
    pub llr_prescale: f64,
    /// Also search genie factors per frame and report the decided factors' error.
    pub track_factor_accuracy: bool,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            modulation: 64,
            channel: ChannelKind::Rayleigh,
            snr_db: vec![7.0],
            mismatch: MismatchModel::PERFECT,
            demapper: Demapper::MaxLog,
            code: CodeConfig::default(),
            decoder: DecoderConfig::default(),
            post_scaling_iters: None,
            scaling: ScalingMode::None,
            bit_source: BitSource::Decided,
            decision_feedback: DecisionFeedback::Posterior,
            post_scaling: PostScaling::Continue,
            search: SearchParams::default(),
            stopping: StoppingRule::default(),
            analysis: AnalysisConfig::default(),
            offline_training_symbols: 200_000,
            llr_prescale: 1.0,
            track_factor_accuracy: false,
            seed: 1,
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        Constellation::qam(self.modulation)?;
        if self.snr_db.is_empty() {
            return Err(invalid("snr_db must not be empty"));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(invalid("snr_db values must be finite"));
        }
        self.mismatch.validate()?;
        self.search.validate()?;
        let stop = &self.stopping;
        if stop.min_frame_errors == 0 || stop.max_frames == 0 || stop.batch_frames == 0 {
            return Err(invalid("stopping rule values must be positive"));
        }
        if self.code.info_bits == 0 {
            return Err(invalid("code.info_bits must be positive"));
        }
        if self.decoder.max_iters == 0 || self.post_scaling_iters == Some(0) {
            return Err(invalid("iteration counts must be positive"));
        }
        if !(self.decoder.extrinsic_scale > 0.0) {
            return Err(invalid("decoder.extrinsic_scale must be positive"));
        }
        if !(self.llr_prescale > 0.0) || !self.llr_prescale.is_finite() {
            return Err(invalid("llr_prescale must be positive"));
        }
        if self.analysis.symbols == 0
            || self.analysis.lut_segments == 0
            || self.analysis.grid.2 == 0
        {
            return Err(invalid("analysis sizes must be positive"));
        }
        let (lo, hi, _) = self.analysis.grid;
        if !(lo > 0.0 && lo < hi) {
            return Err(invalid("analysis.grid bounds must satisfy 0 < lo < hi"));
        }
        if matches!(
            self.scaling,
            ScalingMode::LutOffline | ScalingMode::UniformOffline
        ) && self.offline_training_symbols == 0
        {
            return Err(invalid(
                "offline scaling needs offline_training_symbols > 0",
            ));
        }
        Ok(())
    }

    pub fn post_scaling_iters(&self) -> usize {
        self.post_scaling_iters
            .unwrap_or(self.decoder.max_iters.saturating_sub(1).max(1))
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// SNR key used in seed paths and file names: milli-dB.
pub fn snr_key(snr_db: f64) -> i64 {
    (snr_db * 1000.0).round() as i64
}
