use rand::Rng;

use super::config::{snr_key, PostScaling, ScalingMode, SimConfig};
use crate::channel::{self, ChannelKind, MismatchModel};
use crate::constellation::{Bit, BitChannelId, Constellation};
use crate::dataset::RecordSet;
use crate::detector::{demap_block, Demapper, LlrRecord};
use crate::gmi::{icurve_eval, BitSource, ScalingScheme};
use crate::online_scaling::{online_factors, ScalingReport};
use crate::rng::{derive_seed, stream, stream_rng};
use crate::turbo::{DecoderConfig, Interleaver, TurboCode};
use crate::Result;

/// Turbo code, bit interleaver and modulator shared by every frame of an
/// experiment. Frame `f` at a given SNR always sees the same bits, fading
/// and noise, whatever the scaling mode or decoder, so runs are paired.
#[derive(Clone, Debug)]
pub struct CodedLink {
    constellation: Constellation,
    code: TurboCode,
    channel_interleaver: Interleaver,
    /// Bit channel carrying each codeword position.
    channel_of: Vec<BitChannelId>,
    channel: ChannelKind,
    mismatch: MismatchModel,
    demapper: Demapper,
    llr_prescale: f64,
    seed: u64,
}

/// One transmitted code block as seen by the decoder.
#[derive(Clone, Debug)]
pub struct Frame {
    pub info: Vec<Bit>,
    pub coded: Vec<Bit>,
    /// Channel LLRs in codeword order.
    pub llrs: Vec<f64>,
}

impl CodedLink {
    pub fn new(config: &SimConfig) -> Result<Self> {
        let constellation = Constellation::qam(config.modulation)?;
        let code = TurboCode::new(
            config.code.info_bits,
            derive_seed(config.seed, &[stream::TURBO_INTERLEAVER]),
            &config.code.puncture,
        )?;
        let m = constellation.bits_per_symbol();
        let padded = code.coded_len().div_ceil(m) * m;
        let channel_interleaver = Interleaver::random(
            padded,
            derive_seed(config.seed, &[stream::CHANNEL_INTERLEAVER]),
        );
        let mut channel_of = vec![BitChannelId::new(0); padded];
        for (k, &j) in channel_interleaver.permutation().iter().enumerate() {
            channel_of[j] = BitChannelId::new(k % m);
        }
        channel_of.truncate(code.coded_len());
        Ok(Self {
            constellation,
            code,
            channel_interleaver,
            channel_of,
            channel: config.channel,
            mismatch: config.mismatch,
            demapper: config.demapper,
            llr_prescale: config.llr_prescale,
            seed: config.seed,
        })
    }

    pub fn code(&self) -> &TurboCode {
        &self.code
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn channel_of(&self) -> &[BitChannelId] {
        &self.channel_of
    }

    pub fn frame_seed(&self, frame: u64, snr_db: f64) -> u64 {
        derive_seed(self.seed, &[frame, snr_key(snr_db) as u64])
    }

    /// Encodes, modulates and demaps frame `frame`. The prescale is applied
    /// after the demapper's clipping and is not clipped again.
    pub fn transmit_frame(&self, frame: u64, snr_db: f64) -> Result<Frame> {
        let seed = self.frame_seed(frame, snr_db);
        let mut rng = stream_rng(seed, &[stream::BITS]);
        let info: Vec<Bit> = (0..self.code.info_len())
            .map(|_| rng.random_range(0..2u8))
            .collect();
        let coded = self.code.encode(&info)?;
        let mut padded = coded.clone();
        let mut rng = stream_rng(seed, &[stream::PADDING]);
        padded.resize_with(self.channel_interleaver.len(), || rng.random_range(0..2u8));
        let tx = self.channel_interleaver.interleave(&padded);
        let symbols = self.constellation.map_stream(&tx)?;
        let noise_variance = channel::snr_db_to_noise_variance(snr_db);
        let real = channel::transmit(&symbols, self.channel, noise_variance, seed)?;
        let (estimates, assumed) = channel::receiver_view(&real, &self.mismatch, seed);
        let rx = demap_block(
            self.demapper,
            &real.received,
            &estimates,
            assumed,
            &self.constellation,
        )?;
        let mut llrs = self.channel_interleaver.deinterleave(&rx);
        llrs.truncate(coded.len());
        if self.llr_prescale != 1.0 {
            llrs.iter_mut().for_each(|l| *l *= self.llr_prescale);
        }
        Ok(Frame { info, coded, llrs })
    }

    /// Records for `llrs` in codeword order, with optional decisions.
    pub fn records(
        &self,
        frame: u64,
        llrs: &[f64],
        truth: &[Bit],
        decided: Option<&[Bit]>,
    ) -> Vec<LlrRecord> {
        llrs.iter()
            .zip(truth)
            .enumerate()
            .map(|(j, (&llr, &bit))| LlrRecord {
                llr,
                bit_channel: self.channel_of[j],
                true_bit: Some(bit),
                decided_bit: decided.map(|d| d[j]),
                frame: frame as u32,
                position: j as u32,
            })
            .collect()
    }

    /// Scales codeword-order LLRs by class.
    pub fn scale(&self, llrs: &[f64], scheme: &ScalingScheme) -> Result<Vec<f64>> {
        llrs.iter()
            .zip(&self.channel_of)
            .map(|(&l, ch)| scheme.scale(ch.class as usize, l))
            .collect()
    }
}

/// Receiver-side result of one frame.
#[derive(Clone, Debug)]
pub struct FrameOutcome {
    pub frame_error: bool,
    pub bit_errors: u64,
    pub decoded: Vec<Bit>,
    /// Online factors used for the frame.
    pub report: Option<ScalingReport>,
    /// Genie-bit factors searched on the same records.
    pub genie_report: Option<ScalingReport>,
    /// Per-coded-bit I-curve at `s = 1` before and after scaling.
    pub gmi_unscaled: f64,
    pub gmi_scaled: f64,
}

/// How a frame's LLRs are corrected before decoding.
#[derive(Clone, Debug)]
pub enum Receiver {
    Plain,
    Offline(ScalingScheme),
    Online,
}

/// Runs the receiver chain for one frame: plain decode, offline scaling, or
/// one S-MLM iteration, decided-bit factor search, scaling of the original
/// channel LLRs and a full decode that restarts or continues.
pub fn process_frame(
    link: &CodedLink,
    config: &SimConfig,
    receiver: &Receiver,
    frame_index: u64,
    snr_db: f64,
) -> Result<FrameOutcome> {
    let frame = link.transmit_frame(frame_index, snr_db)?;
    let classes = link.constellation.num_classes();
    let (llrs, decoder, apriori, report, genie_report) = match receiver {
        Receiver::Plain => (frame.llrs.clone(), config.decoder, None, None, None),
        Receiver::Offline(scheme) => (
            link.scale(&frame.llrs, scheme)?,
            config.decoder,
            None,
            None,
            None,
        ),
        Receiver::Online => {
            let mode = config
                .scaling
                .online()
                .unwrap_or(crate::online_scaling::OnlineMode::OneLevel);
            let initial = if config.bit_source == BitSource::Decided
                || config.post_scaling == PostScaling::Continue
            {
                Some(link.code.initial_iteration(
                    &frame.llrs,
                    config.decoder.extrinsic_scale,
                    config.decision_feedback,
                )?)
            } else {
                None
            };
            let decisions = match config.bit_source {
                BitSource::Decided => initial.as_ref().map(|i| i.decisions.as_slice()),
                BitSource::Genie => None,
            };
            let set =
                RecordSet::new(link.records(frame_index, &frame.llrs, &frame.coded, decisions));
            let report = online_factors(&set, classes, mode, &config.search, config.bit_source)?;
            let genie_report =
                if config.track_factor_accuracy && config.bit_source == BitSource::Decided {
                    Some(online_factors(
                        &set,
                        classes,
                        mode,
                        &config.search,
                        BitSource::Genie,
                    )?)
                } else {
                    None
                };
            let decoder = DecoderConfig {
                max_iters: config.post_scaling_iters(),
                ..config.decoder
            };
            let apriori = match config.post_scaling {
                PostScaling::Continue => initial.map(|i| i.extrinsic),
                PostScaling::Restart => None,
            };
            (
                link.scale(&frame.llrs, &report.scheme())?,
                decoder,
                apriori,
                Some(report),
                genie_report,
            )
        }
    };
    let outcome = link.code.decode_from(&llrs, &decoder, apriori.as_deref())?;
    let bit_errors = outcome
        .info_bits
        .iter()
        .zip(&frame.info)
        .filter(|(a, b)| a != b)
        .count() as u64;
    let gmi_unscaled = icurve_eval(
        &link.records(frame_index, &frame.llrs, &frame.coded, None),
        1.0,
        BitSource::Genie,
    )?;
    let gmi_scaled = if matches!(receiver, Receiver::Plain) {
        gmi_unscaled
    } else {
        icurve_eval(
            &link.records(frame_index, &llrs, &frame.coded, None),
            1.0,
            BitSource::Genie,
        )?
    };
    Ok(FrameOutcome {
        frame_error: bit_errors > 0,
        bit_errors,
        decoded: outcome.info_bits,
        report,
        genie_report,
        gmi_unscaled,
        gmi_scaled,
    })
}

/// Receiver for `config.scaling`; offline schemes are trained at `snr_db`.
pub fn receiver_for(config: &SimConfig, snr_db: f64) -> Result<Receiver> {
    Ok(match config.scaling {
        ScalingMode::None => Receiver::Plain,
        ScalingMode::Online1Level | ScalingMode::Online2Level => Receiver::Online,
        mode => Receiver::Offline(super::analysis::train_offline_scheme(config, snr_db, mode)?),
    })
}
