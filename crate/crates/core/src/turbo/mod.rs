//! Rate-1/3 parallel-concatenated turbo code with periodic parity puncturing.
//!
//! Unpunctured layout (length `3K + 12`): for every information bit `k` the
//! triple `(x_k, z1_k, z2_k)`, followed by the tail of the first encoder
//! `(x1, z1) x 3` and the tail of the second encoder `(x2, z2) x 3`.
//! Puncturing only removes parity bits `z1_k, z2_k`; the parity sequence index
//! `2k` (first encoder) or `2k + 1` (second encoder) is kept when the periodic
//! mask is `true` there.

mod bcjr;
mod interleaver;
mod trellis;

pub use bcjr::MaxStar;
pub use interleaver::Interleaver;
pub use trellis::{Trellis, MEMORY, NUM_STATES};

use serde::{Deserialize, Serialize};

use crate::constellation::Bit;
use crate::{Error, Result};

/// Tail bits of both constituent encoders.
pub const TAIL_BITS: usize = 4 * MEMORY;

/// Periodic mask keeping 3 of every 4 parity bits, rate `K / (2.5K + 12)`, about 0.4.
pub const PUNCTURE_RATE_0_4: [bool; 4] = [true, true, true, false];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    /// LogMAP: exact (or table-corrected) max-star, unscaled extrinsics.
    #[serde(rename = "LM")]
    LogMap,
    /// Max-LogMAP with extrinsic LLRs multiplied by a constant.
    #[serde(rename = "S-MLM")]
    ScaledMaxLogMap,
}

/// How coded-bit decisions are formed after the initial iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecisionFeedback {
    /// Re-encode the information decisions.
    Reencode,
    /// Hard-decide each coded bit's constituent-decoder APP.
    Posterior,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecoderConfig {
    pub algorithm: Algorithm,
    pub max_iters: usize,
    /// Extrinsic scaling applied by S-MLM only.
    pub extrinsic_scale: f64,
    /// Max-star kernel used by LM.
    pub kernel: MaxStar,
}

impl DecoderConfig {
    pub fn log_map(max_iters: usize) -> Self {
        Self {
            algorithm: Algorithm::LogMap,
            max_iters,
            extrinsic_scale: 0.7,
            kernel: MaxStar::Exact,
        }
    }

    pub fn scaled_max_log_map(max_iters: usize) -> Self {
        Self {
            algorithm: Algorithm::ScaledMaxLogMap,
            max_iters,
            extrinsic_scale: 0.7,
            kernel: MaxStar::Max,
        }
    }

    fn kernel(&self) -> MaxStar {
        match self.algorithm {
            Algorithm::LogMap => self.kernel,
            Algorithm::ScaledMaxLogMap => MaxStar::Max,
        }
    }

    fn scale(&self) -> f64 {
        match self.algorithm {
            Algorithm::LogMap => 1.0,
            Algorithm::ScaledMaxLogMap => self.extrinsic_scale,
        }
    }
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self::log_map(8)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeOutcome {
    pub info_bits: Vec<Bit>,
    pub posteriors: Vec<f64>,
    pub iterations: usize,
    /// A priori input of the first decoder for a further iteration.
    pub extrinsic: Vec<f64>,
}

/// Result of the initial S-MLM iteration used for decision feedback.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialIteration {
    /// Decision for every transmitted position.
    pub decisions: Vec<Bit>,
    /// State for continuing decoding, see [`TurboCode::decode_from`].
    pub extrinsic: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct TurboCode {
    k: usize,
    trellis: Trellis,
    interleaver: Interleaver,
    puncture: Vec<bool>,
    surviving: Vec<usize>,
}

impl TurboCode {
    /// Builds a code with a seeded pseudorandom interleaver. An empty
    /// `puncture` mask disables puncturing.
    pub fn new(k: usize, interleaver_seed: u64, puncture: &[bool]) -> Result<Self> {
        Self::with_interleaver(Interleaver::random(k, interleaver_seed), puncture)
    }

    pub fn with_interleaver(interleaver: Interleaver, puncture: &[bool]) -> Result<Self> {
        let k = interleaver.len();
        if k == 0 {
            return Err(Error::InvalidParameter(
                "information length must be positive".into(),
            ));
        }
        if !puncture.is_empty() && !puncture.iter().any(|&keep| keep) {
            return Err(Error::InvalidParameter(
                "puncture mask removes every parity bit".into(),
            ));
        }
        let keep = |j: usize| puncture.is_empty() || puncture[j % puncture.len()];
        let mut surviving = Vec::with_capacity(3 * k + TAIL_BITS);
        for i in 0..k {
            surviving.push(3 * i);
            if keep(2 * i) {
                surviving.push(3 * i + 1);
            }
            if keep(2 * i + 1) {
                surviving.push(3 * i + 2);
            }
        }
        surviving.extend(3 * k..3 * k + TAIL_BITS);
        Ok(Self {
            k,
            trellis: Trellis::rsc_13_15(),
            interleaver,
            puncture: puncture.to_vec(),
            surviving,
        })
    }

    /// Number of information bits.
    pub fn info_len(&self) -> usize {
        self.k
    }

    /// Number of transmitted (surviving) coded bits.
    pub fn coded_len(&self) -> usize {
        self.surviving.len()
    }

    pub fn full_len(&self) -> usize {
        3 * self.k + TAIL_BITS
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.coded_len() as f64
    }

    pub fn interleaver(&self) -> &Interleaver {
        &self.interleaver
    }

    pub fn puncture_mask(&self) -> &[bool] {
        &self.puncture
    }

    /// Positions in the unpunctured layout that are transmitted.
    pub fn surviving_positions(&self) -> &[usize] {
        &self.surviving
    }

    fn check_info(&self, len: usize) -> Result<()> {
        if len != self.k {
            return Err(Error::LengthMismatch {
                expected: self.k,
                actual: len,
            });
        }
        Ok(())
    }

    /// Unpunctured codeword, `3K + 12` bits.
    pub fn encode_full(&self, info: &[Bit]) -> Result<Vec<Bit>> {
        self.check_info(info.len())?;
        let (p1, tail1) = self.trellis.encode(info);
        let (p2, tail2) = self.trellis.encode(&self.interleaver.interleave(info));
        let mut out = Vec::with_capacity(self.full_len());
        for i in 0..self.k {
            out.extend([info[i], p1[i], p2[i]]);
        }
        out.extend(tail1);
        out.extend(tail2);
        Ok(out)
    }

    /// Transmitted codeword after puncturing.
    pub fn encode(&self, info: &[Bit]) -> Result<Vec<Bit>> {
        let full = self.encode_full(info)?;
        Ok(self.surviving.iter().map(|&p| full[p]).collect())
    }

    /// Expands received LLRs to the unpunctured layout; punctured positions get 0.
    pub fn depuncture(&self, llrs: &[f64]) -> Result<Vec<f64>> {
        if llrs.len() != self.coded_len() {
            return Err(Error::LengthMismatch {
                expected: self.coded_len(),
                actual: llrs.len(),
            });
        }
        let mut full = vec![0.0; self.full_len()];
        for (&p, &l) in self.surviving.iter().zip(llrs) {
            full[p] = l;
        }
        Ok(full)
    }

    /// Iterative decoding of the transmitted-length channel LLRs.
    pub fn decode(&self, llrs: &[f64], config: &DecoderConfig) -> Result<DecodeOutcome> {
        self.decode_from(llrs, config, None)
    }

    /// Runs `config.max_iters` iterations starting from `apriori` as the first
    /// decoder's a priori input (zero when `None`).
    pub fn decode_from(
        &self,
        llrs: &[f64],
        config: &DecoderConfig,
        apriori: Option<&[f64]>,
    ) -> Result<DecodeOutcome> {
        if config.max_iters == 0 {
            return Err(Error::InvalidParameter(
                "max_iters must be at least 1".into(),
            ));
        }
        let k = self.k;
        let kernel = config.kernel();
        let scale = config.scale();
        let [sys1, par1, sys2, par2] = self.constituent_inputs(llrs)?;

        let mut apriori1 = match apriori {
            Some(a) if a.len() != k => {
                return Err(Error::LengthMismatch {
                    expected: k,
                    actual: a.len(),
                })
            }
            Some(a) => a.to_vec(),
            None => vec![0.0; k],
        };
        let mut post1 = vec![0.0; k];
        let mut post2 = vec![0.0; k];
        for _ in 0..config.max_iters {
            bcjr::posteriors(&self.trellis, kernel, &sys1, &par1, &apriori1, &mut post1);
            let ext1: Vec<f64> = (0..k)
                .map(|i| (post1[i] - sys1[i] - apriori1[i]) * scale)
                .collect();
            let apriori2 = self.interleaver.interleave(&ext1);
            bcjr::posteriors(&self.trellis, kernel, &sys2, &par2, &apriori2, &mut post2);
            let ext2: Vec<f64> = (0..k)
                .map(|i| (post2[i] - sys2[i] - apriori2[i]) * scale)
                .collect();
            apriori1 = self.interleaver.deinterleave(&ext2);
        }
        let posteriors = self.interleaver.deinterleave(&post2);
        let info_bits = posteriors.iter().map(|&l| Bit::from(l > 0.0)).collect();
        Ok(DecodeOutcome {
            info_bits,
            posteriors,
            iterations: config.max_iters,
            extrinsic: apriori1,
        })
    }

    /// Systematic and parity inputs of both constituent decoders, tails appended.
    fn constituent_inputs(&self, llrs: &[f64]) -> Result<[Vec<f64>; 4]> {
        let full = self.depuncture(llrs)?;
        let k = self.k;
        let tail = 3 * k;
        let mut sys1 = Vec::with_capacity(k + MEMORY);
        let mut par1 = Vec::with_capacity(k + MEMORY);
        let mut par2 = Vec::with_capacity(k + MEMORY);
        for i in 0..k {
            sys1.push(full[3 * i]);
            par1.push(full[3 * i + 1]);
            par2.push(full[3 * i + 2]);
        }
        let mut sys2 = self.interleaver.interleave(&sys1);
        for t in 0..MEMORY {
            sys1.push(full[tail + 2 * t]);
            par1.push(full[tail + 2 * t + 1]);
            sys2.push(full[tail + 2 * MEMORY + 2 * t]);
            par2.push(full[tail + 2 * MEMORY + 2 * t + 1]);
        }
        Ok([sys1, par1, sys2, par2])
    }

    /// One S-MLM iteration with coded-bit decisions formed per `feedback`.
    ///
    /// Posterior decisions come from the APPs of the constituent decoder that
    /// sees each bit: information bits from the second decoder's posteriors,
    /// first-encoder parity and tail from the first half-iteration,
    /// second-encoder parity and tail from the second.
    pub fn initial_iteration(
        &self,
        llrs: &[f64],
        extrinsic_scale: f64,
        feedback: DecisionFeedback,
    ) -> Result<InitialIteration> {
        if feedback == DecisionFeedback::Reencode {
            let config = DecoderConfig {
                extrinsic_scale,
                ..DecoderConfig::scaled_max_log_map(1)
            };
            let outcome = self.decode(llrs, &config)?;
            return Ok(InitialIteration {
                decisions: self.encode(&outcome.info_bits)?,
                extrinsic: outcome.extrinsic,
            });
        }
        let k = self.k;
        let [sys1, par1, sys2, par2] = self.constituent_inputs(llrs)?;
        let apriori1 = vec![0.0; k];
        let mut post1 = vec![0.0; k];
        let mut post2 = vec![0.0; k];
        let app1 = bcjr::posteriors_with_coded(
            &self.trellis,
            MaxStar::Max,
            &sys1,
            &par1,
            &apriori1,
            &mut post1,
        );
        let ext1: Vec<f64> = (0..k)
            .map(|i| (post1[i] - sys1[i]) * extrinsic_scale)
            .collect();
        let apriori2 = self.interleaver.interleave(&ext1);
        let app2 = bcjr::posteriors_with_coded(
            &self.trellis,
            MaxStar::Max,
            &sys2,
            &par2,
            &apriori2,
            &mut post2,
        );
        let ext2: Vec<f64> = (0..k)
            .map(|i| (post2[i] - sys2[i] - apriori2[i]) * extrinsic_scale)
            .collect();
        let info = self.interleaver.deinterleave(&post2);

        let hard = |l: f64| Bit::from(l > 0.0);
        let mut full = Vec::with_capacity(self.full_len());
        for i in 0..k {
            full.extend([hard(info[i]), hard(app1.parity[i]), hard(app2.parity[i])]);
        }
        for app in [&app1, &app2] {
            for t in k..k + MEMORY {
                full.extend([hard(app.systematic[t]), hard(app.parity[t])]);
            }
        }
        Ok(InitialIteration {
            decisions: self.surviving.iter().map(|&p| full[p]).collect(),
            extrinsic: self.interleaver.deinterleave(&ext2),
        })
    }

    /// Coded-bit decisions after one S-MLM iteration: information decisions are
    /// re-encoded to produce a decision for every transmitted position.
    pub fn single_iteration_decisions(
        &self,
        llrs: &[f64],
        extrinsic_scale: f64,
    ) -> Result<Vec<Bit>> {
        Ok(self
            .initial_iteration(llrs, extrinsic_scale, DecisionFeedback::Reencode)?
            .decisions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> Vec<Bit> {
        (0..n).map(|_| rng.random_range(0..2u8)).collect()
    }

    fn noiseless_llrs(coded: &[Bit]) -> Vec<f64> {
        coded
            .iter()
            .map(|&b| if b == 1 { 30.0 } else { -30.0 })
            .collect()
    }

    #[test]
    fn lengths_and_rates() {
        let code = TurboCode::new(40, 1, &[]).unwrap();
        assert_eq!(code.coded_len(), 132);
        let code = TurboCode::new(1024, 1, &PUNCTURE_RATE_0_4).unwrap();
        assert_eq!(code.coded_len(), 1024 + 1536 + 12);
        assert!((code.rate() - 0.398).abs() < 0.001);
        assert!(TurboCode::new(40, 1, &[false, false]).is_err());
    }

    #[test]
    fn all_zero_codeword() {
        let code = TurboCode::new(40, 1, &[]).unwrap();
        assert!(code.encode(&[0; 40]).unwrap().iter().all(|&b| b == 0));
    }

    #[test]
    fn rejects_wrong_lengths() {
        let code = TurboCode::new(40, 1, &[]).unwrap();
        assert!(code.encode(&[0; 39]).is_err());
        assert!(code.decode(&[0.0; 131], &DecoderConfig::default()).is_err());
    }

    #[test]
    fn encoder_is_linear() {
        let code = TurboCode::new(64, 9, &PUNCTURE_RATE_0_4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let a = random_bits(&mut rng, 64);
            let b = random_bits(&mut rng, 64);
            let sum: Vec<Bit> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
            let ca = code.encode(&a).unwrap();
            let cb = code.encode(&b).unwrap();
            let cs = code.encode(&sum).unwrap();
            let xor: Vec<Bit> = ca.iter().zip(&cb).map(|(x, y)| x ^ y).collect();
            assert_eq!(cs, xor);
        }
    }

    #[test]
    fn noiseless_round_trip_one_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for mask in [&[][..], &PUNCTURE_RATE_0_4[..]] {
            let code = TurboCode::new(256, 3, mask).unwrap();
            let u = random_bits(&mut rng, 256);
            let llrs = noiseless_llrs(&code.encode(&u).unwrap());
            for cfg in [
                DecoderConfig::log_map(1),
                DecoderConfig::scaled_max_log_map(1),
            ] {
                assert_eq!(code.decode(&llrs, &cfg).unwrap().info_bits, u);
            }
            assert_eq!(
                code.single_iteration_decisions(&llrs, 0.7).unwrap(),
                code.encode(&u).unwrap()
            );
        }
    }

    #[test]
    fn single_flip_is_corrected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let code = TurboCode::new(128, 3, &[]).unwrap();
        let u = random_bits(&mut rng, 128);
        let coded = code.encode(&u).unwrap();
        let mut llrs: Vec<f64> = coded
            .iter()
            .map(|&b| if b == 1 { 8.0 } else { -8.0 })
            .collect();
        llrs[100] = -llrs[100];
        assert_eq!(code.single_iteration_decisions(&llrs, 0.7).unwrap(), coded);
    }

    #[test]
    fn smlm_is_positively_homogeneous() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let code = TurboCode::new(200, 5, &PUNCTURE_RATE_0_4).unwrap();
        let u = random_bits(&mut rng, 200);
        let llrs: Vec<f64> = code
            .encode(&u)
            .unwrap()
            .iter()
            .map(|&b| crate::constellation::bipolar(b) * 1.0 + rng.random::<f64>() * 2.0 - 1.0)
            .collect();
        let cfg = DecoderConfig::scaled_max_log_map(6);
        let base = code.decode(&llrs, &cfg).unwrap();
        for kappa in [0.5, 1.7, 3.0] {
            let scaled: Vec<f64> = llrs.iter().map(|l| l * kappa).collect();
            let out = code.decode(&scaled, &cfg).unwrap();
            assert_eq!(out.info_bits, base.info_bits);
            for (a, b) in out.posteriors.iter().zip(&base.posteriors) {
                assert!((a / kappa - b).abs() < 1e-9 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn posterior_decisions_on_noiseless_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let code = TurboCode::new(200, 7, &PUNCTURE_RATE_0_4).unwrap();
        let u = random_bits(&mut rng, 200);
        let coded = code.encode(&u).unwrap();
        let out = code
            .initial_iteration(&noiseless_llrs(&coded), 0.7, DecisionFeedback::Posterior)
            .unwrap();
        assert_eq!(out.decisions, coded);
    }

    #[test]
    fn continuing_matches_uninterrupted_decoding() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let code = TurboCode::new(200, 5, &PUNCTURE_RATE_0_4).unwrap();
        let u = random_bits(&mut rng, 200);
        let llrs: Vec<f64> = code
            .encode(&u)
            .unwrap()
            .iter()
            .map(|&b| crate::constellation::bipolar(b) * 0.8 + rng.random::<f64>() * 3.0 - 1.5)
            .collect();
        let full = code
            .decode(&llrs, &DecoderConfig::scaled_max_log_map(5))
            .unwrap();
        for feedback in [DecisionFeedback::Reencode, DecisionFeedback::Posterior] {
            let initial = code.initial_iteration(&llrs, 0.7, feedback).unwrap();
            let rest = code
                .decode_from(
                    &llrs,
                    &DecoderConfig::scaled_max_log_map(4),
                    Some(&initial.extrinsic),
                )
                .unwrap();
            assert_eq!(rest.info_bits, full.info_bits);
            for (a, b) in rest.posteriors.iter().zip(&full.posteriors) {
                assert!((a - b).abs() < 1e-9);
            }
        }
        assert!(code
            .decode_from(&llrs, &DecoderConfig::default(), Some(&[0.0; 3]))
            .is_err());
    }
}
