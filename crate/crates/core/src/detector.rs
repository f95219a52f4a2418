//! Soft demappers for Gray-labeled square QAM.
//!
//! Both demappers first apply matched-filter normalization `z = conj(h) y / |h|^2`,
//! which turns `|y - h x|^2 / s2` into `|z - x|^2 / (s2 / |h|^2)` exactly. With the
//! I/Q product labeling each bit then depends on a single axis of `z`, so one
//! PAM kernel serves both axes.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constellation::{Bit, BitChannelId, Constellation};
use crate::{Error, Result};

/// Stored LLRs are clipped to `[-LLR_CLIP, LLR_CLIP]`.
pub const LLR_CLIP: f64 = 30.0;

#[inline]
pub fn clip_llr(l: f64) -> f64 {
    l.clamp(-LLR_CLIP, LLR_CLIP)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Demapper {
    /// Exact log-sum-exp over the constellation subsets.
    ExactMap,
    /// Max-log approximation (nearest point per hypothesis).
    MaxLog,
}

/// One detector output LLR together with its bit-channel and reference bits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LlrRecord {
    pub llr: f64,
    pub bit_channel: BitChannelId,
    /// Transmitted bit, known to the simulator.
    pub true_bit: Option<Bit>,
    /// Bit decided from decoder feedback.
    pub decided_bit: Option<Bit>,
    pub frame: u32,
    pub position: u32,
}

impl LlrRecord {
    pub fn new(llr: f64, bit_channel: BitChannelId, true_bit: Option<Bit>) -> Self {
        Self {
            llr,
            bit_channel,
            true_bit,
            decided_bit: None,
            frame: 0,
            position: 0,
        }
    }
}

fn lse(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

fn validate(noise_variance: f64) -> Result<()> {
    if !(noise_variance > 0.0) {
        return Err(Error::NonPositiveNoiseVariance(noise_variance));
    }
    Ok(())
}

/// Writes the `m` clipped LLRs of one received sample into `out`.
pub fn demap_into(
    demapper: Demapper,
    y: Complex64,
    h: Complex64,
    noise_variance: f64,
    c: &Constellation,
    out: &mut [f64],
) {
    let gain = h.norm_sqr();
    if gain == 0.0 {
        out.iter_mut().for_each(|l| *l = 0.0);
        return;
    }
    let z = h.conj() * y / gain;
    let inv_var = gain / noise_variance;
    let amps = c.pam_amplitudes();
    let levels = c.bits_per_symbol() / 2;
    let mut metric = [0.0f64; 8];
    for (axis, coord) in [z.re, z.im].into_iter().enumerate() {
        for (k, a) in amps.iter().enumerate() {
            let d = coord - a;
            metric[k] = d * d * inv_var;
        }
        for level in 0..levels {
            let llr = match demapper {
                Demapper::ExactMap => {
                    let (mut one, mut zero) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
                    for (k, &m) in metric.iter().enumerate().take(amps.len()) {
                        if c.pam_bit(k, level) == 1 {
                            one = lse(one, -m);
                        } else {
                            zero = lse(zero, -m);
                        }
                    }
                    one - zero
                }
                Demapper::MaxLog => {
                    let (mut one, mut zero) = (f64::INFINITY, f64::INFINITY);
                    for (k, &m) in metric.iter().enumerate().take(amps.len()) {
                        if c.pam_bit(k, level) == 1 {
                            one = one.min(m);
                        } else {
                            zero = zero.min(m);
                        }
                    }
                    zero - one
                }
            };
            out[2 * level + axis] = clip_llr(llr);
        }
    }
}

/// Exact MAP LLRs (uniform priors) for one received sample.
pub fn map_llr(
    y: Complex64,
    h: Complex64,
    noise_variance: f64,
    c: &Constellation,
) -> Result<Vec<f64>> {
    validate(noise_variance)?;
    let mut out = vec![0.0; c.bits_per_symbol()];
    demap_into(Demapper::ExactMap, y, h, noise_variance, c, &mut out);
    Ok(out)
}

/// Max-log LLRs for one received sample.
pub fn maxlog_llr(
    y: Complex64,
    h: Complex64,
    noise_variance: f64,
    c: &Constellation,
) -> Result<Vec<f64>> {
    validate(noise_variance)?;
    let mut out = vec![0.0; c.bits_per_symbol()];
    demap_into(Demapper::MaxLog, y, h, noise_variance, c, &mut out);
    Ok(out)
}

/// Demaps a block of received samples into a flat LLR vector (`m` per symbol).
pub fn demap_block(
    demapper: Demapper,
    received: &[Complex64],
    estimates: &[Complex64],
    noise_variance: f64,
    c: &Constellation,
) -> Result<Vec<f64>> {
    validate(noise_variance)?;
    if received.len() != estimates.len() {
        return Err(Error::LengthMismatch {
            expected: received.len(),
            actual: estimates.len(),
        });
    }
    let m = c.bits_per_symbol();
    let mut out = vec![0.0; received.len() * m];
    for ((y, h), chunk) in received.iter().zip(estimates).zip(out.chunks_exact_mut(m)) {
        demap_into(demapper, *y, *h, noise_variance, c, chunk);
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct DumpRow {
    frame: u32,
    pos: u32,
    bit_channel: u8,
    llr: f64,
    true_bit: Option<u8>,
}

/// Writes records as CSV with header `frame,pos,bit_channel,llr,true_bit`.
///
/// `bit_channel` is the label bit position; an unknown transmitted bit is left empty.
pub fn write_llr_dump<W: Write>(writer: W, records: &[LlrRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(DumpRow {
            frame: r.frame,
            pos: r.position,
            bit_channel: r.bit_channel.index,
            llr: r.llr,
            true_bit: r.true_bit,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads records written by [`write_llr_dump`].
pub fn read_llr_dump<R: Read>(reader: R) -> Result<Vec<LlrRecord>> {
    let mut rd = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rd.deserialize() {
        let row: DumpRow = row?;
        if let Some(b) = row.true_bit {
            if b > 1 {
                return Err(Error::InvalidParameter(format!(
                    "true_bit {b} is not a bit"
                )));
            }
        }
        out.push(LlrRecord {
            llr: row.llr,
            bit_channel: BitChannelId::new(row.bit_channel as usize),
            true_bit: row.true_bit,
            decided_bit: None,
            frame: row.frame,
            position: row.pos,
        });
    }
    Ok(out)
}
