//! Offline GMI machinery: I-curves, critical points, total GMI, BICM capacity
//! estimates, and the LLR scaling schemes (histogram LUT, uniform, sign-split).
//!
//! For one bit channel the I-curve is
//! `I(s) = 1 - mean(log2(1 + exp(-beta(b) * l * s)))` with `beta(1) = +1`,
//! `beta(0) = -1`; its maximizer over `s > 0` is the critical point and its
//! peak value the channel's GMI.

mod histogram;
mod lut;

pub use histogram::{
    build_histograms, consistency_mean, HistRange, HistogramOptions, HistogramPair, ScalingPoint,
};
pub use lut::{build_lut, ScalingLut};

use std::f64::consts::LN_2;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::MismatchModel;
use crate::constellation::{bipolar, Bit};
use crate::dataset::{RecordSet, UncodedScenario};
use crate::detector::{clip_llr, Demapper, LlrRecord};
use crate::online_scaling::{multiplicative_search, SearchParams};
use crate::{Error, Result};

/// Partial sums run over fixed-size chunks and are combined in order, so the
/// result does not depend on the number of worker threads.
const REDUCTION_CHUNK: usize = 16_384;

/// Relative tolerance of the golden-section refinement of critical points.
pub const CRITICAL_POINT_RTOL: f64 = 1e-3;

/// Which reference bit an I-curve is evaluated against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BitSource {
    /// The transmitted bit.
    Genie,
    /// The bit decided from decoder feedback.
    Decided,
}

impl BitSource {
    fn name(self) -> &'static str {
        match self {
            BitSource::Genie => "true",
            BitSource::Decided => "decided",
        }
    }

    #[inline]
    pub fn bit(self, r: &LlrRecord) -> Option<Bit> {
        match self {
            BitSource::Genie => r.true_bit,
            BitSource::Decided => r.decided_bit,
        }
    }
}

/// `ln(1 + exp(x))` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Fails if `records` is empty or any record lacks the selected bit.
pub fn check_bits(records: &[LlrRecord], source: BitSource) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    match records.iter().find(|r| source.bit(r).is_none()) {
        Some(r) => Err(Error::MissingBit {
            frame: r.frame,
            position: r.position,
            source_name: source.name(),
        }),
        None => Ok(()),
    }
}

/// I-curve value without input validation; records lacking the bit count as zeros.
pub(crate) fn icurve_unchecked(records: &[LlrRecord], s: f64, source: BitSource) -> f64 {
    let partials: Vec<f64> = records
        .par_chunks(REDUCTION_CHUNK)
        .map(|chunk| {
            chunk
                .iter()
                .map(|r| softplus(-bipolar(source.bit(r).unwrap_or(0)) * r.llr * s))
                .sum::<f64>()
        })
        .collect();
    let loss: f64 = partials.iter().sum();
    1.0 - loss / (records.len() as f64 * LN_2)
}

/// Evaluates the I-curve of `records` at scaling `s`.
pub fn icurve_eval(records: &[LlrRecord], s: f64, source: BitSource) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "s must be positive, got {s}"
        )));
    }
    check_bits(records, source)?;
    Ok(icurve_unchecked(records, s, source))
}

/// Result of maximizing a scalar function of the scaling factor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Maximum {
    pub s: f64,
    pub value: f64,
    /// False when the search ran into a bound or its step budget.
    pub converged: bool,
}

fn golden_section<F: FnMut(f64) -> f64>(
    f: &mut F,
    mut lo: f64,
    mut hi: f64,
    rtol: f64,
) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > rtol * 0.5 * (lo + hi) {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Maximizes `f` over `[params.lower, params.upper]`: the multiplicative
/// search brackets the peak, golden-section refines it.
pub fn maximize<F: FnMut(f64) -> f64>(mut f: F, params: &SearchParams) -> Result<Maximum> {
    let outcome = multiplicative_search(&mut f, params)?;
    if !outcome.converged {
        return Ok(Maximum {
            s: outcome.factor,
            value: outcome.value,
            converged: false,
        });
    }
    let (lo, hi) = outcome.bracket;
    let (lo, hi) = (lo.max(params.lower), hi.min(params.upper));
    let (s, value) = golden_section(&mut f, lo, hi, CRITICAL_POINT_RTOL);
    Ok(Maximum {
        s,
        value,
        converged: true,
    })
}

/// Critical point `s*` and peak `I(s*)` of the I-curve of `records`.
pub fn critical_point(records: &[LlrRecord], source: BitSource) -> Result<Maximum> {
    check_bits(records, source)?;
    maximize(
        |s| icurve_unchecked(records, s, source),
        &SearchParams::default(),
    )
}

/// Log-spaced grid of `n` scaling values over `[lo, hi]`.
pub fn s_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Default grid used for exported curves.
pub fn default_grid() -> Vec<f64> {
    s_grid(0.1, 10.0, 201)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveOwner {
    /// One label bit position.
    Position(u8),
    /// One I/Q-paired class of positions.
    Class(u8),
    /// Sum over all bit positions.
    Total,
}

/// The refined maximum, or a grid sample if one is higher.
fn best_of(max: Maximum, samples: &[(f64, f64)]) -> (f64, f64) {
    samples.iter().fold(
        (max.s, max.value),
        |best, &(s, v)| if v > best.1 { (s, v) } else { best },
    )
}

/// A sampled I-curve with its critical point.
#[derive(Clone, Debug, Serialize)]
pub struct ICurve {
    pub owner: CurveOwner,
    pub samples: Vec<(f64, f64)>,
    pub critical_point: f64,
    pub peak: f64,
}

impl ICurve {
    /// Samples `I(s)` on `grid` and locates the critical point.
    pub fn from_records(
        records: &[LlrRecord],
        source: BitSource,
        owner: CurveOwner,
        grid: &[f64],
    ) -> Result<Self> {
        check_bits(records, source)?;
        let samples: Vec<(f64, f64)> = grid
            .iter()
            .map(|&s| (s, icurve_unchecked(records, s, source)))
            .collect();
        let (critical_point, peak) = best_of(critical_point(records, source)?, &samples);
        Ok(Self {
            owner,
            samples,
            critical_point,
            peak,
        })
    }

    /// CSV with header `s,I`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["s", "I"])?;
        for (s, i) in &self.samples {
            w.write_record([format!("{s:.6}"), format!("{i:.9}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-position curves plus their sum.
#[derive(Clone, Debug, Serialize)]
pub struct TotalGmi {
    /// `s -> sum_i I_i(s)`, bits per symbol.
    pub curve: ICurve,
    pub channels: Vec<ICurve>,
    /// `max_s sum_i I_i(s)`.
    pub gmi: f64,
    /// `sum_i max_s I_i(s)`.
    pub sum_channel_gmi: f64,
}

/// Builds the total I-curve over bit positions `0..m`.
pub fn total_gmi(set: &RecordSet, m: usize, source: BitSource, grid: &[f64]) -> Result<TotalGmi> {
    let mut slices = Vec::with_capacity(m);
    for i in 0..m {
        let records = set.channel(i as u8);
        if records.is_empty() {
            return Err(Error::UncoveredChannel(i));
        }
        check_bits(records, source)?;
        slices.push(records);
    }
    let channels = slices
        .iter()
        .enumerate()
        .map(|(i, r)| ICurve::from_records(r, source, CurveOwner::Position(i as u8), grid))
        .collect::<Result<Vec<_>>>()?;
    let total = |s: f64| -> f64 { slices.iter().map(|r| icurve_unchecked(r, s, source)).sum() };
    let samples: Vec<(f64, f64)> = grid.iter().map(|&s| (s, total(s))).collect();
    let (critical_point, peak) = best_of(maximize(total, &SearchParams::default())?, &samples);
    let sum_channel_gmi = channels.iter().map(|c| c.peak).sum();
    Ok(TotalGmi {
        curve: ICurve {
            owner: CurveOwner::Total,
            samples,
            critical_point,
            peak,
        },
        channels,
        gmi: peak,
        sum_channel_gmi,
    })
}

/// Per-class LLR correction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "classes")]
pub enum ScalingScheme {
    Identity,
    /// One factor per class.
    Uniform(Vec<f64>),
    /// `(s_plus, s_minus)` per class, selected by the sign of the LLR.
    TwoLevel(Vec<(f64, f64)>),
    /// Piecewise-linear scaling function per class.
    Lut(Vec<ScalingLut>),
}

impl ScalingScheme {
    fn covers(&self, class: usize) -> bool {
        match self {
            ScalingScheme::Identity => true,
            ScalingScheme::Uniform(v) => class < v.len(),
            ScalingScheme::TwoLevel(v) => class < v.len(),
            ScalingScheme::Lut(v) => class < v.len(),
        }
    }

    /// Scaled, clipped LLR for `llr` observed on `class`.
    pub fn scale(&self, class: usize, llr: f64) -> Result<f64> {
        let factor = match self {
            ScalingScheme::Identity => return Ok(llr),
            ScalingScheme::Uniform(v) => v.get(class).copied(),
            ScalingScheme::TwoLevel(v) => v
                .get(class)
                .map(|&(plus, minus)| if llr >= 0.0 { plus } else { minus }),
            ScalingScheme::Lut(v) => v.get(class).map(|lut| lut.factor(llr)),
        };
        let factor = factor.ok_or(Error::UncoveredChannel(class))?;
        Ok(clip_llr(llr * factor))
    }
}

/// Scales every record's LLR in place.
pub fn apply_scaling_in_place(records: &mut [LlrRecord], scheme: &ScalingScheme) -> Result<()> {
    if let Some(r) = records
        .iter()
        .find(|r| !scheme.covers(r.bit_channel.class as usize))
    {
        return Err(Error::UncoveredChannel(r.bit_channel.class as usize));
    }
    for r in records.iter_mut() {
        r.llr = scheme.scale(r.bit_channel.class as usize, r.llr)?;
    }
    Ok(())
}

/// Returns scaled copies of `records`.
pub fn apply_scaling(records: &[LlrRecord], scheme: &ScalingScheme) -> Result<Vec<LlrRecord>> {
    let mut out = records.to_vec();
    apply_scaling_in_place(&mut out, scheme)?;
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CapacityEstimate {
    pub bits_per_symbol: f64,
    /// Monte Carlo standard error of the mean.
    pub std_error: f64,
}

/// BICM capacity by Monte Carlo: exact-MAP LLRs with perfect CSI are
/// consistent, so the total I-curve at `s = 1` equals `sum_j I(B_j; Y)`.
/// The scenario's demapper and mismatch are overridden.
pub fn capacity_estimate(scenario: &UncodedScenario) -> Result<CapacityEstimate> {
    let sc = UncodedScenario {
        demapper: Demapper::ExactMap,
        mismatch: MismatchModel::PERFECT,
        ..scenario.clone()
    };
    let m = crate::constellation::Constellation::qam(sc.order)?.bits_per_symbol();
    let partials = sc.for_each_batch(|_, bits, llrs| {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for (b, l) in bits.chunks_exact(m).zip(llrs.chunks_exact(m)) {
            let v: f64 = b
                .iter()
                .zip(l)
                .map(|(&bit, &llr)| 1.0 - softplus(-bipolar(bit) * llr) / LN_2)
                .sum();
            sum += v;
            sum_sq += v * v;
        }
        (sum, sum_sq, bits.len() / m)
    })?;
    let (sum, sum_sq, n) = partials.iter().fold((0.0, 0.0, 0usize), |acc, p| {
        (acc.0 + p.0, acc.1 + p.1, acc.2 + p.2)
    });
    if n == 0 {
        return Err(Error::EmptyRecords);
    }
    let n = n as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
    Ok(CapacityEstimate {
        bits_per_symbol: mean,
        std_error: (var / n).sqrt(),
    })
}

#[cfg(test)]
mod tests;
