use serde::{Deserialize, Serialize};

use crate::detector::{LlrRecord, LLR_CLIP};
use crate::{Error, Result};

/// Support of the LLR histograms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum HistRange {
    Fixed {
        lo: f64,
        hi: f64,
    },
    /// Symmetric `[-R, R]` with `R` the `q`-quantile of `|l|`.
    Quantile {
        q: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HistogramOptions {
    pub bins: usize,
    pub range: HistRange,
    /// Additive (Laplace) smoothing applied to every bin count.
    pub smoothing: f64,
    /// Bins with fewer records of either bit value are not used for scaling estimates.
    pub min_count: u64,
}

impl Default for HistogramOptions {
    fn default() -> Self {
        Self {
            bins: 201,
            range: HistRange::Quantile { q: 0.999 },
            smoothing: 0.5,
            min_count: 20,
        }
    }
}

impl HistogramOptions {
    pub fn fixed() -> Self {
        Self {
            range: HistRange::Fixed {
                lo: -LLR_CLIP,
                hi: LLR_CLIP,
            },
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::InvalidParameter(
                "histogram needs at least 2 bins".into(),
            ));
        }
        if !(self.smoothing >= 0.0) {
            return Err(Error::InvalidParameter(
                "smoothing must be non-negative".into(),
            ));
        }
        match self.range {
            HistRange::Fixed { lo, hi } if !(lo < hi) => Err(Error::InvalidParameter(format!(
                "empty histogram range [{lo}, {hi}]"
            ))),
            HistRange::Quantile { q } if !(q > 0.0 && q <= 1.0) => Err(Error::InvalidParameter(
                format!("quantile {q} outside (0, 1]"),
            )),
            _ => Ok(()),
        }
    }
}

/// Conditional LLR histograms `p(l | b = 1)` and `p(l | b = 0)` on a shared grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramPair {
    pub edges: Vec<f64>,
    pub ones: Vec<u64>,
    pub zeros: Vec<u64>,
    /// Sum of the LLRs that fell in each bin.
    pub llr_sum: Vec<f64>,
    pub smoothing: f64,
    pub min_count: u64,
}

/// Estimated ideal scaling `ln(p1/p0) / l` at one bin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalingPoint {
    /// Mean LLR of the bin's records.
    pub llr: f64,
    pub factor: f64,
    /// Number of records in the bin.
    pub weight: f64,
    /// Inverse of the approximate variance of `factor`,
    /// `l^2 / (1/n1 + 1/n0)`; zero for interpolated bins.
    pub precision: f64,
    pub valid: bool,
}

fn quantile_abs(records: &[LlrRecord], q: f64) -> f64 {
    let mut mags: Vec<f64> = records.iter().map(|r| r.llr.abs()).collect();
    let k = ((q * mags.len() as f64).ceil() as usize).clamp(1, mags.len()) - 1;
    let (_, v, _) = mags.select_nth_unstable_by(k, f64::total_cmp);
    *v
}

/// Histograms the genie-labeled `records` of one bit channel or class.
pub fn build_histograms(
    records: &[LlrRecord],
    options: &HistogramOptions,
) -> Result<HistogramPair> {
    options.validate()?;
    super::check_bits(records, super::BitSource::Genie)?;
    let (lo, hi) = match options.range {
        HistRange::Fixed { lo, hi } => (lo, hi),
        HistRange::Quantile { q } => {
            let r = quantile_abs(records, q).max(1e-6);
            (-r, r)
        }
    };
    let n = options.bins;
    let width = (hi - lo) / n as f64;
    let edges = (0..=n).map(|k| lo + width * k as f64).collect();
    let mut ones = vec![0u64; n];
    let mut zeros = vec![0u64; n];
    let mut llr_sum = vec![0.0; n];
    for r in records {
        let k = (((r.llr - lo) / width).floor().max(0.0) as usize).min(n - 1);
        if r.true_bit == Some(1) {
            ones[k] += 1;
        } else {
            zeros[k] += 1;
        }
        llr_sum[k] += r.llr;
    }
    if ones.iter().all(|&c| c == 0) {
        return Err(Error::EmptyClass(1));
    }
    if zeros.iter().all(|&c| c == 0) {
        return Err(Error::EmptyClass(0));
    }
    Ok(HistogramPair {
        edges,
        ones,
        zeros,
        llr_sum,
        smoothing: options.smoothing,
        min_count: options.min_count,
    })
}

impl HistogramPair {
    pub fn bins(&self) -> usize {
        self.ones.len()
    }

    fn total(counts: &[u64]) -> f64 {
        counts.iter().sum::<u64>() as f64
    }

    /// Smoothed `p(l in bin k | b = 1)`.
    pub fn p1(&self, k: usize) -> f64 {
        let a = self.smoothing;
        (self.ones[k] as f64 + a) / (Self::total(&self.ones) + a * self.bins() as f64)
    }

    /// Smoothed `p(l in bin k | b = 0)`.
    pub fn p0(&self, k: usize) -> f64 {
        let a = self.smoothing;
        (self.zeros[k] as f64 + a) / (Self::total(&self.zeros) + a * self.bins() as f64)
    }

    fn count(&self, k: usize) -> u64 {
        self.ones[k] + self.zeros[k]
    }

    fn abscissa(&self, k: usize) -> f64 {
        match self.count(k) {
            0 => 0.5 * (self.edges[k] + self.edges[k + 1]),
            c => self.llr_sum[k] / c as f64,
        }
    }

    fn straddles_zero(&self, k: usize) -> bool {
        self.edges[k] < 0.0 && self.edges[k + 1] > 0.0
    }

    /// Per-bin ideal scaling. The bin containing `l = 0` is interpolated from
    /// its nearest valid neighbors, where the ratio is ill-conditioned.
    pub fn ideal_scaling(&self) -> Vec<ScalingPoint> {
        let mut points: Vec<ScalingPoint> = (0..self.bins())
            .map(|k| {
                let llr = self.abscissa(k);
                let weight = self.count(k) as f64;
                let valid = self.ones[k].min(self.zeros[k]) >= self.min_count
                    && !self.straddles_zero(k)
                    && llr != 0.0;
                let (factor, precision) = if valid {
                    let a = self.smoothing;
                    let var_ratio =
                        1.0 / (self.ones[k] as f64 + a) + 1.0 / (self.zeros[k] as f64 + a);
                    ((self.p1(k) / self.p0(k)).ln() / llr, llr * llr / var_ratio)
                } else {
                    (0.0, 0.0)
                };
                ScalingPoint {
                    llr,
                    factor,
                    weight,
                    precision,
                    valid,
                }
            })
            .collect();
        for k in 0..self.bins() {
            if !self.straddles_zero(k) || self.count(k) < self.min_count {
                continue;
            }
            let left = points[..k].iter().rev().find(|p| p.valid).copied();
            let right = points[k + 1..].iter().find(|p| p.valid).copied();
            let factor = match (left, right) {
                (Some(a), Some(b)) if b.llr > a.llr => {
                    let t = ((points[k].llr - a.llr) / (b.llr - a.llr)).clamp(0.0, 1.0);
                    a.factor + t * (b.factor - a.factor)
                }
                (Some(a), _) => a.factor,
                (None, Some(b)) => b.factor,
                (None, None) => continue,
            };
            points[k].factor = factor;
            points[k].valid = true;
        }
        points
    }
}

/// `E_L{s(L)}`: occupancy-weighted mean of the per-bin ideal scaling.
pub fn consistency_mean(records: &[LlrRecord], options: &HistogramOptions) -> Result<f64> {
    let points = build_histograms(records, options)?.ideal_scaling();
    let (num, den) = points
        .iter()
        .filter(|p| p.valid)
        .fold((0.0, 0.0), |(n, d), p| {
            (n + p.weight * p.factor, d + p.weight)
        });
    if den == 0.0 {
        return Err(Error::NoPopulatedBins);
    }
    Ok(num / den)
}
