//! Decision-aided online scaling: the approximate I-curve evaluated against
//! decoder decisions, the multiplicative scaling search, sign-split
//! (2-level) factors and the normalized mean error of decided factors.

use serde::{Deserialize, Serialize};

use crate::dataset::RecordSet;
use crate::detector::LlrRecord;
use crate::gmi::{check_bits, icurve_eval, icurve_unchecked, BitSource, ScalingScheme};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchParams {
    pub initial: f64,
    pub alpha: f64,
    pub max_steps: usize,
    pub lower: f64,
    pub upper: f64,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            initial: 1.0,
            alpha: 1.05,
            max_steps: 200,
            lower: 0.1,
            upper: 10.0,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must exceed 1, got {}",
                self.alpha
            )));
        }
        if !(self.lower > 0.0 && self.lower < self.upper) {
            return Err(Error::InvalidParameter(format!(
                "invalid search bounds [{}, {}]",
                self.lower, self.upper
            )));
        }
        if !(self.initial >= self.lower && self.initial <= self.upper) {
            return Err(Error::InvalidParameter(format!(
                "initial factor {} outside bounds",
                self.initial
            )));
        }
        Ok(())
    }
}

/// Result of one multiplicative search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub factor: f64,
    /// Objective at `factor`.
    pub value: f64,
    /// Interval known to contain the peak of a unimodal objective.
    pub bracket: (f64, f64),
    /// Number of multiplicative moves made.
    pub steps: usize,
    pub converged: bool,
}

/// Multiplicative peak search: start at `initial`, compare against one
/// `alpha` step up (reversing direction if that is worse), keep stepping
/// while the objective does not drop, and return the midpoint of the last
/// two points. Ties on the first comparison advance; later ties stop.
pub fn multiplicative_search<F: FnMut(f64) -> f64>(
    mut f: F,
    params: &SearchParams,
) -> Result<SearchOutcome> {
    params.validate()?;
    let (lo, hi) = (params.lower, params.upper);
    let boundary = |f: &mut F, s: f64, steps: usize| {
        let s = s.clamp(lo, hi);
        SearchOutcome {
            factor: s,
            value: f(s),
            bracket: (s, s),
            steps,
            converged: false,
        }
    };

    let mut alpha = params.alpha;
    let mut s = params.initial;
    let mut current = f(s);
    let mut steps = 0;

    if s * alpha > hi {
        alpha = 1.0 / alpha;
    } else {
        let next = f(s * alpha);
        if current > next {
            alpha = 1.0 / alpha;
        } else {
            current = next;
            s *= alpha;
            steps += 1;
        }
    }

    loop {
        let candidate = s * alpha;
        if candidate > hi * (1.0 + 1e-12) {
            return Ok(boundary(&mut f, hi, steps));
        }
        if candidate < lo * (1.0 - 1e-12) {
            return Ok(boundary(&mut f, lo, steps));
        }
        if steps >= params.max_steps {
            return Ok(boundary(&mut f, s, steps));
        }
        let next = f(candidate);
        if current >= next {
            let factor = 0.5 * (s + candidate);
            let (a, b) = (s / alpha, candidate);
            return Ok(SearchOutcome {
                factor,
                value: f(factor),
                bracket: (a.min(b).max(lo), a.max(b).min(hi)),
                steps,
                converged: true,
            });
        }
        current = next;
        s = candidate;
        steps += 1;
    }
}

/// The I-curve evaluated against decoder decisions.
pub fn approx_icurve(records: &[LlrRecord], s: f64) -> Result<f64> {
    icurve_eval(records, s, BitSource::Decided)
}

/// Multiplicative search over the I-curve of `records`.
pub fn search_scale(
    records: &[LlrRecord],
    params: &SearchParams,
    source: BitSource,
) -> Result<SearchOutcome> {
    check_bits(records, source)?;
    multiplicative_search(|s| icurve_unchecked(records, s, source), params)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelOutcome {
    pub plus: SearchOutcome,
    pub minus: SearchOutcome,
    /// I-curve of all records with the sign-dependent factors applied.
    pub value: f64,
    /// Set when a sign subset was empty and the single-factor result was used.
    pub fallback: bool,
}

/// Independent searches over the positive- and negative-LLR subsets. The
/// I-curve sum splits by sign, so the joint maximum is separable; zero LLRs
/// contribute a constant and belong to neither subset.
pub fn two_level_search(
    records: &[LlrRecord],
    params: &SearchParams,
    source: BitSource,
) -> Result<TwoLevelOutcome> {
    check_bits(records, source)?;
    let (plus, minus): (Vec<LlrRecord>, Vec<LlrRecord>) = records
        .iter()
        .filter(|r| r.llr != 0.0)
        .partition(|r| r.llr > 0.0);
    let mut single = None;
    let mut fallback = false;
    let mut side = |subset: &[LlrRecord]| -> Result<SearchOutcome> {
        if subset.is_empty() {
            fallback = true;
            if single.is_none() {
                single = Some(search_scale(records, params, source)?);
            }
            return Ok(single.unwrap());
        }
        search_scale(subset, params, source)
    };
    let plus_out = side(&plus)?;
    let minus_out = side(&minus)?;
    let n = records.len() as f64;
    let weighted = |subset: &[LlrRecord], s: f64| {
        if subset.is_empty() {
            0.0
        } else {
            subset.len() as f64 * icurve_unchecked(subset, s, source)
        }
    };
    let value = (weighted(&plus, plus_out.factor) + weighted(&minus, minus_out.factor)) / n;
    Ok(TwoLevelOutcome {
        plus: plus_out,
        minus: minus_out,
        value,
        fallback,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OnlineMode {
    OneLevel,
    /// Sign-split factors on every class except the first.
    TwoLevel,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Factors {
    Single { factor: f64 },
    Split { s_plus: f64, s_minus: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelFactors {
    pub class: u8,
    #[serde(flatten)]
    pub factors: Factors,
    pub i_hat: f64,
    pub steps: usize,
    pub converged: bool,
}

/// Online factors for every class of a record set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub bit_source: BitSource,
    pub channels: Vec<ChannelFactors>,
}

impl ScalingReport {
    /// Scheme applying the report's factors, indexed by class.
    pub fn scheme(&self) -> ScalingScheme {
        if self
            .channels
            .iter()
            .all(|c| matches!(c.factors, Factors::Single { .. }))
        {
            return ScalingScheme::Uniform(
                self.channels
                    .iter()
                    .map(|c| match c.factors {
                        Factors::Single { factor } => factor,
                        Factors::Split { .. } => unreachable!(),
                    })
                    .collect(),
            );
        }
        ScalingScheme::TwoLevel(
            self.channels
                .iter()
                .map(|c| match c.factors {
                    Factors::Single { factor } => (factor, factor),
                    Factors::Split { s_plus, s_minus } => (s_plus, s_minus),
                })
                .collect(),
        )
    }
}

/// Searches factors for classes `0..num_classes` of `set`.
pub fn online_factors(
    set: &RecordSet,
    num_classes: usize,
    mode: OnlineMode,
    params: &SearchParams,
    source: BitSource,
) -> Result<ScalingReport> {
    let channels = (0..num_classes)
        .map(|class| {
            let records = set.class(class as u8);
            if records.is_empty() {
                return Err(Error::UncoveredChannel(class));
            }
            if mode == OnlineMode::TwoLevel && class > 0 {
                let out = two_level_search(records, params, source)?;
                Ok(ChannelFactors {
                    class: class as u8,
                    factors: Factors::Split {
                        s_plus: out.plus.factor,
                        s_minus: out.minus.factor,
                    },
                    i_hat: out.value,
                    steps: out.plus.steps + out.minus.steps,
                    converged: out.plus.converged && out.minus.converged && !out.fallback,
                })
            } else {
                let out = search_scale(records, params, source)?;
                Ok(ChannelFactors {
                    class: class as u8,
                    factors: Factors::Single { factor: out.factor },
                    i_hat: out.value,
                    steps: out.steps,
                    converged: out.converged,
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalingReport {
        bit_source: source,
        channels,
    })
}

/// `mean(|s - s_hat| / s)` over paired factors.
pub fn normalized_mean_error(genie: &[f64], decided: &[f64]) -> Result<f64> {
    if genie.len() != decided.len() {
        return Err(Error::LengthMismatch {
            expected: genie.len(),
            actual: decided.len(),
        });
    }
    if genie.is_empty() {
        return Err(Error::EmptyRecords);
    }
    if let Some(s) = genie.iter().find(|&&s| !(s > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "genie factor {s} is not positive"
        )));
    }
    let total: f64 = genie
        .iter()
        .zip(decided)
        .map(|(s, d)| (s - d).abs() / s)
        .sum();
    Ok(total / genie.len() as f64)
}

#[cfg(test)]
mod tests;
