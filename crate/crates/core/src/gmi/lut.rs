use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::histogram::{HistogramPair, ScalingPoint};
use crate::{Error, Result};

/// Piecewise-linear approximation `s(l) = a_j l + c_j` of the ideal scaling
/// function over equal-width segments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingLut {
    /// `segments + 1` ascending breakpoints.
    pub breakpoints: Vec<f64>,
    /// `(a_j, c_j)` per segment.
    pub coefficients: Vec<(f64, f64)>,
}

/// Least squares weighted by each point's precision.
fn weighted_fit(points: &[&ScalingPoint]) -> Option<(f64, f64)> {
    let w: f64 = points.iter().map(|p| p.precision).sum();
    if points.is_empty() || w <= 0.0 {
        return None;
    }
    let mx = points.iter().map(|p| p.precision * p.llr).sum::<f64>() / w;
    let my = points.iter().map(|p| p.precision * p.factor).sum::<f64>() / w;
    let sxx: f64 = points
        .iter()
        .map(|p| p.precision * (p.llr - mx).powi(2))
        .sum();
    let sxy: f64 = points
        .iter()
        .map(|p| p.precision * (p.llr - mx) * (p.factor - my))
        .sum();
    if points.len() < 2 || sxx <= 1e-12 * w {
        return Some((0.0, my));
    }
    let a = sxy / sxx;
    Some((a, my - a * mx))
}

/// Fits a `segments`-piece LUT to the ideal scaling points of `hist`.
pub fn build_lut(hist: &HistogramPair, segments: usize) -> Result<ScalingLut> {
    if segments == 0 {
        return Err(Error::InvalidParameter(
            "LUT needs at least one segment".into(),
        ));
    }
    let points = hist.ideal_scaling();
    let lo = hist.edges[0];
    let hi = hist.edges[hist.edges.len() - 1];
    let width = (hi - lo) / segments as f64;
    let breakpoints: Vec<f64> = (0..=segments).map(|j| lo + width * j as f64).collect();
    let mut buckets: Vec<Vec<&ScalingPoint>> = vec![Vec::new(); segments];
    for p in points.iter().filter(|p| p.valid) {
        let j = (((p.llr - lo) / width).floor().max(0.0) as usize).min(segments - 1);
        buckets[j].push(p);
    }
    let fitted: Vec<Option<(f64, f64)>> = buckets.iter().map(|b| weighted_fit(b)).collect();
    if fitted.iter().all(Option::is_none) {
        return Err(Error::NoPopulatedBins);
    }
    // Empty segments hold the nearest fitted segment's value at its outermost
    // point on their side.
    let coefficients = (0..segments)
        .map(|j| {
            if let Some(c) = fitted[j] {
                return c;
            }
            let (i, (a, c)) = (0..segments)
                .filter_map(|i| fitted[i].map(|c| (i, c)))
                .min_by_key(|&(i, _)| (j.abs_diff(i), i))
                .expect("at least one fitted segment");
            let llrs = buckets[i].iter().map(|p| p.llr);
            let edge = if i < j {
                llrs.fold(f64::NEG_INFINITY, f64::max)
            } else {
                llrs.fold(f64::INFINITY, f64::min)
            };
            (0.0, (a * edge + c).max(0.0))
        })
        .collect();
    Ok(ScalingLut {
        breakpoints,
        coefficients,
    })
}

impl ScalingLut {
    /// Single segment with constant factor `factor` over `[lo, hi]`.
    pub fn constant(lo: f64, hi: f64, factor: f64) -> Self {
        Self {
            breakpoints: vec![lo, hi],
            coefficients: vec![(0.0, factor)],
        }
    }

    pub fn segments(&self) -> usize {
        self.coefficients.len()
    }

    /// `s(l)`; outside the breakpoints the end segment is evaluated at the
    /// clamped LLR. Never negative.
    pub fn factor(&self, llr: f64) -> f64 {
        let lo = self.breakpoints[0];
        let hi = self.breakpoints[self.breakpoints.len() - 1];
        let l = llr.clamp(lo, hi);
        let j = self.breakpoints[1..self.segments()].partition_point(|&b| b <= l);
        let (a, c) = self.coefficients[j];
        (a * l + c).max(0.0)
    }

    /// CSV with header `breakpoint,a,c`; the last row carries only the
    /// closing breakpoint.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["breakpoint", "a", "c"])?;
        for (j, b) in self.breakpoints.iter().enumerate() {
            match self.coefficients.get(j) {
                Some((a, c)) => w.write_record([b.to_string(), a.to_string(), c.to_string()])?,
                None => w.write_record([b.to_string(), String::new(), String::new()])?,
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut breakpoints = Vec::new();
        let mut coefficients = Vec::new();
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad LUT value {s:?}")))
        };
        for row in csv::Reader::from_reader(reader).records() {
            let row = row?;
            breakpoints.push(parse(&row[0])?);
            if !row[1].trim().is_empty() {
                coefficients.push((parse(&row[1])?, parse(&row[2])?));
            }
        }
        if coefficients.is_empty() || breakpoints.len() != coefficients.len() + 1 {
            return Err(Error::InvalidParameter("malformed LUT table".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter(
                "LUT breakpoints not ascending".into(),
            ));
        }
        Ok(Self {
            breakpoints,
            coefficients,
        })
    }
}
