use std::io::Write;

use serde::Serialize;

use super::config::{snr_key, ScalingMode, SimConfig};
use crate::channel::{ChannelKind, MismatchModel};
use crate::constellation::Constellation;
use crate::dataset::{RecordSet, UncodedScenario};
use crate::detector::{Demapper, LlrRecord};
use crate::gmi::{
    apply_scaling, build_histograms, build_lut, consistency_mean, critical_point, s_grid,
    total_gmi, BitSource, HistogramOptions, ScalingLut, ScalingScheme, TotalGmi,
};
use crate::online_scaling::{online_factors, OnlineMode, ScalingReport, SearchParams};
use crate::rng::derive_seed;
use crate::{Error, Result};

/// Seed path tag separating uncoded datasets from coded frames.
const UNCODED_TAG: u64 = 0x6d61_7073;

/// Genie-labeled uncoded dataset matching the config's link at `snr_db`,
/// with the LLR prescale applied.
pub fn uncoded_dataset(config: &SimConfig, snr_db: f64, symbols: usize) -> Result<RecordSet> {
    let scenario = UncodedScenario {
        order: config.modulation,
        channel: config.channel,
        snr_db,
        mismatch: config.mismatch,
        demapper: config.demapper,
        symbols,
        seed: derive_seed(config.seed, &[UNCODED_TAG, snr_key(snr_db) as u64]),
    };
    let mut set = scenario.generate()?;
    if config.llr_prescale != 1.0 {
        set.records_mut()
            .iter_mut()
            .for_each(|r| r.llr *= config.llr_prescale);
    }
    Ok(set)
}

/// Per-class GMI-optimal uniform factors.
pub fn uniform_factors(set: &RecordSet, classes: usize) -> Result<Vec<f64>> {
    (0..classes)
        .map(|c| Ok(critical_point(non_empty(set, c)?, BitSource::Genie)?.s))
        .collect()
}

/// Per-class histogram LUTs. A class without any bin holding both bit
/// values (error-free training data) gets the identity LUT.
pub fn class_luts(
    set: &RecordSet,
    classes: usize,
    options: &HistogramOptions,
    segments: usize,
) -> Result<Vec<ScalingLut>> {
    (0..classes)
        .map(|c| {
            let hist = build_histograms(non_empty(set, c)?, options)?;
            match build_lut(&hist, segments) {
                Err(Error::NoPopulatedBins) => Ok(ScalingLut::constant(
                    hist.edges[0],
                    hist.edges[hist.edges.len() - 1],
                    1.0,
                )),
                other => other,
            }
        })
        .collect()
}

fn non_empty(set: &RecordSet, class: usize) -> Result<&[LlrRecord]> {
    let records = set.class(class as u8);
    if records.is_empty() {
        return Err(Error::UncoveredChannel(class));
    }
    Ok(records)
}

/// Offline scheme trained on an uncoded dataset at `snr_db`.
pub fn train_offline_scheme(
    config: &SimConfig,
    snr_db: f64,
    mode: ScalingMode,
) -> Result<ScalingScheme> {
    let set = uncoded_dataset(config, snr_db, config.offline_training_symbols)?;
    let classes = Constellation::qam(config.modulation)?.num_classes();
    match mode {
        ScalingMode::UniformOffline => Ok(ScalingScheme::Uniform(uniform_factors(&set, classes)?)),
        ScalingMode::LutOffline => Ok(ScalingScheme::Lut(class_luts(
            &set,
            classes,
            &config.analysis.histogram,
            config.analysis.lut_segments,
        )?)),
        other => Err(Error::Config(format!(
            "{} is not an offline scheme",
            other.name()
        ))),
    }
}

/// One scheme's effect on a dataset.
#[derive(Clone, Debug, Serialize)]
pub struct SchemeAnalysis {
    pub mode: ScalingMode,
    pub scheme: ScalingScheme,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<ScalingReport>,
    pub total: TotalGmi,
}

#[derive(Clone, Debug, Serialize)]
pub struct GmiAnalysis {
    pub snr_db: f64,
    pub schemes: Vec<SchemeAnalysis>,
}

impl GmiAnalysis {
    pub fn scheme(&self, mode: ScalingMode) -> &SchemeAnalysis {
        self.schemes
            .iter()
            .find(|s| s.mode == mode)
            .expect("every mode is analysed")
    }

    /// Long-format curves: `scheme,curve,s,I`.
    pub fn write_curves<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["scheme", "curve", "s", "I"])?;
        for a in &self.schemes {
            let curves = a
                .total
                .channels
                .iter()
                .enumerate()
                .map(|(i, c)| (format!("pos{i}"), c))
                .chain(std::iter::once(("total".to_string(), &a.total.curve)));
            for (name, curve) in curves {
                for (s, i) in &curve.samples {
                    w.write_record([a.mode.name(), &name, &format!("{s:.6}"), &format!("{i:.9}")])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// `scheme,class,factor,s_plus,s_minus,critical_point,gmi`; LUT rows
    /// leave the factor columns empty, critical points are per class position
    /// pairs after scaling.
    pub fn write_factors<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "scheme",
            "class",
            "factor",
            "s_plus",
            "s_minus",
            "critical_point",
            "gmi",
        ])?;
        for a in &self.schemes {
            let classes = a.total.channels.len() / 2;
            for c in 0..classes {
                let (factor, plus, minus) = match &a.scheme {
                    ScalingScheme::Identity => (Some(1.0), None, None),
                    ScalingScheme::Uniform(v) => (Some(v[c]), None, None),
                    ScalingScheme::TwoLevel(v) => (None, Some(v[c].0), Some(v[c].1)),
                    ScalingScheme::Lut(_) => (None, None, None),
                };
                let pair = &a.total.channels[2 * c..2 * c + 2];
                let cp = 0.5 * (pair[0].critical_point + pair[1].critical_point);
                let gmi = pair[0].peak + pair[1].peak;
                let fmt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.4}"));
                w.write_record([
                    a.mode.name().to_string(),
                    c.to_string(),
                    fmt(factor),
                    fmt(plus),
                    fmt(minus),
                    format!("{cp:.4}"),
                    format!("{gmi:.6}"),
                ])?;
            }
            w.write_record([
                a.mode.name().to_string(),
                "total".into(),
                String::new(),
                String::new(),
                String::new(),
                format!("{:.4}", a.total.curve.critical_point),
                format!("{:.6}", a.total.gmi),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Curves of every scaling scheme on the genie dataset at `snr_db`. Online
/// factors are searched with genie bits over the whole dataset.
pub fn analyze_snr(config: &SimConfig, snr_db: f64) -> Result<GmiAnalysis> {
    let set = uncoded_dataset(config, snr_db, config.analysis.symbols)?;
    let c = Constellation::qam(config.modulation)?;
    let (m, classes) = (c.bits_per_symbol(), c.num_classes());
    let (lo, hi, n) = config.analysis.grid;
    let grid = s_grid(lo, hi, n);
    let mut schemes = Vec::new();
    for mode in ScalingMode::ALL {
        let (scheme, report) = match mode {
            ScalingMode::None => (ScalingScheme::Identity, None),
            ScalingMode::UniformOffline => (
                ScalingScheme::Uniform(uniform_factors(&set, classes)?),
                None,
            ),
            ScalingMode::LutOffline => (
                ScalingScheme::Lut(class_luts(
                    &set,
                    classes,
                    &config.analysis.histogram,
                    config.analysis.lut_segments,
                )?),
                None,
            ),
            ScalingMode::Online1Level | ScalingMode::Online2Level => {
                let online = mode.online().unwrap_or(OnlineMode::OneLevel);
                let report =
                    online_factors(&set, classes, online, &config.search, BitSource::Genie)?;
                (report.scheme(), Some(report))
            }
        };
        let scaled = RecordSet::new(apply_scaling(set.records(), &scheme)?);
        let total = total_gmi(&scaled, m, BitSource::Genie, &grid)?;
        schemes.push(SchemeAnalysis {
            mode,
            scheme,
            report,
            total,
        });
    }
    Ok(GmiAnalysis { snr_db, schemes })
}

pub fn run_gmi_analysis(config: &SimConfig) -> Result<Vec<GmiAnalysis>> {
    config.validate()?;
    config
        .snr_db
        .iter()
        .map(|&snr| analyze_snr(config, snr))
        .collect()
}

/// Per-class LUTs trained at every configured SNR.
pub fn build_luts(config: &SimConfig) -> Result<Vec<(f64, Vec<ScalingLut>)>> {
    config.validate()?;
    let classes = Constellation::qam(config.modulation)?.num_classes();
    config
        .snr_db
        .iter()
        .map(|&snr| {
            let set = uncoded_dataset(config, snr, config.analysis.symbols)?;
            let luts = class_luts(
                &set,
                classes,
                &config.analysis.histogram,
                config.analysis.lut_segments,
            )?;
            Ok((snr, luts))
        })
        .collect()
}

/// Uniform scaling factors per class and for the pooled total, estimated
/// two ways: the I-curve critical point and the consistency mean.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table1 {
    pub gmi: Vec<f64>,
    pub gmi_total: f64,
    pub consistency: Vec<f64>,
    pub consistency_total: f64,
    pub symbols: usize,
    pub seed: u64,
}

/// 64-QAM, max-log, fast Rayleigh, 7 dB, perfect CSI, genie bits.
pub fn table1_scenario(seed: u64, symbols: usize) -> UncodedScenario {
    UncodedScenario {
        order: 64,
        channel: ChannelKind::Rayleigh,
        snr_db: 7.0,
        mismatch: MismatchModel::PERFECT,
        demapper: Demapper::MaxLog,
        symbols,
        seed,
    }
}

pub fn run_table1(seed: u64, symbols: usize) -> Result<Table1> {
    run_table1_with(seed, symbols, &HistogramOptions::default())
}

pub fn run_table1_with(seed: u64, symbols: usize, options: &HistogramOptions) -> Result<Table1> {
    let set = table1_scenario(seed, symbols).generate()?;
    let gmi = uniform_factors(&set, 3)?;
    let total = total_gmi(&set, 6, BitSource::Genie, &[1.0])?;
    let consistency = (0..3)
        .map(|c| consistency_mean(non_empty(&set, c)?, options))
        .collect::<Result<Vec<_>>>()?;
    Ok(Table1 {
        gmi,
        gmi_total: total.curve.critical_point,
        consistency,
        consistency_total: consistency_mean(set.records(), options)?,
        symbols,
        seed,
    })
}

impl Table1 {
    /// `method,class0,class1,class2,total` with four decimals.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["method", "class0", "class1", "class2", "total"])?;
        for (name, row, total) in [
            ("gmi", &self.gmi, self.gmi_total),
            ("consistency", &self.consistency, self.consistency_total),
        ] {
            let mut fields = vec![name.to_string()];
            fields.extend(row.iter().map(|v| format!("{v:.4}")));
            fields.push(format!("{total:.4}"));
            w.write_record(&fields)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Online factor search on a dumped record set, one entry per class present.
pub fn search_dump(
    records: Vec<LlrRecord>,
    mode: OnlineMode,
    params: &SearchParams,
) -> Result<ScalingReport> {
    let set = RecordSet::new(records);
    let classes = set.classes();
    let count = classes.last().map_or(0, |&c| c as usize + 1);
    if count == 0 {
        return Err(Error::EmptyRecords);
    }
    online_factors(&set, count, mode, params, BitSource::Genie)
}
