use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::*;
use crate::channel::ChannelKind;
use crate::constellation::BitChannelId;

/// Consistent Gaussian LLRs: `l | b ~ N(beta(b) mu, 2 mu)`.
fn consistent(n: usize, mu: f64, index: usize, seed: u64) -> Vec<LlrRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, (2.0 * mu).sqrt()).unwrap();
    (0..n)
        .map(|_| {
            let b: u8 = rng.random_range(0..2);
            let l = bipolar(b) * mu + noise.sample(&mut rng);
            LlrRecord::new(l, BitChannelId::new(index), Some(b))
        })
        .collect()
}

fn scaled(records: &[LlrRecord], c: f64) -> Vec<LlrRecord> {
    records
        .iter()
        .map(|r| LlrRecord {
            llr: r.llr * c,
            ..*r
        })
        .collect()
}

fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|k| f(a + h * k as f64)).sum();
    h * (0.5 * (f(a) + f(b)) + inner)
}

fn gauss_pdf(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

#[test]
fn consistent_gaussian_matches_quadrature() {
    let mu: f64 = 4.0;
    let oracle = 1.0
        - trapezoid(
            |x| gauss_pdf(x, mu, 2.0 * mu) * softplus(-x) / LN_2,
            mu - 12.0 * (2.0 * mu).sqrt(),
            mu + 12.0 * (2.0 * mu).sqrt(),
            20_000,
        );
    let records = consistent(200_000, mu, 0, 1);
    let i1 = icurve_eval(&records, 1.0, BitSource::Genie).unwrap();
    assert!((i1 - oracle).abs() < 0.005, "{i1} vs {oracle}");
    let max = critical_point(&records, BitSource::Genie).unwrap();
    assert!(max.converged);
    assert!((max.s - 1.0).abs() < 0.03, "s* = {}", max.s);
}

#[test]
fn reparameterization() {
    let records = consistent(20_000, 2.0, 0, 2);
    let doubled = scaled(&records, 2.0);
    for s in [0.2, 0.5, 1.0, 3.0] {
        let a = icurve_eval(&doubled, s, BitSource::Genie).unwrap();
        let b = icurve_eval(&records, 2.0 * s, BitSource::Genie).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
    let s1 = critical_point(&records, BitSource::Genie).unwrap().s;
    let s2 = critical_point(&doubled, BitSource::Genie).unwrap().s;
    assert!((s2 - 0.5 * s1).abs() < 2e-3 * s1);
}

#[test]
fn doubled_llrs_have_half_critical_point_and_lut() {
    let records = scaled(&consistent(200_000, 3.0, 0, 3), 2.0);
    let max = critical_point(&records, BitSource::Genie).unwrap();
    assert!((max.s - 0.5).abs() < 0.02, "s* = {}", max.s);
    let hist = build_histograms(&records, &HistogramOptions::default()).unwrap();
    let lut = build_lut(&hist, 16).unwrap();
    for l in [-12.0, -6.0, -2.0, 2.0, 6.0, 12.0] {
        let f = lut.factor(l);
        assert!((f - 0.5).abs() < 0.1, "s({l}) = {f}");
    }
    let mean = consistency_mean(&records, &HistogramOptions::default()).unwrap();
    assert!((mean - 0.5).abs() < 0.05, "{mean}");
}

#[test]
fn consistent_llrs_have_unit_consistency_mean() {
    let records = consistent(200_000, 3.0, 0, 4);
    let mean = consistency_mean(&records, &HistogramOptions::default()).unwrap();
    assert!((mean - 1.0).abs() < 0.05, "{mean}");
}

#[test]
fn eval_errors() {
    assert!(matches!(
        icurve_eval(&[], 1.0, BitSource::Genie),
        Err(Error::EmptyRecords)
    ));
    let records = consistent(10, 1.0, 0, 5);
    assert!(matches!(
        icurve_eval(&records, 1.0, BitSource::Decided),
        Err(Error::MissingBit { .. })
    ));
    assert!(icurve_eval(&records, 0.0, BitSource::Genie).is_err());
}

#[test]
fn perfect_llrs_saturate() {
    let records: Vec<_> = (0..100)
        .map(|k| {
            let b = (k % 2) as u8;
            LlrRecord::new(30.0 * bipolar(b), BitChannelId::new(0), Some(b))
        })
        .collect();
    let i = icurve_eval(&records, 1.0, BitSource::Genie).unwrap();
    assert!(i > 1.0 - 1e-12 && i <= 1.0);
}

/// BICM capacity of Gray 16-QAM on AWGN by 1-D quadrature: the I and Q
/// axes are independent Gray 4-PAM channels.
fn pam4_bicm_capacity(noise_variance: f64) -> f64 {
    let a = 0.1f64.sqrt();
    let points = [-3.0 * a, -a, a, 3.0 * a];
    let labels = [[0u8, 0], [0, 1], [1, 1], [1, 0]];
    let var = noise_variance / 2.0;
    let mut total = 0.0;
    for bit in 0..2 {
        let mut mi = 0.0;
        for (x, lab) in points.iter().zip(labels) {
            let integrand = |y: f64| {
                let all: f64 = points.iter().map(|&p| gauss_pdf(y, p, var)).sum();
                let same: f64 = points
                    .iter()
                    .zip(labels)
                    .filter(|(_, l)| l[bit] == lab[bit])
                    .map(|(&p, _)| gauss_pdf(y, p, var))
                    .sum();
                gauss_pdf(y, *x, var) * (same / all * 2.0).log2()
            };
            let sd = var.sqrt();
            mi += 0.25 * trapezoid(integrand, x - 12.0 * sd, x + 12.0 * sd, 20_000);
        }
        total += mi;
    }
    2.0 * total
}

#[test]
fn capacity_matches_quadrature() {
    let oracle = pam4_bicm_capacity(0.1);
    let sc = UncodedScenario {
        order: 16,
        channel: ChannelKind::Awgn,
        snr_db: 10.0,
        mismatch: MismatchModel::PERFECT,
        demapper: Demapper::MaxLog,
        symbols: 100_000,
        seed: 9,
    };
    let est = capacity_estimate(&sc).unwrap();
    assert!(
        (est.bits_per_symbol - oracle).abs() < 0.02,
        "{est:?} vs {oracle}"
    );
    assert!(est.std_error < 0.01);
}

#[test]
fn gmi_inequality_chain() {
    let sc = UncodedScenario {
        order: 16,
        channel: ChannelKind::Rayleigh,
        snr_db: 8.0,
        mismatch: MismatchModel::PERFECT,
        demapper: Demapper::MaxLog,
        symbols: 40_000,
        seed: 10,
    };
    let set = sc.generate().unwrap();
    let total = total_gmi(&set, 4, BitSource::Genie, &s_grid(0.5, 2.0, 5)).unwrap();
    let cap = capacity_estimate(&sc).unwrap();
    let at_one: f64 = total.channels.iter().map(|c| c.samples[2].1).sum();
    assert!((total.curve.samples[2].1 - at_one).abs() < 1e-12);
    assert!(at_one <= total.gmi + 1e-9);
    assert!(total.gmi <= total.sum_channel_gmi + 1e-9);
    assert!(total.sum_channel_gmi <= cap.bits_per_symbol + 4.0 * cap.std_error + 0.01);
    assert!(matches!(
        total_gmi(&set, 6, BitSource::Genie, &[1.0]),
        Err(Error::UncoveredChannel(4))
    ));
}

#[test]
fn curve_csv() {
    let records = consistent(1000, 2.0, 0, 11);
    let curve = ICurve::from_records(
        &records,
        BitSource::Genie,
        CurveOwner::Class(0),
        &s_grid(0.1, 10.0, 11),
    )
    .unwrap();
    let mut buf = Vec::new();
    curve.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("s,I\n"));
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn scaling_schemes() {
    let records: Vec<_> = consistent(1000, 2.0, 3, 12)
        .into_iter()
        .map(|r| LlrRecord {
            llr: clip_llr(r.llr),
            ..r
        })
        .collect();
    assert_eq!(
        apply_scaling(&records, &ScalingScheme::Identity).unwrap(),
        records
    );
    let up = apply_scaling(&records, &ScalingScheme::Uniform(vec![1.0, 2.0])).unwrap();
    let back = apply_scaling(&up, &ScalingScheme::Uniform(vec![1.0, 0.5])).unwrap();
    for (a, b) in records.iter().zip(&back) {
        if a.llr.abs() < 15.0 {
            assert!((a.llr - b.llr).abs() < 1e-12);
        }
    }
    let split = apply_scaling(
        &records,
        &ScalingScheme::TwoLevel(vec![(1.0, 1.0), (2.0, 3.0)]),
    )
    .unwrap();
    for (a, b) in records.iter().zip(&split) {
        let f = if a.llr >= 0.0 { 2.0 } else { 3.0 };
        assert_eq!(b.llr, clip_llr(a.llr * f));
    }
    assert!(matches!(
        apply_scaling(&records, &ScalingScheme::Uniform(vec![1.0])),
        Err(Error::UncoveredChannel(1))
    ));
}

#[test]
fn lut_csv_round_trip_and_clamping() {
    let records = consistent(50_000, 3.0, 0, 13);
    let hist = build_histograms(&records, &HistogramOptions::default()).unwrap();
    let lut = build_lut(&hist, 16).unwrap();
    assert_eq!(lut.breakpoints.len(), 17);
    let mut buf = Vec::new();
    lut.write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf.clone()).unwrap().lines().count(), 18);
    let back = ScalingLut::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back, lut);
    let hi = *lut.breakpoints.last().unwrap();
    assert_eq!(lut.factor(hi + 100.0), lut.factor(hi));
    assert!(ScalingLut::read_csv("breakpoint,a,c\n1,,\n".as_bytes()).is_err());
}

#[test]
fn histogram_errors() {
    let ones: Vec<_> = (0..50)
        .map(|k| LlrRecord::new(k as f64 * 0.1, BitChannelId::new(0), Some(1)))
        .collect();
    assert!(matches!(
        build_histograms(&ones, &HistogramOptions::default()),
        Err(Error::EmptyClass(0))
    ));
    let sparse = consistent(10, 2.0, 0, 14);
    assert!(matches!(
        consistency_mean(&sparse, &HistogramOptions::default()),
        Err(Error::NoPopulatedBins)
    ));
}

proptest! {
    #[test]
    fn histogram_conserves_counts(seed in 0u64..1000, n in 10usize..2000, fixed in any::<bool>()) {
        let records: Vec<_> = consistent(n, 2.0, 0, seed)
            .into_iter()
            .map(|r| LlrRecord { llr: clip_llr(r.llr), ..r })
            .collect();
        let opts = if fixed { HistogramOptions::fixed() } else { HistogramOptions::default() };
        if let Ok(h) = build_histograms(&records, &opts) {
            let total: u64 = h.ones.iter().chain(&h.zeros).sum();
            prop_assert_eq!(total as usize, n);
            let p1: f64 = (0..h.bins()).map(|k| h.p1(k)).sum();
            prop_assert!((p1 - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn icurve_bounded_and_concave(seed in 0u64..1000, mu in 0.2f64..8.0, bias in 0.3f64..3.0) {
        let records = scaled(&consistent(500, mu, 0, seed), bias);
        let grid = s_grid(0.1, 10.0, 30);
        let values: Vec<f64> = grid.iter().map(|&s| icurve_eval(&records, s, BitSource::Genie).unwrap()).collect();
        for v in &values {
            prop_assert!(*v <= 1.0);
        }
        for k in 1..grid.len() - 1 {
            let (a, b, c) = (grid[k - 1], grid[k], grid[k + 1]);
            let chord = values[k - 1] + (values[k + 1] - values[k - 1]) * (b - a) / (c - a);
            prop_assert!(values[k] >= chord - 1e-9);
        }
    }
}
