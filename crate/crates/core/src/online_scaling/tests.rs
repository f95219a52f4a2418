use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::*;
use crate::constellation::{bipolar, BitChannelId};

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

fn with_decisions(records: &[LlrRecord], flip: bool) -> Vec<LlrRecord> {
    records
        .iter()
        .map(|r| LlrRecord {
            decided_bit: r.true_bit.map(|b| if flip { 1 - b } else { b }),
            ..*r
        })
        .collect()
}

fn grid_argmax(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> f64 {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n)
        .map(|k| lo + step * k as f64)
        .map(|s| (s, f(s)))
        .fold((lo, f64::NEG_INFINITY), |best, (s, v)| {
            if v > best.1 {
                (s, v)
            } else {
                best
            }
        })
        .0
}

/// One multiplicative step plus the oracle grid's resolution.
fn within_one_step(s: f64, reference: f64, alpha: f64) -> bool {
    (s / reference).ln().abs() <= alpha.ln() + 0.001 / reference
}

#[test]
fn bracket_contains_peak() {
    let params = SearchParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..100 {
        let peak: f64 = rng.random_range(0.2..8.0);
        let width: f64 = rng.random_range(0.2..2.0);
        let skew: f64 = rng.random_range(-0.5..0.5);
        let f = |s: f64| {
            let x = (s / peak).ln() / width;
            -x * x - skew * x * x * x.signum()
        };
        let out = multiplicative_search(f, &params).unwrap();
        assert!(out.converged);
        assert!(out.bracket.0 <= peak && peak <= out.bracket.1);
        assert!(out.bracket.0 <= out.factor && out.factor <= out.bracket.1);
    }
}

#[test]
fn search_within_one_step_of_grid() {
    let params = SearchParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    for k in 0..100 {
        let mu: f64 = rng.random_range(0.5..6.0);
        let bias: f64 = rng.random_range(0.2..4.0);
        let records: Vec<_> = consistent(2000, mu, 0, 1000 + k)
            .into_iter()
            .map(|r| LlrRecord {
                llr: r.llr * bias,
                ..r
            })
            .collect();
        let out = search_scale(&records, &params, BitSource::Genie).unwrap();
        assert!(out.converged);
        let f = |s: f64| icurve_eval(&records, s, BitSource::Genie).unwrap();
        let (lo, hi) = ((out.factor / 1.2).max(0.1), (out.factor * 1.2).min(10.0));
        let reference = grid_argmax(f, (lo * 1000.0).round() / 1000.0, hi, 0.001);
        assert!(reference > lo + 0.001 && reference < hi - 0.001);
        assert!(
            within_one_step(out.factor, reference, params.alpha),
            "curve {k}: {} vs {reference}",
            out.factor
        );
    }
}

#[test]
fn literal_steps() {
    // Peak exactly at 1: step up loses, direction reverses, step down loses.
    let out = multiplicative_search(|s: f64| -(s.ln()).powi(2), &SearchParams::default()).unwrap();
    assert_eq!(out.steps, 0);
    assert!((out.factor - (1.0 + 1.0 / 1.05) / 2.0).abs() < 1e-15);
    // Flat objective: the first tie advances, the second stops.
    let out = multiplicative_search(|_| 0.0, &SearchParams::default()).unwrap();
    assert_eq!(out.steps, 1);
    assert!((out.factor - (1.05 + 1.05 * 1.05) / 2.0).abs() < 1e-12);
}

#[test]
fn consistent_peak_near_one() {
    let records = consistent(100_000, 3.0, 0, 1);
    let out = search_scale(&records, &SearchParams::default(), BitSource::Genie).unwrap();
    assert!(out.converged);
    assert!((out.factor - 1.0).abs() <= 0.06, "{}", out.factor);
}

#[test]
fn prescaled_peak() {
    let records: Vec<_> = consistent(50_000, 3.0, 0, 2)
        .into_iter()
        .map(|r| LlrRecord {
            llr: r.llr / 1.3,
            ..r
        })
        .collect();
    let params = SearchParams::default();
    let out = search_scale(&records, &params, BitSource::Genie).unwrap();
    let reference = grid_argmax(
        |s| icurve_eval(&records, s, BitSource::Genie).unwrap(),
        1.0,
        1.6,
        0.001,
    );
    assert!((reference - 1.3).abs() < 0.05);
    assert!(
        within_one_step(out.factor, reference, params.alpha),
        "{} vs {reference}",
        out.factor
    );
}

#[test]
fn bound_hit_is_flagged() {
    let records: Vec<_> = (0..200)
        .map(|k| {
            let b = (k % 2) as u8;
            LlrRecord::new(0.01 * bipolar(b), BitChannelId::new(0), Some(b))
        })
        .collect();
    let out = search_scale(&records, &SearchParams::default(), BitSource::Genie).unwrap();
    assert!(!out.converged);
    assert_eq!(out.factor, 10.0);
    let down = multiplicative_search(|s: f64| -s, &SearchParams::default()).unwrap();
    assert!(!down.converged);
    assert!((down.factor - 0.1).abs() < 0.01);
}

#[test]
fn invalid_params() {
    let bad = [
        SearchParams {
            alpha: 1.0,
            ..Default::default()
        },
        SearchParams {
            lower: 0.0,
            ..Default::default()
        },
        SearchParams {
            initial: 20.0,
            ..Default::default()
        },
    ];
    for p in bad {
        assert!(multiplicative_search(|_| 0.0, &p).is_err());
    }
}

#[test]
fn genie_decisions_match_icurve() {
    let records = with_decisions(&consistent(5000, 2.0, 0, 3), false);
    for s in [0.3, 1.0, 2.5] {
        let a = approx_icurve(&records, s).unwrap();
        let b = icurve_eval(&records, s, BitSource::Genie).unwrap();
        assert!((a - b).abs() <= 1e-12);
    }
    assert!(approx_icurve(&consistent(10, 1.0, 0, 4), 1.0).is_err());
}

#[test]
fn flipped_decisions_negate_llrs() {
    let base = consistent(5000, 2.0, 0, 5);
    let flipped = with_decisions(&base, true);
    let negated: Vec<_> = with_decisions(&base, false)
        .into_iter()
        .map(|r| LlrRecord { llr: -r.llr, ..r })
        .collect();
    for s in [0.5, 1.0, 2.0] {
        let a = approx_icurve(&flipped, s).unwrap();
        let b = approx_icurve(&negated, s).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn sign_distortion_is_undone() {
    let records: Vec<_> = consistent(100_000, 3.0, 2, 6)
        .into_iter()
        .map(|r| LlrRecord {
            llr: if r.llr > 0.0 {
                2.0 * r.llr
            } else {
                0.5 * r.llr
            },
            ..r
        })
        .collect();
    let out = two_level_search(&records, &SearchParams::default(), BitSource::Genie).unwrap();
    assert!(!out.fallback);
    assert!((out.plus.factor - 0.5).abs() <= 0.06, "{}", out.plus.factor);
    assert!(
        (out.minus.factor - 2.0).abs() <= 0.06 * 2.0,
        "{}",
        out.minus.factor
    );
}

#[test]
fn symmetric_records_give_equal_factors() {
    let records = consistent(100_000, 2.0, 2, 7);
    let params = SearchParams::default();
    let single = search_scale(&records, &params, BitSource::Genie).unwrap();
    let split = two_level_search(&records, &params, BitSource::Genie).unwrap();
    let two_steps = 2.0 * params.alpha.ln();
    assert!((split.plus.factor / single.factor).ln().abs() <= two_steps);
    assert!((split.minus.factor / single.factor).ln().abs() <= two_steps);
}

#[test]
fn separable_joint_maximum() {
    let params = SearchParams::default();
    for seed in 0..5 {
        let records: Vec<_> = consistent(400, 1.5, 2, 100 + seed)
            .into_iter()
            .map(|r| LlrRecord {
                llr: if r.llr > 0.0 {
                    1.4 * r.llr
                } else {
                    0.7 * r.llr
                },
                ..r
            })
            .collect();
        let joint = |sp: f64, sm: f64| {
            let scaled: Vec<_> = records
                .iter()
                .map(|r| LlrRecord {
                    llr: r.llr * if r.llr > 0.0 { sp } else { sm },
                    ..*r
                })
                .collect();
            icurve_eval(&scaled, 1.0, BitSource::Genie).unwrap()
        };
        let grid: Vec<f64> = (0..=300).map(|k| 0.2 + 0.01 * k as f64).collect();
        let mut best = (0.0, 0.0, f64::NEG_INFINITY);
        for &sp in &grid {
            for &sm in &grid {
                let v = joint(sp, sm);
                if v > best.2 {
                    best = (sp, sm, v);
                }
            }
        }
        let out = two_level_search(&records, &params, BitSource::Genie).unwrap();
        let tol = params.alpha.ln() + 0.01 / best.0.min(best.1);
        assert!(
            (out.plus.factor / best.0).ln().abs() <= tol,
            "{} vs {}",
            out.plus.factor,
            best.0
        );
        assert!(
            (out.minus.factor / best.1).ln().abs() <= tol,
            "{} vs {}",
            out.minus.factor,
            best.1
        );
        assert!((out.value - joint(out.plus.factor, out.minus.factor)).abs() < 1e-12);
        assert!(out.value <= best.2 + 1e-12);
    }
}

#[test]
fn empty_sign_subset_falls_back() {
    let records: Vec<_> = consistent(2000, 4.0, 2, 8)
        .into_iter()
        .filter(|r| r.llr > 0.0)
        .collect();
    let out = two_level_search(&records, &SearchParams::default(), BitSource::Genie).unwrap();
    assert!(out.fallback);
    let single = search_scale(&records, &SearchParams::default(), BitSource::Genie).unwrap();
    assert_eq!(out.minus, single);
}

#[test]
fn report_json() {
    let mut records = consistent(20_000, 3.0, 0, 9);
    records.extend(consistent(20_000, 3.0, 2, 10));
    let set = RecordSet::new(records);
    let report = online_factors(
        &set,
        2,
        OnlineMode::TwoLevel,
        &SearchParams::default(),
        BitSource::Genie,
    )
    .unwrap();
    assert!(matches!(report.channels[0].factors, Factors::Single { .. }));
    assert!(matches!(report.channels[1].factors, Factors::Split { .. }));
    assert!(matches!(report.scheme(), ScalingScheme::TwoLevel(ref v) if v.len() == 2));
    let json = serde_json::to_value(&report).unwrap();
    assert!(json["channels"][0]["factor"].is_f64());
    assert!(json["channels"][1]["s_plus"].is_f64());
    assert!(json["channels"][1]["i_hat"].is_f64());
    let back: ScalingReport = serde_json::from_value(json).unwrap();
    assert_eq!(back, report);
    assert!(matches!(
        online_factors(
            &set,
            3,
            OnlineMode::OneLevel,
            &SearchParams::default(),
            BitSource::Genie
        ),
        Err(Error::UncoveredChannel(2))
    ));
}

#[test]
fn mean_error() {
    let s = [1.0, 1.5, 2.0];
    assert_eq!(normalized_mean_error(&s, &s).unwrap(), 0.0);
    let up: Vec<f64> = s.iter().map(|x| 1.1 * x).collect();
    assert!((normalized_mean_error(&s, &up).unwrap() - 0.1).abs() < 1e-12);
    assert!(normalized_mean_error(&s, &up[..2]).is_err());
    assert!(normalized_mean_error(&[0.0], &[1.0]).is_err());
    assert!(normalized_mean_error(&[], &[]).is_err());
}
