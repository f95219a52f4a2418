//! Log-domain BCJR for one terminated constituent code.

use serde::{Deserialize, Serialize};

use super::trellis::{Trellis, MEMORY, NUM_STATES};

const NEG_INF: f64 = f64::NEG_INFINITY;

/// Pairwise combine used by the recursions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaxStar {
    /// `max(a, b) + ln(1 + exp(-|a - b|))`
    Exact,
    /// `max(a, b)` plus an 8-entry, linearly interpolated correction table.
    Table,
    /// `max(a, b)`
    Max,
}

/// Correction `ln(1 + exp(-d))` sampled at `d = 0, 0.5, ..., 3.5`.
const CORRECTION: [f64; 8] = [
    0.693_147_180_559_945_3,
    0.474_076_984_046_089_3,
    0.313_261_687_518_222_8,
    0.201_413_277_982_752_7,
    0.126_928_011_042_972_6,
    0.078_889_022_620_607_4,
    0.048_587_351_573_742,
    0.029_750_088_586_279_2,
];
const TABLE_STEP: f64 = 0.5;
const TABLE_END: f64 = 4.0;

impl MaxStar {
    #[inline]
    pub fn combine(self, a: f64, b: f64) -> f64 {
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        if lo == NEG_INF {
            return hi;
        }
        match self {
            MaxStar::Max => hi,
            MaxStar::Exact => hi + (lo - hi).exp().ln_1p(),
            MaxStar::Table => {
                let d = hi - lo;
                if d >= TABLE_END {
                    return hi;
                }
                let pos = d / TABLE_STEP;
                let i = pos as usize;
                let frac = pos - i as f64;
                let right = if i + 1 < CORRECTION.len() {
                    CORRECTION[i + 1]
                } else {
                    0.0
                };
                hi + CORRECTION[i] + frac * (right - CORRECTION[i])
            }
        }
    }
}

/// Computes a posteriori LLRs of the `apriori.len()` information bits.
///
/// `systematic` and `parity` carry channel LLRs for the information steps
/// followed by `MEMORY` tail steps. During the tail only the terminating input
/// of each state is allowed.
pub fn posteriors(
    trellis: &Trellis,
    kernel: MaxStar,
    systematic: &[f64],
    parity: &[f64],
    apriori: &[f64],
    out: &mut [f64],
) {
    run(trellis, kernel, systematic, parity, apriori, out, None);
}

/// Per-step APP LLRs of the systematic and parity bits, tail included.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CodedApp {
    pub systematic: Vec<f64>,
    pub parity: Vec<f64>,
}

/// As [`posteriors`], additionally returning APPs of every coded bit.
pub fn posteriors_with_coded(
    trellis: &Trellis,
    kernel: MaxStar,
    systematic: &[f64],
    parity: &[f64],
    apriori: &[f64],
    out: &mut [f64],
) -> CodedApp {
    let steps = apriori.len() + MEMORY;
    let mut coded = CodedApp {
        systematic: vec![0.0; steps],
        parity: vec![0.0; steps],
    };
    run(
        trellis,
        kernel,
        systematic,
        parity,
        apriori,
        out,
        Some(&mut coded),
    );
    coded
}

fn run(
    trellis: &Trellis,
    kernel: MaxStar,
    systematic: &[f64],
    parity: &[f64],
    apriori: &[f64],
    out: &mut [f64],
    mut coded: Option<&mut CodedApp>,
) {
    let k = apriori.len();
    let steps = k + MEMORY;
    debug_assert_eq!(systematic.len(), steps);
    debug_assert_eq!(parity.len(), steps);

    // gamma[t][s][u], built lazily per step
    let branch = |t: usize, s: usize, u: usize| -> f64 {
        let su = if u == 1 { 0.5 } else { -0.5 };
        let sp = if trellis.parity[s][u] == 1 { 0.5 } else { -0.5 };
        let apr = if t < k { apriori[t] } else { 0.0 };
        su * (systematic[t] + apr) + sp * parity[t]
    };
    let allowed = |t: usize, s: usize, u: usize| t < k || usize::from(trellis.tail_input[s]) == u;

    let mut alpha = vec![[NEG_INF; NUM_STATES]; steps + 1];
    alpha[0][0] = 0.0;
    for t in 0..steps {
        let mut next = [NEG_INF; NUM_STATES];
        for s in 0..NUM_STATES {
            let a = alpha[t][s];
            if a == NEG_INF {
                continue;
            }
            for u in 0..2 {
                if !allowed(t, s, u) {
                    continue;
                }
                let ns = trellis.next[s][u] as usize;
                next[ns] = kernel.combine(next[ns], a + branch(t, s, u));
            }
        }
        let norm = next.iter().cloned().fold(NEG_INF, f64::max);
        next.iter_mut().for_each(|v| *v -= norm);
        alpha[t + 1] = next;
    }

    let mut beta = [NEG_INF; NUM_STATES];
    beta[0] = 0.0;
    for t in (0..steps).rev() {
        let mut prev = [NEG_INF; NUM_STATES];
        let mut one = NEG_INF;
        let mut zero = NEG_INF;
        let mut par_one = NEG_INF;
        let mut par_zero = NEG_INF;
        let want_coded = coded.is_some();
        for s in 0..NUM_STATES {
            for u in 0..2 {
                if !allowed(t, s, u) {
                    continue;
                }
                let ns = trellis.next[s][u] as usize;
                if beta[ns] == NEG_INF {
                    continue;
                }
                let g = branch(t, s, u) + beta[ns];
                prev[s] = kernel.combine(prev[s], g);
                if (t < k || want_coded) && alpha[t][s] != NEG_INF {
                    let m = alpha[t][s] + g;
                    if u == 1 {
                        one = kernel.combine(one, m);
                    } else {
                        zero = kernel.combine(zero, m);
                    }
                    if want_coded {
                        if trellis.parity[s][u] == 1 {
                            par_one = kernel.combine(par_one, m);
                        } else {
                            par_zero = kernel.combine(par_zero, m);
                        }
                    }
                }
            }
        }
        if t < k {
            out[t] = one - zero;
        }
        if let Some(c) = coded.as_deref_mut() {
            c.systematic[t] = one - zero;
            c.parity[t] = par_one - par_zero;
        }
        let norm = prev.iter().cloned().fold(NEG_INF, f64::max);
        prev.iter_mut().for_each(|v| *v -= norm);
        beta = prev;
    }
}
