//! Detector-output record sets and the uncoded scenario generator used by the
//! offline analyses (random labels, no channel code).

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{self, ChannelKind, MismatchModel};
use crate::constellation::{Bit, BitChannelId, Constellation};
use crate::detector::{demap_block, Demapper, LlrRecord};
use crate::rng::{derive_seed, stream, stream_rng};
use crate::Result;

const BATCH_SYMBOLS: usize = 4096;

/// Records grouped contiguously by bit-channel position (and hence by class).
#[derive(Clone, Debug, Default)]
pub struct RecordSet {
    records: Vec<LlrRecord>,
    /// `(index, start, end)` per bit position present, ascending.
    channels: Vec<(u8, usize, usize)>,
}

impl RecordSet {
    pub fn new(mut records: Vec<LlrRecord>) -> Self {
        records.sort_by_key(|r| r.bit_channel.index);
        let mut channels: Vec<(u8, usize, usize)> = Vec::new();
        for (i, r) in records.iter().enumerate() {
            match channels.last_mut() {
                Some(last) if last.0 == r.bit_channel.index => last.2 = i + 1,
                _ => channels.push((r.bit_channel.index, i, i + 1)),
            }
        }
        Self { records, channels }
    }

    pub fn records(&self) -> &[LlrRecord] {
        &self.records
    }

    pub fn records_mut(&mut self) -> &mut [LlrRecord] {
        &mut self.records
    }

    pub fn into_records(self) -> Vec<LlrRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Bit positions present, ascending.
    pub fn channel_ids(&self) -> Vec<BitChannelId> {
        self.channels
            .iter()
            .map(|&(i, _, _)| BitChannelId::new(i as usize))
            .collect()
    }

    /// Classes present, ascending.
    pub fn classes(&self) -> Vec<u8> {
        let mut out: Vec<u8> = self.channels.iter().map(|&(i, _, _)| i / 2).collect();
        out.dedup();
        out
    }

    /// Records of one bit position.
    pub fn channel(&self, index: u8) -> &[LlrRecord] {
        self.channels
            .iter()
            .find(|&&(i, _, _)| i == index)
            .map_or(&[], |&(_, a, b)| &self.records[a..b])
    }

    /// Records of one I/Q-paired class (both positions).
    pub fn class(&self, class: u8) -> &[LlrRecord] {
        let mut span: Option<(usize, usize)> = None;
        for &(i, a, b) in &self.channels {
            if i / 2 == class {
                span = Some(span.map_or((a, b), |(s, _)| (s, b)));
            }
        }
        span.map_or(&[], |(a, b)| &self.records[a..b])
    }
}

/// An uncoded link: uniformly random labels through channel and demapper.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncodedScenario {
    pub order: usize,
    pub channel: ChannelKind,
    pub snr_db: f64,
    pub mismatch: MismatchModel,
    pub demapper: Demapper,
    pub symbols: usize,
    pub seed: u64,
}

impl UncodedScenario {
    /// Runs the scenario batch by batch, handing each batch's bits and LLRs
    /// (both `m` per symbol) to `f`. Batches are seeded independently so the
    /// output does not depend on thread count.
    pub fn for_each_batch<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize, &[Bit], &[f64]) -> T + Sync,
    {
        self.mismatch.validate()?;
        let c = Constellation::qam(self.order)?;
        let noise_variance = channel::snr_db_to_noise_variance(self.snr_db);
        let batches = self.symbols.div_ceil(BATCH_SYMBOLS);
        (0..batches)
            .into_par_iter()
            .map(|b| {
                let n = BATCH_SYMBOLS.min(self.symbols - b * BATCH_SYMBOLS);
                let m = c.bits_per_symbol();
                let mut rng = stream_rng(self.seed, &[stream::BITS, b as u64]);
                let bits: Vec<Bit> = (0..n * m).map(|_| rng.random_range(0..2u8)).collect();
                let symbols = c.map_stream(&bits)?;
                let link_seed = derive_seed(self.seed, &[b as u64]);
                let real = channel::transmit(&symbols, self.channel, noise_variance, link_seed)?;
                let (estimates, assumed) = channel::receiver_view(&real, &self.mismatch, link_seed);
                let llrs = demap_block(self.demapper, &real.received, &estimates, assumed, &c)?;
                Ok(f(b, &bits, &llrs))
            })
            .collect()
    }

    /// Generates genie-labeled records for every bit position.
    pub fn generate(&self) -> Result<RecordSet> {
        let m = Constellation::qam(self.order)?.bits_per_symbol();
        let per_batch = self.for_each_batch(|b, bits, llrs| {
            let mut buckets: Vec<Vec<LlrRecord>> = vec![Vec::with_capacity(bits.len() / m); m];
            for (pos, (&bit, &llr)) in bits.iter().zip(llrs).enumerate() {
                let i = pos % m;
                buckets[i].push(LlrRecord {
                    llr,
                    bit_channel: BitChannelId::new(i),
                    true_bit: Some(bit),
                    decided_bit: None,
                    frame: b as u32,
                    position: pos as u32,
                });
            }
            buckets
        })?;
        let mut records = Vec::with_capacity(self.symbols * m);
        for i in 0..m {
            for batch in &per_batch {
                records.extend_from_slice(&batch[i]);
            }
        }
        Ok(RecordSet::new(records))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario() -> UncodedScenario {
        UncodedScenario {
            order: 16,
            channel: ChannelKind::Rayleigh,
            snr_db: 8.0,
            mismatch: MismatchModel::PERFECT,
            demapper: Demapper::MaxLog,
            symbols: 10_000,
            seed: 5,
        }
    }

    #[test]
    fn grouping() {
        let set = scenario().generate().unwrap();
        assert_eq!(set.len(), 40_000);
        assert_eq!(set.classes(), vec![0, 1]);
        assert_eq!(set.channel_ids().len(), 4);
        assert_eq!(set.class(1).len(), 20_000);
        assert!(set.channel(3).iter().all(|r| r.bit_channel.index == 3));
        assert!(set.class(1).iter().all(|r| r.bit_channel.class == 1));
        assert!(set.channel(9).is_empty());
    }

    #[test]
    fn deterministic() {
        let a = scenario().generate().unwrap();
        let b = scenario().generate().unwrap();
        assert_eq!(a.records(), b.records());
    }
}
