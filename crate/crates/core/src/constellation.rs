//! Gray-labeled square QAM constellations.
//!
//! A square `M`-QAM symbol is the product of two `sqrt(M)`-PAM amplitudes. Each
//! PAM axis carries `m/2` bits with binary-reflected Gray labeling, the all-zero
//! label sitting at the most negative amplitude. Label bits alternate between
//! the axes: even positions drive the in-phase amplitude and odd positions the
//! quadrature one, so bit positions `2j` and `2j + 1` share the same PAM bit
//! level `j` and form one distinct bit-channel class.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A coded bit, always `0` or `1`.
pub type Bit = u8;

/// Maps a bit onto its bipolar value: `+1` for one, `-1` for zero.
#[inline]
pub fn bipolar(b: Bit) -> f64 {
    if b == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Identifies one of the `m` parallel binary-input channels of a constellation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BitChannelId {
    /// Label bit position in `0..m`.
    pub index: u8,
    /// I/Q-paired class in `0..m/2`; class 0 is the sign bit of each axis.
    pub class: u8,
}

impl BitChannelId {
    pub fn new(index: usize) -> Self {
        Self {
            index: index as u8,
            class: (index / 2) as u8,
        }
    }

    /// Axis carrying this bit: 0 for in-phase, 1 for quadrature.
    pub fn axis(self) -> usize {
        self.index as usize % 2
    }
}

/// Square QAM constellation with unit average energy.
#[derive(Clone, Debug)]
pub struct Constellation {
    order: usize,
    bits_per_symbol: usize,
    points: Vec<Complex64>,
    labels: Vec<u32>,
    point_of_label: Vec<usize>,
    pam_amplitudes: Vec<f64>,
    pam_labels: Vec<u32>,
}

impl Constellation {
    /// Builds unit-energy Gray-labeled square QAM of order 4, 16 or 64.
    pub fn qam(order: usize) -> Result<Self> {
        let bits_per_symbol = match order {
            4 => 2,
            16 => 4,
            64 => 6,
            _ => return Err(Error::UnsupportedOrder(order)),
        };
        let bits_per_axis = bits_per_symbol / 2;
        let side = 1usize << bits_per_axis;
        // Average energy of odd-integer square QAM is 2(M-1)/3.
        let scale = (1.5 / (order as f64 - 1.0)).sqrt();
        let pam_amplitudes: Vec<f64> = (0..side)
            .map(|k| (2.0 * k as f64 - (side as f64 - 1.0)) * scale)
            .collect();
        let pam_labels: Vec<u32> = (0..side as u32).map(|k| k ^ (k >> 1)).collect();

        let mut points = Vec::with_capacity(order);
        let mut labels = Vec::with_capacity(order);
        for qi in 0..side {
            for ii in 0..side {
                points.push(Complex64::new(pam_amplitudes[ii], pam_amplitudes[qi]));
                let mut label = 0u32;
                for level in 0..bits_per_axis {
                    let shift = bits_per_axis - 1 - level;
                    let ib = (pam_labels[ii] >> shift) & 1;
                    let qb = (pam_labels[qi] >> shift) & 1;
                    label |= ib << (2 * level);
                    label |= qb << (2 * level + 1);
                }
                labels.push(label);
            }
        }
        let mut point_of_label = vec![usize::MAX; order];
        for (p, &label) in labels.iter().enumerate() {
            point_of_label[label as usize] = p;
        }
        Ok(Self {
            order,
            bits_per_symbol,
            points,
            labels,
            point_of_label,
            pam_amplitudes,
            pam_labels,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of label bits `m = log2(M)`.
    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Number of distinct I/Q-paired bit-channel classes, `m/2`.
    pub fn num_classes(&self) -> usize {
        self.bits_per_symbol / 2
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Bit `i` of the label of point `p`.
    pub fn label_bit(&self, p: usize, i: usize) -> Bit {
        ((self.labels[p] >> i) & 1) as Bit
    }

    /// Label of point `p` as a bit vector of length `m`.
    pub fn label(&self, p: usize) -> Vec<Bit> {
        (0..self.bits_per_symbol)
            .map(|i| self.label_bit(p, i))
            .collect()
    }

    /// Maps `m` label bits onto their constellation point.
    pub fn map_bits(&self, bits: &[Bit]) -> Result<Complex64> {
        if bits.len() != self.bits_per_symbol {
            return Err(Error::LengthMismatch {
                expected: self.bits_per_symbol,
                actual: bits.len(),
            });
        }
        let label = bits
            .iter()
            .enumerate()
            .fold(0u32, |acc, (i, &b)| acc | (u32::from(b & 1) << i));
        Ok(self.points[self.point_of_label[label as usize]])
    }

    /// Maps a bit stream whose length is a multiple of `m` onto symbols.
    pub fn map_stream(&self, bits: &[Bit]) -> Result<Vec<Complex64>> {
        if bits.len() % self.bits_per_symbol != 0 {
            return Err(Error::LengthMismatch {
                expected: bits.len().next_multiple_of(self.bits_per_symbol),
                actual: bits.len(),
            });
        }
        bits.chunks_exact(self.bits_per_symbol)
            .map(|chunk| self.map_bits(chunk))
            .collect()
    }

    /// Points whose label carries bit `b` at position `channel.index`.
    pub fn subset(&self, channel: BitChannelId, b: Bit) -> Vec<Complex64> {
        (0..self.order)
            .filter(|&p| self.label_bit(p, channel.index as usize) == b)
            .map(|p| self.points[p])
            .collect()
    }

    /// Per-axis PAM amplitudes, ascending.
    pub fn pam_amplitudes(&self) -> &[f64] {
        &self.pam_amplitudes
    }

    /// Gray bit at `level` (0 = most significant, the sign bit) of PAM amplitude `k`.
    pub fn pam_bit(&self, k: usize, level: usize) -> Bit {
        let bits_per_axis = self.bits_per_symbol / 2;
        ((self.pam_labels[k] >> (bits_per_axis - 1 - level)) & 1) as Bit
    }

    pub fn bit_channels(&self) -> impl Iterator<Item = BitChannelId> {
        (0..self.bits_per_symbol).map(BitChannelId::new)
    }
}
