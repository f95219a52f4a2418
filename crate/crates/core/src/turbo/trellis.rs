//! 8-state recursive systematic convolutional code, generators (13, 15) octal.
//!
//! Feedback `1 + D^2 + D^3`, feedforward `1 + D + D^3`. The state holds the
//! last three feedback-register values `(r1, r2, r3)` packed as `r1 r2 r3`.

use crate::constellation::Bit;

pub const NUM_STATES: usize = 8;
pub const MEMORY: usize = 3;

#[derive(Clone, Debug)]
pub struct Trellis {
    /// `next[s][u]`
    pub next: [[u8; 2]; NUM_STATES],
    /// `parity[s][u]`
    pub parity: [[Bit; 2]; NUM_STATES],
    /// Input that drives the feedback register to zero, used for termination.
    pub tail_input: [Bit; NUM_STATES],
}

impl Trellis {
    pub fn rsc_13_15() -> Self {
        let mut next = [[0u8; 2]; NUM_STATES];
        let mut parity = [[0u8; 2]; NUM_STATES];
        let mut tail_input = [0u8; NUM_STATES];
        for s in 0..NUM_STATES {
            let r1 = (s >> 2) & 1;
            let r2 = (s >> 1) & 1;
            let r3 = s & 1;
            for u in 0..2 {
                let a = u ^ r2 ^ r3;
                parity[s][u] = (a ^ r1 ^ r3) as Bit;
                next[s][u] = ((a << 2) | (r1 << 1) | r2) as u8;
            }
            tail_input[s] = (r2 ^ r3) as Bit;
        }
        Self {
            next,
            parity,
            tail_input,
        }
    }

    /// Encodes `input` from the zero state and terminates.
    ///
    /// Returns `(parity, tail)` where `tail` holds `MEMORY` pairs of
    /// (systematic, parity) bits in transmission order.
    pub fn encode(&self, input: &[Bit]) -> (Vec<Bit>, [Bit; 2 * MEMORY]) {
        let mut state = 0usize;
        let mut parity = Vec::with_capacity(input.len());
        for &u in input {
            let u = usize::from(u & 1);
            parity.push(self.parity[state][u]);
            state = self.next[state][u] as usize;
        }
        let mut tail = [0u8; 2 * MEMORY];
        for t in 0..MEMORY {
            let u = self.tail_input[state];
            tail[2 * t] = u;
            tail[2 * t + 1] = self.parity[state][usize::from(u)];
            state = self.next[state][usize::from(u)] as usize;
        }
        debug_assert_eq!(state, 0);
        (parity, tail)
    }
}
