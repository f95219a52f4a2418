//! Memoryless channels and the receiver-side mismatch model.
//!
//! `y_n = h_n x_n + w_n`, with `w_n` circular complex Gaussian of total variance
//! `sigma^2`. AWGN uses `h_n = 1`; fast Rayleigh draws `h_n` i.i.d. complex
//! Gaussian with `E|h|^2 = 1` (perfect interleaving, no Doppler model).

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::{stream, stream_rng};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Awgn,
    Rayleigh,
}

/// One channel use per transmitted symbol.
#[derive(Clone, Debug)]
pub struct ChannelRealization {
    pub gains: Vec<Complex64>,
    /// Total complex noise variance (both dimensions).
    pub noise_variance: f64,
    pub received: Vec<Complex64>,
}

/// Receiver imperfections. The receiver uses `rho * sigma^2` as its noise
/// variance and `h + e` as its channel estimate, `e` complex Gaussian with
/// variance `csi_error_variance`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MismatchModel {
    pub noise_variance_bias: f64,
    pub csi_error_variance: f64,
}

impl Default for MismatchModel {
    fn default() -> Self {
        Self::PERFECT
    }
}

impl MismatchModel {
    pub const PERFECT: Self = Self {
        noise_variance_bias: 1.0,
        csi_error_variance: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_variance_bias > 0.0) || !self.noise_variance_bias.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise_variance_bias must be positive, got {}",
                self.noise_variance_bias
            )));
        }
        if !(self.csi_error_variance >= 0.0) || !self.csi_error_variance.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "csi_error_variance must be non-negative, got {}",
                self.csi_error_variance
            )));
        }
        Ok(())
    }
}

/// Draws a circular complex Gaussian sample with the given total variance.
#[inline]
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let sd = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(sd * re, sd * im)
}

/// Noise variance for a given SNR (dB) under unit symbol energy.
pub fn snr_db_to_noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

pub fn noise_variance_to_snr_db(noise_variance: f64) -> f64 {
    -10.0 * noise_variance.log10()
}

/// Passes `symbols` through the channel. Deterministic given `seed`.
pub fn transmit(
    symbols: &[Complex64],
    kind: ChannelKind,
    noise_variance: f64,
    seed: u64,
) -> Result<ChannelRealization> {
    if !(noise_variance > 0.0) {
        return Err(Error::NonPositiveNoiseVariance(noise_variance));
    }
    let gains: Vec<Complex64> = match kind {
        ChannelKind::Awgn => vec![Complex64::new(1.0, 0.0); symbols.len()],
        ChannelKind::Rayleigh => {
            let mut rng = stream_rng(seed, &[stream::FADING]);
            (0..symbols.len())
                .map(|_| complex_gaussian(&mut rng, 1.0))
                .collect()
        }
    };
    let mut rng = stream_rng(seed, &[stream::NOISE]);
    let received = symbols
        .iter()
        .zip(&gains)
        .map(|(x, h)| h * x + complex_gaussian(&mut rng, noise_variance))
        .collect();
    Ok(ChannelRealization {
        gains,
        noise_variance,
        received,
    })
}

/// Channel estimate and noise variance as seen by a mismatched receiver.
pub fn receiver_view(
    realization: &ChannelRealization,
    mismatch: &MismatchModel,
    seed: u64,
) -> (Vec<Complex64>, f64) {
    let estimate = if mismatch.csi_error_variance > 0.0 {
        let mut rng = stream_rng(seed, &[stream::CSI_ERROR]);
        realization
            .gains
            .iter()
            .map(|h| h + complex_gaussian(&mut rng, mismatch.csi_error_variance))
            .collect()
    } else {
        realization.gains.clone()
    };
    (
        estimate,
        mismatch.noise_variance_bias * realization.noise_variance,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(n: usize) -> Vec<Complex64> {
        vec![Complex64::new(0.6, -0.8); n]
    }

    #[test]
    fn rejects_non_positive_noise() {
        assert!(transmit(&ones(4), ChannelKind::Awgn, 0.0, 1).is_err());
        assert!(transmit(&ones(4), ChannelKind::Awgn, -1.0, 1).is_err());
    }

    #[test]
    fn noiseless_limit() {
        let x = ones(1000);
        let r = transmit(&x, ChannelKind::Rayleigh, 1e-12, 3).unwrap();
        for ((y, h), x) in r.received.iter().zip(&r.gains).zip(&x) {
            assert!((y - h * x).norm() < 1e-4);
        }
    }

    #[test]
    fn awgn_noise_variance() {
        let x = ones(1_000_000);
        let r = transmit(&x, ChannelKind::Awgn, 0.3, 11).unwrap();
        let v: f64 = r
            .received
            .iter()
            .zip(&x)
            .map(|(y, x)| (y - x).norm_sqr())
            .sum::<f64>()
            / x.len() as f64;
        assert!((v / 0.3 - 1.0).abs() < 0.01, "{v}");
    }

    #[test]
    fn rayleigh_unit_power() {
        let r = transmit(&ones(1_000_000), ChannelKind::Rayleigh, 0.1, 12).unwrap();
        let p: f64 = r.gains.iter().map(|h| h.norm_sqr()).sum::<f64>() / r.gains.len() as f64;
        assert!((p - 1.0).abs() < 0.01, "{p}");
    }

    #[test]
    fn same_seed_same_realization() {
        let a = transmit(&ones(500), ChannelKind::Rayleigh, 0.5, 99).unwrap();
        let b = transmit(&ones(500), ChannelKind::Rayleigh, 0.5, 99).unwrap();
        assert_eq!(a.received, b.received);
        assert_eq!(a.gains, b.gains);
        let c = transmit(&ones(500), ChannelKind::Rayleigh, 0.5, 100).unwrap();
        assert_ne!(a.received, c.received);
    }

    #[test]
    fn receiver_view_identity_and_bias() {
        let r = transmit(&ones(100), ChannelKind::Rayleigh, 0.2, 5).unwrap();
        let (h, v) = receiver_view(&r, &MismatchModel::PERFECT, 1);
        assert_eq!(h, r.gains);
        assert_eq!(v, 0.2);
        let mm = MismatchModel {
            noise_variance_bias: 2.0,
            csi_error_variance: 0.0,
        };
        assert_eq!(receiver_view(&r, &mm, 1).1, 0.4);
    }

    #[test]
    fn csi_error_variance() {
        let r = transmit(&ones(1_000_000), ChannelKind::Rayleigh, 0.2, 5).unwrap();
        let mm = MismatchModel {
            noise_variance_bias: 1.0,
            csi_error_variance: 0.01,
        };
        let (h, _) = receiver_view(&r, &mm, 17);
        let e: f64 = h
            .iter()
            .zip(&r.gains)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / h.len() as f64;
        assert!((e / 0.01 - 1.0).abs() < 0.05, "{e}");
    }

    #[test]
    fn snr_round_trip() {
        for snr in [-20.0, -3.5, 0.0, 7.0, 13.25, 30.0] {
            let back = noise_variance_to_snr_db(snr_db_to_noise_variance(snr));
            assert!((back - snr).abs() < 1e-12);
        }
        assert!((snr_db_to_noise_variance(10.0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn mismatch_validation() {
        assert!(MismatchModel::PERFECT.validate().is_ok());
        let bad = MismatchModel {
            noise_variance_bias: 0.0,
            csi_error_variance: 0.0,
        };
        assert!(bad.validate().is_err());
    }
}
