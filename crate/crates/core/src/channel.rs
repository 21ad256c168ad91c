//! Path loss, Nakagami fading and normalized thermal noise.
//!
//! All powers are expressed relative to the transmit power, so a received
//! power is `|h|^2 * gain * path_loss(r)` and the noise term is the thermal
//! noise divided by `P_t`.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const REFERENCE_TEMPERATURE_K: f64 = 290.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Hz.
    pub carrier_frequency: f64,
    /// Hz.
    pub bandwidth: f64,
    /// Linear path-loss intercept `C`.
    pub intercept: f64,
    pub pathloss_exponent: f64,
    pub nakagami_m: f64,
    /// Watts.
    pub tx_power: f64,
    pub noise_figure_db: f64,
    /// Draw `|h|^2` from Gamma(m, rate = m) (unit mean) instead of
    /// Gamma(m, rate = 1).
    pub normalize_fading_power: bool,
}

impl Default for ChannelParams {
    fn default() -> Self {
        let f = 28e9;
        ChannelParams {
            carrier_frequency: f,
            bandwidth: 2.16e9,
            intercept: free_space_intercept(f),
            pathloss_exponent: 2.6,
            nakagami_m: 3.0,
            tx_power: 1.0,
            noise_figure_db: 9.0,
            normalize_fading_power: false,
        }
    }
}

impl ChannelParams {
    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.intercept > 0.0 && self.intercept <= 1.0) {
            errs.push(format!("channel.intercept must be in (0, 1], got {}", self.intercept));
        }
        if !(self.pathloss_exponent > 2.0) {
            errs.push(format!(
                "channel.pathloss_exponent must be > 2, got {}",
                self.pathloss_exponent
            ));
        }
        if !(self.nakagami_m >= 0.5) {
            errs.push(format!("channel.nakagami_m must be >= 0.5, got {}", self.nakagami_m));
        }
        if !(self.bandwidth > 0.0) {
            errs.push(format!("channel.bandwidth must be > 0, got {}", self.bandwidth));
        }
        if !(self.tx_power > 0.0) {
            errs.push(format!("channel.tx_power must be > 0, got {}", self.tx_power));
        }
        if !(self.carrier_frequency > 0.0) {
            errs.push(format!(
                "channel.carrier_frequency must be > 0, got {}",
                self.carrier_frequency
            ));
        }
        if !self.noise_figure_db.is_finite() {
            errs.push("channel.noise_figure_db must be finite".to_string());
        }
        errs
    }

    /// `min(1, C r^-alpha)`.
    pub fn path_loss(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(SimError::InvalidArgument(format!(
                "path loss needs a positive distance, got {r}"
            )));
        }
        Ok(self.path_loss_unchecked(r))
    }

    #[inline]
    pub(crate) fn path_loss_unchecked(&self, r: f64) -> f64 {
        (self.intercept * r.powf(-self.pathloss_exponent)).min(1.0)
    }

    /// Thermal noise over the bandwidth, normalized by the transmit power.
    pub fn normalized_noise(&self) -> f64 {
        BOLTZMANN
            * REFERENCE_TEMPERATURE_K
            * self.bandwidth
            * 10f64.powf(self.noise_figure_db / 10.0)
            / self.tx_power
    }

    pub fn fading(&self) -> Result<FadingSampler> {
        let rate = if self.normalize_fading_power {
            self.nakagami_m
        } else {
            1.0
        };
        FadingSampler::new(self.nakagami_m, rate)
    }
}

/// Free-space path gain at 1 m, `(c / (4 pi f))^2`.
pub fn free_space_intercept(carrier_frequency: f64) -> f64 {
    let k = SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * carrier_frequency);
    k * k
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Power gain `|h|^2` of a Nakagami-m channel: Gamma(shape = m, rate).
#[derive(Debug, Clone, Copy)]
pub struct FadingSampler {
    dist: Gamma<f64>,
}

impl FadingSampler {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape >= 0.5) {
            return Err(SimError::InvalidArgument(format!(
                "nakagami shape must be >= 0.5, got {shape}"
            )));
        }
        if !(rate > 0.0) {
            return Err(SimError::InvalidArgument(format!(
                "fading rate must be > 0, got {rate}"
            )));
        }
        let dist = Gamma::new(shape, 1.0 / rate)
            .map_err(|e| SimError::InvalidArgument(format!("gamma({shape}, {rate}): {e}")))?;
        Ok(FadingSampler { dist })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.dist.sample(rng)
    }
}

/// One draw from Gamma(shape = m, rate = 1).
pub fn sample_fading<R: Rng + ?Sized>(m: f64, rng: &mut R) -> Result<f64> {
    Ok(FadingSampler::new(m, 1.0)?.sample(rng))
}
