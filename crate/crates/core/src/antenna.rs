//! Two-level sectored antenna pattern.
//!
//! The azimuth plane is split into `R = 2 pi / psi` equal sectors. Sector `k`
//! is centered on bearing `offset + k psi` and covers the half-open interval
//! `[offset + (k - 1/2) psi, offset + (k + 1/2) psi)`. A peer inside the
//! steered sector sees the main-lobe gain, everything else the side-lobe gain.
//! Bearings are measured counter-clockwise from East.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::road::{RoadConfig, Vehicle};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaConfig {
    pub num_sectors: u32,
    pub main_gain: f64,
    pub side_gain: f64,
    /// Bearing of the center of sector 0, radians.
    pub boresight_offset: f64,
}

impl AntennaConfig {
    /// Pattern with unit average gain over azimuth. `sidelobe_db` is the
    /// side-lobe level below the main lobe; `None` means no side lobe.
    pub fn normalized(num_sectors: u32, sidelobe_db: Option<f64>) -> Result<Self> {
        if num_sectors == 0 {
            return Err(SimError::InvalidConfig("num_sectors must be >= 1".into()));
        }
        let psi = TAU / num_sectors as f64;
        let ratio = match sidelobe_db {
            None => 0.0,
            Some(db) if db >= 0.0 => 10f64.powf(-db / 10.0),
            Some(db) => {
                return Err(SimError::InvalidConfig(format!(
                    "sidelobe suppression must be >= 0 dB, got {db}"
                )))
            }
        };
        let main_gain = TAU / (psi + ratio * (TAU - psi));
        Ok(AntennaConfig {
            num_sectors,
            main_gain,
            side_gain: ratio * main_gain,
            boresight_offset: 0.0,
        })
    }

    pub fn explicit(num_sectors: u32, main_gain: f64, side_gain: f64) -> Result<Self> {
        let cfg = AntennaConfig {
            num_sectors,
            main_gain,
            side_gain,
            boresight_offset: 0.0,
        };
        let errs = cfg.violations();
        if errs.is_empty() {
            Ok(cfg)
        } else {
            Err(SimError::InvalidConfig(errs.join("; ")))
        }
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.boresight_offset = offset;
        self
    }

    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.num_sectors == 0 {
            errs.push("antenna.num_sectors must be >= 1".to_string());
        }
        if !(self.side_gain >= 0.0 && self.main_gain >= self.side_gain) {
            errs.push(format!(
                "antenna gains must satisfy main >= side >= 0, got {} and {}",
                self.main_gain, self.side_gain
            ));
        }
        errs
    }

    /// Main-lobe width `psi` in radians.
    pub fn beamwidth(&self) -> f64 {
        TAU / self.num_sectors as f64
    }

    pub fn beamwidth_deg(&self) -> f64 {
        360.0 / self.num_sectors as f64
    }

    /// Mean gain over a uniformly random bearing.
    pub fn average_gain(&self) -> f64 {
        let psi = self.beamwidth();
        (self.main_gain * psi + self.side_gain * (TAU - psi)) / TAU
    }

    /// Sector containing `bearing` (any real angle, radians).
    pub fn sector_of(&self, bearing: f64) -> u32 {
        let psi = self.beamwidth();
        let shifted = (bearing - self.boresight_offset + psi / 2.0).rem_euclid(TAU);
        ((shifted / psi).floor() as u32).min(self.num_sectors - 1)
    }

    pub fn sector_gain(&self, boresight: u32, bearing: f64) -> f64 {
        if self.sector_of(bearing) == boresight {
            self.main_gain
        } else {
            self.side_gain
        }
    }

    /// Product of transmit and receive gains for a link whose receiver sits
    /// at `(dx, dy)` relative to the transmitter.
    #[inline]
    pub fn link_gain(&self, tx_boresight: u32, rx_boresight: u32, dx: f64, dy: f64) -> f64 {
        let tx_to_rx = dy.atan2(dx);
        let rx_to_tx = if tx_to_rx > 0.0 {
            tx_to_rx - PI
        } else {
            tx_to_rx + PI
        };
        self.sector_gain(tx_boresight, tx_to_rx) * self.sector_gain(rx_boresight, rx_to_tx)
    }
}

/// Number of sectors for a beamwidth in degrees, if it divides 360 exactly.
pub fn sectors_for_beamwidth_deg(psi_deg: f64) -> Result<u32> {
    if !(psi_deg > 0.0 && psi_deg <= 360.0) {
        return Err(SimError::InvalidConfig(format!(
            "beamwidth must be in (0, 360] degrees, got {psi_deg}"
        )));
    }
    let r = (360.0 / psi_deg).round();
    if (r * psi_deg - 360.0).abs() > 1e-9 {
        return Err(SimError::InvalidConfig(format!(
            "beamwidth {psi_deg} deg does not divide 360 deg"
        )));
    }
    Ok(r as u32)
}

/// Combined TX/RX gain between two cars, using their steered sectors and the
/// short-arc displacement on the ring.
pub fn combined_gain(tx: &Vehicle, rx: &Vehicle, road: &RoadConfig, cfg: &AntennaConfig) -> Result<f64> {
    let (Some(tb), Some(rb)) = (tx.boresight, rx.boresight) else {
        return Err(SimError::InvalidArgument(
            "antenna gain is only defined between cars".into(),
        ));
    };
    let dx = road.ring_offset(tx.position, rx.position);
    let dy = road.lane_center(rx.lane) - road.lane_center(tx.lane);
    if dx == 0.0 && dy == 0.0 {
        return Err(SimError::InvalidArgument(format!(
            "vehicles {:?} and {:?} share a position",
            tx.id, rx.id
        )));
    }
    Ok(cfg.link_gain(tb, rb, dx, dy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::road::{Mode, VehicleId, VehicleKind};

    fn car(id: u32, lane: usize, x: f64, sector: u32) -> Vehicle {
        Vehicle {
            id: VehicleId(id),
            lane,
            position: x,
            kind: VehicleKind::Car,
            mode: Mode::Tx,
            boresight: Some(sector),
        }
    }

    #[test]
    fn ninety_degrees_gives_four_sectors() {
        assert_eq!(sectors_for_beamwidth_deg(90.0).unwrap(), 4);
        assert_eq!(sectors_for_beamwidth_deg(45.0).unwrap(), 8);
        assert!(sectors_for_beamwidth_deg(50.0).is_err());
        assert!(sectors_for_beamwidth_deg(0.0).is_err());
    }

    #[test]
    fn zero_sidelobe_main_gain() {
        let a = AntennaConfig::normalized(8, None).unwrap();
        assert!((a.main_gain - 8.0).abs() < 1e-12);
        assert_eq!(a.side_gain, 0.0);
        assert!((10.0 * a.main_gain.log10() - 9.03).abs() < 0.01);
    }

    #[test]
    fn unit_average_gain() {
        for r in [1, 2, 3, 4, 6, 8, 12, 36] {
            for sl in [None, Some(0.0), Some(10.0), Some(20.0)] {
                let a = AntennaConfig::normalized(r, sl).unwrap();
                assert!((a.average_gain() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn narrower_beam_has_more_gain() {
        let mut last = 0.0;
        for r in [2, 4, 8, 16] {
            let g = AntennaConfig::normalized(r, Some(20.0)).unwrap().main_gain;
            assert!(g > last);
            last = g;
        }
    }

    #[test]
    fn boresight_center_is_main_lobe() {
        for r in [1, 4, 8, 12] {
            let a = AntennaConfig::normalized(r, Some(20.0)).unwrap();
            for k in 0..r {
                let center = k as f64 * a.beamwidth();
                assert_eq!(a.sector_gain(k, center), a.main_gain);
            }
        }
    }

    #[test]
    fn sector_edges_are_half_open() {
        let a = AntennaConfig::normalized(4, None).unwrap();
        let q = PI / 4.0;
        assert_eq!(a.sector_of(q - 1e-12), 0);
        assert_eq!(a.sector_of(q + 1e-12), 1);
        assert_eq!(a.sector_of(-q + 1e-12), 0);
        assert_eq!(a.sector_of(-q - 1e-12), 3);
        assert_eq!(a.sector_of(PI), 2);
        assert_eq!(a.sector_of(-PI), 2);
    }

    #[test]
    fn head_on_alignment() {
        let a = AntennaConfig::normalized(8, None).unwrap();
        let road = RoadConfig::default();
        // tx faces East (sector 0), rx 50 m East faces West (sector 4)
        let tx = car(0, 2, 100.0, 0);
        let rx = car(1, 2, 150.0, 4);
        assert!((combined_gain(&tx, &rx, &road, &a).unwrap() - 64.0).abs() < 1e-9);
        let away = car(1, 2, 150.0, 0);
        assert_eq!(combined_gain(&tx, &away, &road, &a).unwrap(), 0.0);
    }

    #[test]
    fn gain_is_symmetric_in_roles() {
        let a = AntennaConfig::normalized(8, Some(20.0)).unwrap();
        let road = RoadConfig::default();
        let p = car(0, 1, 10.0, 1);
        let q = car(1, 4, 27.0, 5);
        let pq = combined_gain(&p, &q, &road, &a).unwrap();
        let qp = combined_gain(&q, &p, &road, &a).unwrap();
        assert_eq!(pq, qp);
    }

    #[test]
    fn coincident_and_truck_rejected() {
        let a = AntennaConfig::normalized(4, None).unwrap();
        let road = RoadConfig::default();
        let p = car(0, 2, 10.0, 0);
        assert!(combined_gain(&p, &p.clone(), &road, &a).is_err());
        let mut t = car(1, 3, 30.0, 0);
        t.kind = VehicleKind::Truck;
        t.boresight = None;
        assert!(combined_gain(&p, &t, &road, &a).is_err());
    }

    #[test]
    fn gain_across_ring_seam() {
        let a = AntennaConfig::normalized(8, None).unwrap();
        let road = RoadConfig::default();
        // rx at 10 m is 20 m East of tx at 19 990 m through the seam
        let tx = car(0, 2, 19_990.0, 0);
        let rx = car(1, 2, 10.0, 4);
        assert!((combined_gain(&tx, &rx, &road, &a).unwrap() - 64.0).abs() < 1e-9);
    }

    #[test]
    fn explicit_gain_ordering_checked() {
        assert!(AntennaConfig::explicit(4, 1.0, 2.0).is_err());
        assert!(AntennaConfig::explicit(4, 2.0, 0.5).is_ok());
    }
}
