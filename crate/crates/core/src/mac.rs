//! Slotted MAC: cluster detection and subslot assignment.
//!
//! At the start of a slot the tagged receiver detects every transmitting car
//! whose received power reaches the detection threshold. Those cars form the
//! transmitting cluster and each is given its own subslot; every other
//! transmitter interferes for the whole slot.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::antenna::AntennaConfig;
use crate::blockage::LosIndex;
use crate::channel::{ChannelParams, FadingSampler};
use crate::error::{Result, SimError};
use crate::metrics::LinkSample;
use crate::road::{Mode, Snapshot, Vehicle, VehicleId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacConfig {
    /// Seconds.
    pub slot_duration: f64,
    pub num_subslots: usize,
    /// Meters; an aligned LOS link at this range is exactly at threshold.
    pub coverage_design_range: f64,
    /// Explicit threshold overriding the one derived from the design range.
    pub detection_threshold: Option<f64>,
    pub fading_in_detection: bool,
}

impl Default for MacConfig {
    fn default() -> Self {
        MacConfig {
            slot_duration: 10e-3,
            num_subslots: 32,
            coverage_design_range: 100.0,
            detection_threshold: None,
            fading_in_detection: false,
        }
    }
}

impl MacConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.num_subslots < 1 {
            errs.push("mac.num_subslots must be >= 1".to_string());
        }
        if !(self.slot_duration > 0.0) {
            errs.push(format!("mac.slot_duration must be > 0, got {}", self.slot_duration));
        }
        if !(self.coverage_design_range > 0.0) {
            errs.push(format!(
                "mac.coverage_design_range must be > 0, got {}",
                self.coverage_design_range
            ));
        }
        if let Some(t) = self.detection_threshold {
            if !(t > 0.0) {
                errs.push(format!("mac.detection_threshold must be > 0, got {t}"));
            }
        }
        errs
    }

    pub fn subslot_duration(&self) -> f64 {
        self.slot_duration / self.num_subslots as f64
    }

    pub fn threshold(&self, channel: &ChannelParams, antenna: &AntennaConfig) -> Result<f64> {
        match self.detection_threshold {
            Some(t) => Ok(t),
            None => derive_threshold(self.coverage_design_range, channel, antenna),
        }
    }
}

/// Mean power of a perfectly aligned LOS link at `range`, relative to `P_t`.
pub fn derive_threshold(range: f64, channel: &ChannelParams, antenna: &AntennaConfig) -> Result<f64> {
    Ok(antenna.main_gain * antenna.main_gain * channel.path_loss(range)?)
}

/// Geometry and mean power of the link from one transmitter to the receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub id: VehicleId,
    pub distance: f64,
    pub gain: f64,
    pub los: bool,
    /// `gain * path_loss(distance)` if LOS, else zero.
    pub mean_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterMember {
    pub link: Link,
    pub subslot: usize,
    pub detection_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub receiver: VehicleId,
    /// Ordered by decreasing detection power; subslots follow that order.
    pub members: Vec<ClusterMember>,
    /// Every transmitter outside the cluster, LOS or not.
    pub interferers: Vec<Link>,
    /// Detected transmitters dropped because the cluster exceeded `S`.
    pub truncated: usize,
    /// Per-member SINR, filled in by evaluation.
    pub samples: Vec<LinkSample>,
    pub best: Option<VehicleId>,
    pub worst: Option<VehicleId>,
}

impl ClusterResult {
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn interferer_ids(&self) -> impl Iterator<Item = VehicleId> + '_ {
        self.interferers.iter().map(|l| l.id)
    }

    pub fn member_ids(&self) -> impl Iterator<Item = VehicleId> + '_ {
        self.members.iter().map(|m| m.link.id)
    }

    pub fn sample(&self, id: VehicleId) -> Option<&LinkSample> {
        self.samples.iter().find(|s| s.member == id)
    }

    pub fn best_sinr(&self) -> Option<f64> {
        self.best.and_then(|id| self.sample(id)).map(|s| s.sinr)
    }

    pub fn worst_sinr(&self) -> Option<f64> {
        self.worst.and_then(|id| self.sample(id)).map(|s| s.sinr)
    }
}

/// Options for link evaluation that are not part of the MAC itself.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LinkOptions {
    pub cars_block: bool,
}

/// Link budget from every transmitting car to `receiver`, in snapshot order.
pub fn transmitter_links(
    receiver: &Vehicle,
    snapshot: &Snapshot,
    channel: &ChannelParams,
    antenna: &AntennaConfig,
    opts: LinkOptions,
) -> Result<Vec<Link>> {
    let Some(rx_sector) = receiver.boresight.filter(|_| receiver.mode == Mode::Rx) else {
        return Err(SimError::InvalidArgument(format!(
            "{:?} is not a receiving car",
            receiver.id
        )));
    };
    let road = &snapshot.road;
    let los = LosIndex::new(snapshot, receiver, opts.cars_block);
    let rx_y = road.lane_center(receiver.lane);
    let mut out = Vec::new();
    for v in &snapshot.vehicles {
        if v.mode != Mode::Tx || v.id == receiver.id {
            continue;
        }
        let tx_sector = v.boresight.expect("transmitters are cars");
        // receiver relative to transmitter
        let dx = road.ring_offset(v.position, receiver.position);
        let dy = rx_y - road.lane_center(v.lane);
        let distance = dx.hypot(dy);
        if distance == 0.0 {
            return Err(SimError::Inconsistent(format!(
                "{:?} and {:?} share a position",
                v.id, receiver.id
            )));
        }
        let gain = antenna.link_gain(tx_sector, rx_sector, dx, dy);
        let los = los.is_los_to(
            v.id,
            road.ring_offset(receiver.position, v.position),
            road.lane_center(v.lane),
        );
        let mean_power = if los && gain > 0.0 {
            gain * channel.path_loss_unchecked(distance)
        } else {
            0.0
        };
        out.push(Link {
            id: v.id,
            distance,
            gain,
            los,
            mean_power,
        });
    }
    Ok(out)
}

/// Splits transmitters into the detected cluster and interferers. With
/// `detection_fading` set, each detection uses one extra fading draw.
pub fn partition_cluster<R: Rng + ?Sized>(
    receiver: VehicleId,
    links: Vec<Link>,
    threshold: f64,
    num_subslots: usize,
    mut detection_fading: Option<(&FadingSampler, &mut R)>,
) -> ClusterResult {
    let mut detected = Vec::new();
    let mut interferers = Vec::new();
    for link in links {
        let power = match detection_fading.as_mut() {
            Some((f, rng)) if link.los => link.mean_power * f.sample(*rng),
            _ => link.mean_power,
        };
        if link.los && power > 0.0 && power >= threshold {
            detected.push((link, power));
        } else {
            interferers.push(link);
        }
    }
    detected.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.id.cmp(&b.0.id)));
    let truncated = detected.len().saturating_sub(num_subslots);
    for (link, _) in detected.drain(num_subslots.min(detected.len())..) {
        interferers.push(link);
    }
    interferers.sort_by_key(|l| l.id);
    let members = detected
        .into_iter()
        .enumerate()
        .map(|(subslot, (link, detection_power))| ClusterMember {
            link,
            subslot,
            detection_power,
        })
        .collect();
    ClusterResult {
        receiver,
        members,
        interferers,
        truncated,
        samples: Vec::new(),
        best: None,
        worst: None,
    }
}

/// Detects the transmitting cluster of `receiver` in `snapshot`.
#[allow(clippy::too_many_arguments)]
pub fn form_cluster<R: Rng + ?Sized>(
    receiver: &Vehicle,
    snapshot: &Snapshot,
    mac: &MacConfig,
    channel: &ChannelParams,
    antenna: &AntennaConfig,
    opts: LinkOptions,
    detection_rng: &mut R,
) -> Result<ClusterResult> {
    let threshold = mac.threshold(channel, antenna)?;
    let links = transmitter_links(receiver, snapshot, channel, antenna, opts)?;
    let sampler;
    let fading = if mac.fading_in_detection {
        sampler = channel.fading()?;
        Some((&sampler, detection_rng))
    } else {
        None
    };
    Ok(partition_cluster(receiver.id, links, threshold, mac.num_subslots, fading))
}
