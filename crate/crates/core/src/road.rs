//! Highway layout and vehicle placement.
//!
//! Each lane carries a homogeneous Poisson process of vehicles. Every
//! vehicle is independently a truck with the lane's truck probability; cars
//! are further marked with a radio mode and a boresight sector. Overlapping
//! footprints produced by the Poisson draw are pushed apart front-to-back so
//! a snapshot is always physically valid.
//!
//! The section is treated as a ring of circumference `road_length`.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::geometry::{Point, Rect};
use crate::rng::{substream, Substream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Footprint {
    pub length: f64,
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VehicleKind {
    Car,
    Truck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    EastToWest,
    WestToEast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadConfig {
    pub road_length: f64,
    pub num_lanes: usize,
    pub lane_width: f64,
    /// Vehicles per meter, one entry per lane.
    pub lane_intensities: Vec<f64>,
    /// Probability that a vehicle in the lane is a truck.
    pub truck_fractions: Vec<f64>,
    pub car: Footprint,
    pub truck: Footprint,
    /// Minimum bumper-to-bumper distance enforced between same-lane vehicles.
    pub min_gap: f64,
}

impl Default for RoadConfig {
    fn default() -> Self {
        RoadConfig {
            road_length: 20_000.0,
            num_lanes: 4,
            lane_width: 3.7,
            lane_intensities: vec![6e-2; 4],
            truck_fractions: vec![0.1, 0.05, 0.05, 0.1],
            car: Footprint {
                length: 4.0,
                width: 2.52,
            },
            truck: Footprint {
                length: 11.2,
                width: 2.52,
            },
            min_gap: 1.0,
        }
    }
}

impl RoadConfig {
    /// Every violated invariant, in field order.
    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.road_length > 0.0) {
            errs.push(format!("road.road_length must be > 0, got {}", self.road_length));
        }
        if self.num_lanes == 0 || self.num_lanes % 2 != 0 {
            errs.push(format!(
                "road.num_lanes must be a positive even number, got {}",
                self.num_lanes
            ));
        }
        if !(self.lane_width > 0.0) {
            errs.push(format!("road.lane_width must be > 0, got {}", self.lane_width));
        }
        if self.lane_intensities.len() != self.num_lanes {
            errs.push(format!(
                "road.lane_intensities has {} entries but num_lanes is {}",
                self.lane_intensities.len(),
                self.num_lanes
            ));
        }
        if self.truck_fractions.len() != self.num_lanes {
            errs.push(format!(
                "road.truck_fractions has {} entries but num_lanes is {}",
                self.truck_fractions.len(),
                self.num_lanes
            ));
        }
        for (i, &l) in self.lane_intensities.iter().enumerate() {
            if !(l > 0.0) {
                errs.push(format!("road.lane_intensities[{i}] must be > 0, got {l}"));
            }
        }
        for (i, &e) in self.truck_fractions.iter().enumerate() {
            if !(0.0..=1.0).contains(&e) {
                errs.push(format!("road.truck_fractions[{i}] must be in [0, 1], got {e}"));
            }
        }
        for (name, fp) in [("car", self.car), ("truck", self.truck)] {
            if !(fp.length > 0.0 && fp.width > 0.0) {
                errs.push(format!("road.{name} footprint must have positive length and width"));
            }
            if fp.width > self.lane_width {
                errs.push(format!("road.{name} width {} exceeds lane width", fp.width));
            }
        }
        if !(self.min_gap >= 0.0) {
            errs.push(format!("road.min_gap must be >= 0, got {}", self.min_gap));
        }
        errs
    }

    pub fn validate(&self) -> Result<()> {
        let errs = self.violations();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(SimError::InvalidConfig(errs.join("; ")))
        }
    }

    pub fn footprint_of(&self, kind: VehicleKind) -> Footprint {
        match kind {
            VehicleKind::Car => self.car,
            VehicleKind::Truck => self.truck,
        }
    }

    /// Lateral coordinate of a lane's centerline (lanes are 1-based).
    pub fn lane_center(&self, lane: usize) -> f64 {
        (lane as f64 - 0.5) * self.lane_width
    }

    pub fn direction(&self, lane: usize) -> Direction {
        if lane <= self.num_lanes / 2 {
            Direction::EastToWest
        } else {
            Direction::WestToEast
        }
    }

    /// Signed shortest displacement from `from` to `to` along the ring, in
    /// `(-L/2, L/2]`.
    pub fn ring_offset(&self, from: f64, to: f64) -> f64 {
        let l = self.road_length;
        let mut d = (to - from).rem_euclid(l);
        if d > l / 2.0 {
            d -= l;
        }
        d
    }

    /// Same road with every lane set to intensity `lambda`.
    pub fn with_uniform_intensity(&self, lambda: f64) -> RoadConfig {
        RoadConfig {
            lane_intensities: vec![lambda; self.num_lanes],
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VehicleId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Tx,
    Rx,
    Inactive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    pub id: VehicleId,
    /// 1-based lane index.
    pub lane: usize,
    /// Center of the footprint along the road, in `[0, road_length)`.
    pub position: f64,
    pub kind: VehicleKind,
    pub mode: Mode,
    /// Boresight sector index; `None` for trucks, which carry no radio.
    pub boresight: Option<u32>,
}

impl Vehicle {
    pub fn is_car(&self) -> bool {
        self.kind == VehicleKind::Car
    }

    /// Antenna location: footprint center on the lane centerline.
    pub fn antenna_point(&self, road: &RoadConfig) -> Point {
        Point::new(self.position, road.lane_center(self.lane))
    }
}

/// Footprint rectangle in absolute coordinates (no ring unwrapping).
pub fn footprint(vehicle: &Vehicle, road: &RoadConfig) -> Rect {
    let fp = road.footprint_of(vehicle.kind);
    Rect::centered(vehicle.antenna_point(road), fp.length, fp.width)
        .expect("validated footprint has positive area")
}

/// One frozen spatial realization of the highway.
#[derive(Debug, Clone)]
pub struct Snapshot {
    /// Sorted by `(lane, position)`.
    pub vehicles: Vec<Vehicle>,
    pub road: Arc<RoadConfig>,
    pub seed: u64,
}

impl Snapshot {
    pub fn get(&self, id: VehicleId) -> Option<&Vehicle> {
        // ids are assigned in storage order
        self.vehicles
            .get(id.0 as usize)
            .filter(|v| v.id == id)
            .or_else(|| self.vehicles.iter().find(|v| v.id == id))
    }

    pub fn lane(&self, lane: usize) -> impl Iterator<Item = &Vehicle> {
        self.vehicles.iter().filter(move |v| v.lane == lane)
    }

    pub fn trucks(&self) -> impl Iterator<Item = &Vehicle> {
        self.vehicles.iter().filter(|v| v.kind == VehicleKind::Truck)
    }

    /// Same-lane footprint overlaps (including across the ring seam), as
    /// pairs of ids. Empty for every valid snapshot.
    pub fn overlapping_pairs(&self) -> Vec<(VehicleId, VehicleId)> {
        let road = &self.road;
        let mut out = Vec::new();
        for lane in 1..=road.num_lanes {
            let lane_vs: Vec<&Vehicle> = self.lane(lane).collect();
            let n = lane_vs.len();
            if n < 2 {
                continue;
            }
            for i in 0..n {
                let a = lane_vs[i];
                let b = lane_vs[(i + 1) % n];
                let half = (road.footprint_of(a.kind).length + road.footprint_of(b.kind).length) / 2.0;
                let gap = (b.position - a.position).rem_euclid(road.road_length);
                if gap < half {
                    out.push((a.id, b.id));
                }
            }
        }
        out
    }
}

/// Homogeneous Poisson placement on `[0, length)`, sorted.
pub fn sample_lane_positions<R: Rng + ?Sized>(
    length: f64,
    intensity: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(length > 0.0) || !(intensity > 0.0) {
        return Err(SimError::InvalidConfig(format!(
            "lane sampling needs positive length and intensity, got {length} and {intensity}"
        )));
    }
    let mean = length * intensity;
    let count = if mean < 1e-300 {
        0
    } else {
        Poisson::new(mean)
            .map_err(|e| SimError::InvalidConfig(format!("poisson mean {mean}: {e}")))?
            .sample(rng) as usize
    };
    let mut xs: Vec<f64> = (0..count).map(|_| rng.random::<f64>() * length).collect();
    xs.sort_by(f64::total_cmp);
    Ok(xs)
}

/// Pushes sorted same-lane vehicles forward until consecutive footprints are
/// at least `min_gap` apart. Vehicles pushed past the end of the ring, or
/// colliding with the first vehicle across the seam, are dropped.
pub fn resolve_overlaps(lane: &mut Vec<(f64, VehicleKind)>, road: &RoadConfig) {
    let half = |k: VehicleKind| road.footprint_of(k).length / 2.0;
    for i in 1..lane.len() {
        let (prev_x, prev_k) = lane[i - 1];
        let need = prev_x + half(prev_k) + half(lane[i].1) + road.min_gap;
        if lane[i].0 < need {
            lane[i].0 = need;
        }
    }
    lane.retain(|&(x, _)| x < road.road_length);
    while lane.len() >= 2 {
        let (first_x, first_k) = lane[0];
        let (last_x, last_k) = lane[lane.len() - 1];
        if last_x + half(last_k) + half(first_k) + road.min_gap > first_x + road.road_length {
            lane.pop();
        } else {
            break;
        }
    }
}

/// Draws mode and boresight for every car; trucks stay inactive.
pub fn assign_radio_marks<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    vehicles: &mut [Vehicle],
    p_rx: f64,
    num_sectors: u32,
    mode_rng: &mut R1,
    steer_rng: &mut R2,
) {
    for v in vehicles.iter_mut() {
        match v.kind {
            VehicleKind::Truck => {
                v.mode = Mode::Inactive;
                v.boresight = None;
            }
            VehicleKind::Car => {
                v.mode = if mode_rng.random::<f64>() < p_rx {
                    Mode::Rx
                } else {
                    Mode::Tx
                };
                v.boresight = Some(steer_rng.random_range(0..num_sectors));
            }
        }
    }
}

/// Draws a kind per position using the lane's truck probability.
pub fn assign_kinds<R: Rng + ?Sized>(
    positions: &[Vec<f64>],
    road: &RoadConfig,
    rng: &mut R,
) -> Result<Vec<Vec<(f64, VehicleKind)>>> {
    if positions.len() != road.num_lanes || road.truck_fractions.len() != road.num_lanes {
        return Err(SimError::InvalidConfig(format!(
            "got positions for {} lanes, road has {} lanes and {} truck fractions",
            positions.len(),
            road.num_lanes,
            road.truck_fractions.len()
        )));
    }
    Ok(positions
        .iter()
        .zip(&road.truck_fractions)
        .map(|(xs, &eps)| {
            xs.iter()
                .map(|&x| {
                    let kind = if rng.random::<f64>() < eps {
                        VehicleKind::Truck
                    } else {
                        VehicleKind::Car
                    };
                    (x, kind)
                })
                .collect()
        })
        .collect())
}

/// Builds the vehicle list from per-lane `(position, kind)` lists that have
/// already been made overlap-free. Radio marks are left inactive.
pub fn build_vehicles(lanes: &[Vec<(f64, VehicleKind)>]) -> Vec<Vehicle> {
    let mut out = Vec::with_capacity(lanes.iter().map(Vec::len).sum());
    for (li, lane) in lanes.iter().enumerate() {
        let mut sorted = lane.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (x, kind) in sorted {
            out.push(Vehicle {
                id: VehicleId(out.len() as u32),
                lane: li + 1,
                position: x,
                kind,
                mode: Mode::Inactive,
                boresight: None,
            });
        }
    }
    out
}

/// Turns raw per-lane positions into a marked, overlap-free snapshot.
#[allow(clippy::too_many_arguments)]
pub fn mark_vehicles<R1, R2, R3>(
    positions: &[Vec<f64>],
    road: Arc<RoadConfig>,
    kinds_rng: &mut R1,
    mode_rng: &mut R2,
    steer_rng: &mut R3,
    p_rx: f64,
    num_sectors: u32,
    seed: u64,
) -> Result<Snapshot>
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
    R3: Rng + ?Sized,
{
    if !(0.0..=1.0).contains(&p_rx) {
        return Err(SimError::InvalidConfig(format!("p_rx must be in [0, 1], got {p_rx}")));
    }
    if num_sectors == 0 {
        return Err(SimError::InvalidConfig("num_sectors must be >= 1".into()));
    }
    let mut lanes = assign_kinds(positions, &road, kinds_rng)?;
    for lane in &mut lanes {
        resolve_overlaps(lane, &road);
    }
    let mut vehicles = build_vehicles(&lanes);
    assign_radio_marks(&mut vehicles, p_rx, num_sectors, mode_rng, steer_rng);
    Ok(Snapshot {
        vehicles,
        road,
        seed,
    })
}

/// Placement, kinds and radio marks for one snapshot, all drawn from
/// substreams of `seed`.
pub fn sample_snapshot(
    road: Arc<RoadConfig>,
    p_rx: f64,
    num_sectors: u32,
    seed: u64,
) -> Result<Snapshot> {
    let mut pos_rng = substream(seed, Substream::Positions);
    let positions = road
        .lane_intensities
        .iter()
        .map(|&lambda| sample_lane_positions(road.road_length, lambda, &mut pos_rng))
        .collect::<Result<Vec<_>>>()?;
    mark_vehicles(
        &positions,
        road,
        &mut substream(seed, Substream::Kinds),
        &mut substream(seed, Substream::Modes),
        &mut substream(seed, Substream::Steering),
        p_rx,
        num_sectors,
        seed,
    )
}

/// The measured receiver: the RX car in `lane` closest (along the ring) to
/// the middle of the section.
pub fn tagged_receiver(snapshot: &Snapshot, lane: usize) -> Option<&Vehicle> {
    let road = &snapshot.road;
    let mid = road.road_length / 2.0;
    snapshot
        .lane(lane)
        .filter(|v| v.mode == Mode::Rx)
        .min_by(|a, b| {
            let da = road.ring_offset(mid, a.position).abs();
            let db = road.ring_offset(mid, b.position).abs();
            da.total_cmp(&db).then(a.id.cmp(&b.id))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn car(lane: usize, x: f64) -> Vehicle {
        Vehicle {
            id: VehicleId(0),
            lane,
            position: x,
            kind: VehicleKind::Car,
            mode: Mode::Rx,
            boresight: Some(0),
        }
    }

    #[test]
    fn expected_count_at_highest_density() {
        // 60 vehicles/km over 20 km
        let road = RoadConfig::default();
        assert!((road.road_length * road.lane_intensities[1] - 1200.0).abs() < 1e-9);
    }

    #[test]
    fn vanishing_intensity_is_empty() {
        let mut rng = stream(1);
        for _ in 0..100 {
            assert!(sample_lane_positions(20_000.0, 1e-12, &mut rng).unwrap().is_empty());
        }
    }

    #[test]
    fn rejects_bad_sampling_inputs() {
        let mut rng = stream(1);
        assert!(sample_lane_positions(0.0, 0.1, &mut rng).is_err());
        assert!(sample_lane_positions(100.0, -0.1, &mut rng).is_err());
        assert!(sample_lane_positions(100.0, 0.0, &mut rng).is_err());
    }

    #[test]
    fn positions_sorted_and_in_range() {
        let mut rng = stream(9);
        let xs = sample_lane_positions(1000.0, 0.05, &mut rng).unwrap();
        assert!(xs.windows(2).all(|w| w[0] <= w[1]));
        assert!(xs.iter().all(|&x| (0.0..1000.0).contains(&x)));
    }

    #[test]
    fn lane_two_car_density() {
        let road = RoadConfig::default();
        let car_density = (1.0 - road.truck_fractions[1]) * road.lane_intensities[1];
        assert!((car_density - 5.7e-2).abs() < 1e-15);
    }

    #[test]
    fn p_rx_one_means_all_receivers() {
        let road = Arc::new(RoadConfig::default());
        let snap = sample_snapshot(road, 1.0, 8, 3).unwrap();
        assert!(snap.vehicles.iter().filter(|v| v.is_car()).all(|v| v.mode == Mode::Rx));
        assert!(snap.trucks().all(|v| v.mode == Mode::Inactive && v.boresight.is_none()));
    }

    #[test]
    fn mismatched_lanes_rejected() {
        let road = Arc::new(RoadConfig::default());
        let positions = vec![vec![1.0]; 3];
        let err = mark_vehicles(
            &positions,
            road,
            &mut stream(1),
            &mut stream(2),
            &mut stream(3),
            0.5,
            4,
            0,
        );
        assert!(matches!(err, Err(SimError::InvalidConfig(_))));
    }

    #[test]
    fn truck_footprint_in_lane_two() {
        let road = RoadConfig::default();
        let mut v = car(2, 100.0);
        v.kind = VehicleKind::Truck;
        let r = footprint(&v, &road);
        assert!((r.min.x - 94.4).abs() < 1e-9);
        assert!((r.max.x - 105.6).abs() < 1e-9);
        assert!((r.min.y - 4.29).abs() < 1e-9);
        assert!((r.max.y - 6.81).abs() < 1e-9);
    }

    #[test]
    fn car_footprint_spans_four_meters() {
        let road = RoadConfig::default();
        let r = footprint(&car(1, 0.0), &road);
        assert_eq!((r.min.x, r.max.x), (-2.0, 2.0));
        let other = footprint(&car(1, 4.0), &road);
        assert!(!r.overlaps(&other));
        assert_eq!(r.max.x, other.min.x);
    }

    #[test]
    fn overlaps_resolved_with_gap() {
        let road = RoadConfig::default();
        let mut lane = vec![
            (10.0, VehicleKind::Car),
            (11.0, VehicleKind::Truck),
            (12.0, VehicleKind::Car),
        ];
        resolve_overlaps(&mut lane, &road);
        assert_eq!(lane[0].0, 10.0);
        assert!((lane[1].0 - (10.0 + 2.0 + 5.6 + 1.0)).abs() < 1e-12);
        assert!((lane[2].0 - (lane[1].0 + 5.6 + 2.0 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn seam_collision_drops_last() {
        let road = RoadConfig {
            road_length: 100.0,
            ..RoadConfig::default()
        };
        let mut lane = vec![(1.0, VehicleKind::Car), (98.0, VehicleKind::Car)];
        resolve_overlaps(&mut lane, &road);
        assert_eq!(lane.len(), 1);
    }

    #[test]
    fn snapshots_have_no_overlap() {
        let road = Arc::new(RoadConfig::default());
        for seed in 0..20 {
            let snap = sample_snapshot(road.clone(), 0.5, 8, seed).unwrap();
            assert!(snap.overlapping_pairs().is_empty());
            assert!(snap
                .vehicles
                .windows(2)
                .all(|w| (w[0].lane, w[0].position) <= (w[1].lane, w[1].position)));
        }
    }

    #[test]
    fn ids_follow_storage_order() {
        let road = Arc::new(RoadConfig::default());
        let snap = sample_snapshot(road, 0.5, 4, 11).unwrap();
        for (i, v) in snap.vehicles.iter().enumerate() {
            assert_eq!(v.id.0 as usize, i);
            assert_eq!(snap.get(v.id).unwrap().id, v.id);
        }
    }

    #[test]
    fn ring_offset_takes_short_arc() {
        let road = RoadConfig::default();
        assert_eq!(road.ring_offset(10.0, 30.0), 20.0);
        assert_eq!(road.ring_offset(19_990.0, 10.0), 20.0);
        assert_eq!(road.ring_offset(10.0, 19_990.0), -20.0);
    }

    #[test]
    fn tagged_receiver_is_nearest_to_midpoint() {
        let road = Arc::new(RoadConfig::default());
        let mut vs = vec![car(2, 9_000.0), car(2, 10_030.0), car(2, 9_990.0), car(1, 10_000.0)];
        vs[2].mode = Mode::Tx;
        for (i, v) in vs.iter_mut().enumerate() {
            v.id = VehicleId(i as u32);
        }
        let snap = Snapshot {
            vehicles: vs,
            road,
            seed: 0,
        };
        assert_eq!(tagged_receiver(&snap, 2).unwrap().id, VehicleId(1));
        assert!(tagged_receiver(&snap, 3).is_none());
    }

    #[test]
    fn default_road_is_valid_and_bad_road_lists_everything() {
        assert!(RoadConfig::default().validate().is_ok());
        let bad = RoadConfig {
            num_lanes: 5,
            lane_width: -1.0,
            truck_fractions: vec![1.5; 4],
            ..RoadConfig::default()
        };
        let errs = bad.violations();
        assert!(errs.len() >= 4, "{errs:?}");
    }

    #[test]
    fn directions_split_at_half() {
        let road = RoadConfig::default();
        assert_eq!(road.direction(1), Direction::EastToWest);
        assert_eq!(road.direction(2), Direction::EastToWest);
        assert_eq!(road.direction(3), Direction::WestToEast);
        assert_eq!(road.direction(4), Direction::WestToEast);
    }
}
