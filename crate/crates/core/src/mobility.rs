//! Krauss car-following on a lane-locked ring.
//!
//! Each step every vehicle picks the largest speed that lets it stop behind
//! its leader should the leader brake at `max_decel`, bounded by its own
//! maximum speed and acceleration, then randomly dawdles. Speeds are
//! computed from the old state and applied together. The final clamp to
//! `gap / dt` makes the update collision free whatever the leader does.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::road::{Direction, RoadConfig, Snapshot, Vehicle, VehicleKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KraussParams {
    /// m/s.
    pub max_speed_car: f64,
    /// m/s.
    pub max_speed_truck: f64,
    /// m/s^2.
    pub max_accel: f64,
    /// m/s^2.
    pub max_decel: f64,
    /// Dawdling factor in [0, 1].
    pub driver_imperfection: f64,
    /// Seconds.
    pub reaction_time: f64,
    /// Seconds.
    pub time_step: f64,
    /// Seconds of evolution before the first measured snapshot.
    pub warmup_duration: f64,
}

impl Default for KraussParams {
    fn default() -> Self {
        KraussParams {
            max_speed_car: 112.0 / 3.6,
            max_speed_truck: 96.0 / 3.6,
            max_accel: 2.5,
            max_decel: 4.5,
            driver_imperfection: 0.5,
            reaction_time: 1.0,
            time_step: 1.0,
            warmup_duration: 600.0,
        }
    }
}

impl KraussParams {
    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let positive = [
            ("max_speed_car", self.max_speed_car),
            ("max_speed_truck", self.max_speed_truck),
            ("max_accel", self.max_accel),
            ("max_decel", self.max_decel),
            ("reaction_time", self.reaction_time),
            ("time_step", self.time_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                errs.push(format!("mobility.{name} must be > 0, got {v}"));
            }
        }
        if !(self.warmup_duration >= 0.0) {
            errs.push(format!(
                "mobility.warmup_duration must be >= 0, got {}",
                self.warmup_duration
            ));
        }
        if !(0.0..=1.0).contains(&self.driver_imperfection) {
            errs.push(format!(
                "mobility.driver_imperfection must be in [0, 1], got {}",
                self.driver_imperfection
            ));
        }
        errs
    }

    pub fn max_speed(&self, kind: VehicleKind) -> f64 {
        match kind {
            VehicleKind::Car => self.max_speed_car,
            VehicleKind::Truck => self.max_speed_truck,
        }
    }

    /// Whole steps covering `duration` seconds.
    pub fn steps_for(&self, duration: f64) -> usize {
        (duration / self.time_step).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MovingVehicle {
    pub vehicle: Vehicle,
    /// Distance travelled coordinate along the driving direction, `[0, L)`.
    pub s: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaneTraffic {
    pub lane: usize,
    pub direction: Direction,
    /// Cyclic order: the leader of entry `i` is entry `i + 1` (wrapping).
    pub vehicles: Vec<MovingVehicle>,
}

/// Snapshot plus per-vehicle speeds.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficState {
    pub road: Arc<RoadConfig>,
    pub lanes: Vec<LaneTraffic>,
    pub time: f64,
    pub seed: u64,
}

fn wrap(x: f64, length: f64) -> f64 {
    let w = x.rem_euclid(length);
    // rem_euclid of a tiny negative can round up to `length`
    if w >= length {
        0.0
    } else {
        w
    }
}

fn to_driving(x: f64, dir: Direction, length: f64) -> f64 {
    match dir {
        Direction::WestToEast => x,
        Direction::EastToWest => wrap(length - x, length),
    }
}

fn from_driving(s: f64, dir: Direction, length: f64) -> f64 {
    to_driving(s, dir, length)
}

impl TrafficState {
    /// All vehicles start at rest.
    pub fn from_snapshot(snapshot: &Snapshot) -> Self {
        let road = snapshot.road.clone();
        let lanes = (1..=road.num_lanes)
            .map(|lane| {
                let direction = road.direction(lane);
                let mut vehicles: Vec<MovingVehicle> = snapshot
                    .lane(lane)
                    .map(|v| MovingVehicle {
                        vehicle: v.clone(),
                        s: to_driving(v.position, direction, road.road_length),
                        speed: 0.0,
                    })
                    .collect();
                vehicles.sort_by(|a, b| a.s.total_cmp(&b.s));
                LaneTraffic {
                    lane,
                    direction,
                    vehicles,
                }
            })
            .collect();
        TrafficState {
            road,
            lanes,
            time: 0.0,
            seed: snapshot.seed,
        }
    }

    pub fn to_snapshot(&self) -> Snapshot {
        let length = self.road.road_length;
        let mut vehicles: Vec<Vehicle> = self
            .lanes
            .iter()
            .flat_map(|l| {
                l.vehicles.iter().map(move |m| Vehicle {
                    position: from_driving(m.s, l.direction, length),
                    ..m.vehicle.clone()
                })
            })
            .collect();
        vehicles.sort_by(|a, b| a.lane.cmp(&b.lane).then(a.position.total_cmp(&b.position)));
        Snapshot {
            vehicles,
            road: self.road.clone(),
            seed: self.seed,
        }
    }

    /// Per-lane `(position, kind)` lists, for rebuilding fresh snapshots.
    pub fn lane_layout(&self) -> Vec<Vec<(f64, VehicleKind)>> {
        let length = self.road.road_length;
        self.lanes
            .iter()
            .map(|l| {
                l.vehicles
                    .iter()
                    .map(|m| (from_driving(m.s, l.direction, length), m.vehicle.kind))
                    .collect()
            })
            .collect()
    }

    /// Bumper-to-bumper gap ahead of each vehicle, per lane, in cyclic order.
    pub fn gaps(&self) -> Vec<Vec<f64>> {
        self.lanes
            .iter()
            .map(|l| lane_gaps(l, &self.road, 0.0))
            .collect()
    }

    pub fn vehicle_count(&self) -> usize {
        self.lanes.iter().map(|l| l.vehicles.len()).sum()
    }

    /// Runs `steps` Krauss steps, calling `observe` after each.
    pub fn run<R, F>(&mut self, params: &KraussParams, steps: usize, rng: &mut R, mut observe: F) -> Result<()>
    where
        R: Rng + ?Sized,
        F: FnMut(&TrafficState),
    {
        for _ in 0..steps {
            krauss_step(self, params, rng)?;
            observe(self);
        }
        Ok(())
    }
}

/// Gap ahead of each vehicle minus `reserve`.
fn lane_gaps(lane: &LaneTraffic, road: &RoadConfig, reserve: f64) -> Vec<f64> {
    let n = lane.vehicles.len();
    let length = road.road_length;
    (0..n)
        .map(|i| {
            let me = &lane.vehicles[i];
            let leader = &lane.vehicles[(i + 1) % n];
            let mut ahead = (leader.s - me.s).rem_euclid(length);
            if n == 1 {
                ahead = length;
            }
            let half = (road.footprint_of(me.vehicle.kind).length
                + road.footprint_of(leader.vehicle.kind).length)
                / 2.0;
            ahead - half - reserve
        })
        .collect()
}

/// Advances every lane by one time step.
pub fn krauss_step<R: Rng + ?Sized>(state: &mut TrafficState, params: &KraussParams, rng: &mut R) -> Result<()> {
    let road = state.road.clone();
    let dt = params.time_step;
    let tau = params.reaction_time;
    let b = params.max_decel;
    let a = params.max_accel;
    for lane in &mut state.lanes {
        let n = lane.vehicles.len();
        if n == 0 {
            continue;
        }
        let gaps = lane_gaps(lane, &road, road.min_gap);
        let mut speeds = Vec::with_capacity(n);
        for i in 0..n {
            let gap = gaps[i];
            if gap < -1e-9 {
                return Err(SimError::Inconsistent(format!(
                    "lane {} vehicle {:?} overlaps its leader by {} m",
                    lane.lane,
                    lane.vehicles[i].vehicle.id,
                    -gap
                )));
            }
            let gap = gap.max(0.0);
            let me = &lane.vehicles[i];
            let v = me.speed;
            let v_lead = lane.vehicles[(i + 1) % n].speed;
            let v_mean = 0.5 * (v + v_lead);
            let v_safe = v_lead + (gap - v_lead * tau) / (v_mean / b + tau);
            let v_des = params.max_speed(me.vehicle.kind).min(v + a * dt).min(v_safe);
            let dawdle = params.driver_imperfection * a * dt * rng.random::<f64>();
            let v_new = (v_des - dawdle).max(0.0).min(gap / dt);
            speeds.push(v_new);
        }
        for (m, v) in lane.vehicles.iter_mut().zip(speeds) {
            m.speed = v;
            m.s = wrap(m.s + v * dt, road.road_length);
        }
    }
    state.time += dt;
    Ok(())
}

/// Evolves `snapshot` for the configured warm-up and returns the frozen
/// result. Count, kinds and radio marks are unchanged.
pub fn warmup<R: Rng + ?Sized>(snapshot: &Snapshot, params: &KraussParams, rng: &mut R) -> Result<Snapshot> {
    let steps = params.steps_for(params.warmup_duration);
    if steps == 0 {
        return Ok(snapshot.clone());
    }
    let mut state = TrafficState::from_snapshot(snapshot);
    state.run(params, steps, rng, |_| {})?;
    Ok(state.to_snapshot())
}
