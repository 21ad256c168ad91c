//! Line-of-sight between cars. Trucks are impenetrable: a link is blocked as
//! soon as the straight segment between the two antenna points touches a
//! truck footprint. Cars only block when `cars_block` is set.

use crate::error::{Result, SimError};
use crate::geometry::{segment_intersects_rect, Point, Rect, Segment2D};
use crate::road::{Snapshot, Vehicle, VehicleId, VehicleKind};

/// LOS between two cars with trucks as the only blockers.
pub fn is_los(tx: &Vehicle, rx: &Vehicle, snapshot: &Snapshot) -> Result<bool> {
    is_los_with(tx, rx, snapshot, false)
}

pub fn is_los_with(tx: &Vehicle, rx: &Vehicle, snapshot: &Snapshot, cars_block: bool) -> Result<bool> {
    if !tx.is_car() || !rx.is_car() {
        return Err(SimError::InvalidArgument(
            "line of sight is only evaluated between cars".into(),
        ));
    }
    if tx.id == rx.id {
        return Err(SimError::InvalidArgument("tx and rx are the same vehicle".into()));
    }
    let road = &snapshot.road;
    // work in coordinates unwrapped around tx
    let a = Point::new(0.0, road.lane_center(tx.lane));
    let b = Point::new(road.ring_offset(tx.position, rx.position), road.lane_center(rx.lane));
    let seg = Segment2D::new(a, b)?;
    let blocked = snapshot
        .vehicles
        .iter()
        .filter(|v| v.id != tx.id && v.id != rx.id)
        .filter(|v| v.kind == VehicleKind::Truck || cars_block)
        .any(|v| {
            let fp = road.footprint_of(v.kind);
            let center = Point::new(road.ring_offset(tx.position, v.position), road.lane_center(v.lane));
            let rect = Rect::centered(center, fp.length, fp.width).expect("positive footprint");
            segment_intersects_rect(&seg, &rect)
        });
    Ok(!blocked)
}

#[derive(Debug, Clone, Copy)]
struct Blocker {
    id: VehicleId,
    /// Center x relative to the origin, short arc.
    x: f64,
    rect: Rect,
}

/// Blockers sorted around one fixed endpoint, for answering many LOS
/// queries from the same receiver.
#[derive(Debug, Clone)]
pub struct LosIndex {
    origin_id: VehicleId,
    origin: Point,
    origin_position: f64,
    blockers: Vec<Blocker>,
    max_half_length: f64,
}

impl LosIndex {
    pub fn new(snapshot: &Snapshot, origin: &Vehicle, cars_block: bool) -> Self {
        let road = &snapshot.road;
        let mut blockers: Vec<Blocker> = snapshot
            .vehicles
            .iter()
            .filter(|v| v.id != origin.id)
            .filter(|v| v.kind == VehicleKind::Truck || cars_block)
            .map(|v| {
                let fp = road.footprint_of(v.kind);
                let x = road.ring_offset(origin.position, v.position);
                let center = Point::new(x, road.lane_center(v.lane));
                Blocker {
                    id: v.id,
                    x,
                    rect: Rect::centered(center, fp.length, fp.width).expect("positive footprint"),
                }
            })
            .collect();
        blockers.sort_by(|a, b| a.x.total_cmp(&b.x));
        let max_half_length = blockers
            .iter()
            .map(|b| (b.rect.max.x - b.rect.min.x) / 2.0)
            .fold(0.0, f64::max);
        LosIndex {
            origin_id: origin.id,
            origin: Point::new(0.0, road.lane_center(origin.lane)),
            origin_position: origin.position,
            blockers,
            max_half_length,
        }
    }

    /// LOS from the origin to `peer` located at short-arc offset `dx` and
    /// lateral coordinate `y`.
    pub fn is_los_to(&self, peer: VehicleId, dx: f64, y: f64) -> bool {
        let end = Point::new(dx, y);
        let Ok(seg) = Segment2D::new(self.origin, end) else {
            return false;
        };
        let lo = dx.min(0.0) - self.max_half_length;
        let hi = dx.max(0.0) + self.max_half_length;
        let start = self.blockers.partition_point(|b| b.x < lo);
        let stop = self.blockers.partition_point(|b| b.x <= hi);
        let candidates = &self.blockers[start..stop];
        let hit = |b: &Blocker| b.id != peer && b.id != self.origin_id && segment_intersects_rect(&seg, &b.rect);
        if dx >= 0.0 {
            !candidates.iter().any(hit)
        } else {
            !candidates.iter().rev().any(hit)
        }
    }

    pub fn origin_position(&self) -> f64 {
        self.origin_position
    }
}
