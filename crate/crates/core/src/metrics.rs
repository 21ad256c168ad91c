//! SINR evaluation and the outage / rate-coverage estimators.
//!
//! For cluster member `i` the SINR at the receiver is
//! `|h_i|^2 gain_i path_loss(r_i) / (noise + I)`, where `I` sums the same
//! quantity over every LOS transmitter outside the cluster. Members occupy
//! distinct subslots, so they never interfere with each other, and all of
//! them see the same `I`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::FadingSampler;
use crate::mac::ClusterResult;
use crate::road::VehicleId;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkSample {
    pub member: VehicleId,
    pub distance: f64,
    pub fading: f64,
    pub gain: f64,
    pub sinr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evaluation {
    Evaluated,
    /// Empty cluster; nothing to measure this slot.
    Skipped,
}

/// Fills in per-member SINR using `fading(id)` for every `|h|^2` that the
/// slot needs: members first in subslot order, then LOS interferers in id
/// order.
pub fn evaluate_with_fading<F>(cluster: &mut ClusterResult, noise: f64, mut fading: F) -> Evaluation
where
    F: FnMut(VehicleId) -> f64,
{
    cluster.samples.clear();
    cluster.best = None;
    cluster.worst = None;
    if cluster.members.is_empty() {
        return Evaluation::Skipped;
    }
    let numerators: Vec<(VehicleId, f64, f64)> = cluster
        .members
        .iter()
        .map(|m| {
            let h = fading(m.link.id);
            (m.link.id, h, h * m.link.mean_power)
        })
        .collect();
    let interference: f64 = cluster
        .interferers
        .iter()
        .filter(|l| l.los && l.mean_power > 0.0)
        .map(|l| fading(l.id) * l.mean_power)
        .sum();
    let denom = noise + interference;
    for (m, (id, h, num)) in cluster.members.iter().zip(numerators) {
        cluster.samples.push(LinkSample {
            member: id,
            distance: m.link.distance,
            fading: h,
            gain: m.link.gain,
            sinr: num / denom,
        });
    }
    // ties resolve to the earlier subslot
    let mut best = &cluster.samples[0];
    let mut worst = &cluster.samples[0];
    for s in &cluster.samples[1..] {
        if s.sinr > best.sinr {
            best = s;
        }
        if s.sinr < worst.sinr {
            worst = s;
        }
    }
    cluster.best = Some(best.member);
    cluster.worst = Some(worst.member);
    Evaluation::Evaluated
}

/// Evaluates with independent Nakagami draws from `rng`.
pub fn evaluate_snapshot<R: Rng + ?Sized>(
    cluster: &mut ClusterResult,
    noise: f64,
    fading: &FadingSampler,
    rng: &mut R,
) -> Evaluation {
    evaluate_with_fading(cluster, noise, |_| fading.sample(rng))
}

/// Shannon rate over `bandwidth`, optionally shared among `subslots`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateMapping {
    pub bandwidth: f64,
    /// Divide the rate by this (1 when subslot scaling is off).
    pub divisor: f64,
}

impl RateMapping {
    pub fn new(bandwidth: f64) -> Self {
        RateMapping {
            bandwidth,
            divisor: 1.0,
        }
    }

    pub fn rate(&self, sinr: f64) -> f64 {
        rate_of(sinr, self.bandwidth) / self.divisor
    }
}

/// Bits per second at `sinr` over `bandwidth` Hz.
pub fn rate_of(sinr: f64, bandwidth: f64) -> f64 {
    bandwidth * sinr.max(0.0).ln_1p() / std::f64::consts::LN_2
}

/// Wilson score interval at the given normal quantile.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let all = successes == n;
    let none = successes == 0;
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    // the exact bounds at the extremes, which rounding would blur
    let lo = if none { 0.0 } else { (center - half).max(0.0) };
    let hi = if all { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

pub fn log_grid(lo_exp: f64, hi_exp: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![10f64.powf(lo_exp)];
    }
    (0..points)
        .map(|k| 10f64.powf(lo_exp + (hi_exp - lo_exp) * k as f64 / (points - 1) as f64))
        .collect()
}

pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    (0..points)
        .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
        .collect()
}

/// SINR thresholds 0.1 .. 1000, 41 log-spaced points.
pub fn default_theta_grid() -> Vec<f64> {
    log_grid(-1.0, 3.0, 41)
}

/// Rate thresholds 0.5 .. 12 Gb/s in 0.25 Gb/s steps.
pub fn default_kappa_grid() -> Vec<f64> {
    (0..47).map(|k| 0.5e9 + 0.25e9 * k as f64).collect()
}

/// Which cluster member a curve describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Member {
    /// Highest-SINR member.
    Best,
    /// Lowest-SINR member.
    Worst,
}

impl Member {
    pub fn label(&self) -> &'static str {
        match self {
            Member::Best => "M",
            Member::Worst => "m",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridKind {
    Theta,
    Kappa,
}

impl GridKind {
    pub fn label(&self) -> &'static str {
        match self {
            GridKind::Theta => "theta",
            GridKind::Kappa => "kappa",
        }
    }
}

/// One point of an estimated curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub member: Member,
    pub kind: GridKind,
    pub grid_value: f64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub snapshots: u64,
    pub evaluated: u64,
    /// Snapshots with an empty cluster.
    pub empty_clusters: u64,
    /// Snapshots where the cluster exceeded the subslot count.
    pub truncations: u64,
    /// Snapshots without any receiving car in the tagged lane.
    pub no_receiver: u64,
    /// Total cluster members over evaluated snapshots.
    pub cluster_members: u64,
}

impl Counters {
    pub fn merge(&mut self, other: &Counters) {
        self.snapshots += other.snapshots;
        self.evaluated += other.evaluated;
        self.empty_clusters += other.empty_clusters;
        self.truncations += other.truncations;
        self.no_receiver += other.no_receiver;
        self.cluster_members += other.cluster_members;
    }

    pub fn skipped(&self) -> u64 {
        self.empty_clusters + self.no_receiver
    }
}

/// Streaming estimator of `P(SINR < theta)` and `P(rate >= kappa)` for the
/// best and worst cluster members.
///
/// Counts are integers, so merging per-worker accumulators gives the same
/// result in any order.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricAccumulator {
    theta_grid: Vec<f64>,
    kappa_grid: Vec<f64>,
    rate: RateMapping,
    empty_as_outage: bool,
    /// `[best, worst]` counts of `SINR < theta`.
    outage: [Vec<u64>; 2],
    /// `[best, worst]` counts of `rate >= kappa`.
    coverage: [Vec<u64>; 2],
    /// Samples contributing to the estimates.
    n: u64,
    pub counters: Counters,
}

impl MetricAccumulator {
    pub fn new(theta_grid: Vec<f64>, kappa_grid: Vec<f64>, rate: RateMapping) -> Self {
        let nt = theta_grid.len();
        let nk = kappa_grid.len();
        MetricAccumulator {
            theta_grid,
            kappa_grid,
            rate,
            empty_as_outage: false,
            outage: [vec![0; nt], vec![0; nt]],
            coverage: [vec![0; nk], vec![0; nk]],
            n: 0,
            counters: Counters::default(),
        }
    }

    /// Count empty-cluster snapshots as zero SINR instead of excluding them.
    pub fn with_empty_as_outage(mut self, on: bool) -> Self {
        self.empty_as_outage = on;
        self
    }

    /// Same grids and settings, zero counts.
    pub fn empty_like(&self) -> Self {
        MetricAccumulator::new(self.theta_grid.clone(), self.kappa_grid.clone(), self.rate)
            .with_empty_as_outage(self.empty_as_outage)
    }

    pub fn theta_grid(&self) -> &[f64] {
        &self.theta_grid
    }

    pub fn kappa_grid(&self) -> &[f64] {
        &self.kappa_grid
    }

    pub fn n_effective(&self) -> u64 {
        self.n
    }

    fn record(&mut self, best: f64, worst: f64) {
        for (slot, sinr) in [(0, best), (1, worst)] {
            let rate = self.rate.rate(sinr);
            for (c, &theta) in self.outage[slot].iter_mut().zip(&self.theta_grid) {
                if sinr < theta {
                    *c += 1;
                }
            }
            for (c, &kappa) in self.coverage[slot].iter_mut().zip(&self.kappa_grid) {
                if rate >= kappa {
                    *c += 1;
                }
            }
        }
        self.n += 1;
    }

    /// Adds one slot's SINR pair directly.
    pub fn accumulate_sinr(&mut self, best: f64, worst: f64) {
        self.counters.snapshots += 1;
        self.counters.evaluated += 1;
        self.record(best, worst);
    }

    /// Adds one evaluated cluster; empty clusters are counted as skipped (or
    /// as outage when configured).
    pub fn accumulate(&mut self, result: &ClusterResult) {
        self.counters.snapshots += 1;
        if result.truncated > 0 {
            self.counters.truncations += 1;
        }
        match (result.best_sinr(), result.worst_sinr()) {
            (Some(best), Some(worst)) => {
                self.counters.evaluated += 1;
                self.counters.cluster_members += result.members.len() as u64;
                self.record(best, worst);
            }
            _ => {
                self.counters.empty_clusters += 1;
                if self.empty_as_outage {
                    self.record(0.0, 0.0);
                }
            }
        }
    }

    /// A slot in which the tagged lane had no receiver at all.
    pub fn record_no_receiver(&mut self) {
        self.counters.snapshots += 1;
        self.counters.no_receiver += 1;
    }

    pub fn merge(&mut self, other: &MetricAccumulator) {
        assert_eq!(self.theta_grid, other.theta_grid, "theta grids differ");
        assert_eq!(self.kappa_grid, other.kappa_grid, "kappa grids differ");
        for slot in 0..2 {
            for (a, b) in self.outage[slot].iter_mut().zip(&other.outage[slot]) {
                *a += b;
            }
            for (a, b) in self.coverage[slot].iter_mut().zip(&other.coverage[slot]) {
                *a += b;
            }
        }
        self.n += other.n;
        self.counters.merge(&other.counters);
    }

    fn point(&self, member: Member, kind: GridKind, idx: usize) -> CurvePoint {
        let slot = member as usize;
        let (grid, counts) = match kind {
            GridKind::Theta => (&self.theta_grid, &self.outage[slot]),
            GridKind::Kappa => (&self.kappa_grid, &self.coverage[slot]),
        };
        let k = counts[idx];
        let (ci_low, ci_high) = wilson_interval(k, self.n, Z95);
        CurvePoint {
            member,
            kind,
            grid_value: grid[idx],
            estimate: if self.n == 0 { f64::NAN } else { k as f64 / self.n as f64 },
            ci_low,
            ci_high,
            n: self.n,
        }
    }

    /// Estimated `P_T(theta)` over the theta grid.
    pub fn outage_curve(&self, member: Member) -> Vec<CurvePoint> {
        (0..self.theta_grid.len())
            .map(|i| self.point(member, GridKind::Theta, i))
            .collect()
    }

    /// Estimated `R_C(kappa)` over the kappa grid.
    pub fn coverage_curve(&self, member: Member) -> Vec<CurvePoint> {
        (0..self.kappa_grid.len())
            .map(|i| self.point(member, GridKind::Kappa, i))
            .collect()
    }
}
