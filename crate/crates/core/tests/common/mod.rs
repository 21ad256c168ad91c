//! Reference implementations written independently of the library, used as
//! oracles by the integration tests and the acceptance harness.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use mmwave_highway::road::{Mode, RoadConfig, Snapshot, Vehicle, VehicleId, VehicleKind};
use rand::Rng;

pub const C0: f64 = 299_792_458.0;
pub const KB: f64 = 1.380_649e-23;

/// Free-space intercept at 1 m.
pub fn fspl_1m(f: f64) -> f64 {
    let x = C0 / (4.0 * PI * f);
    x * x
}

pub fn path_gain(r: f64, c: f64, alpha: f64) -> f64 {
    (c * r.powf(-alpha)).min(1.0)
}

pub fn noise(w: f64, nf_db: f64, pt: f64) -> f64 {
    KB * 290.0 * w * 10f64.powf(nf_db / 10.0) / pt
}

/// Main-lobe gain with unit average and side lobe `rho` times the main lobe.
pub fn main_gain(psi: f64, rho: f64) -> f64 {
    2.0 * PI / (psi + rho * (2.0 * PI - psi))
}

/// Angle folded into [-pi, pi).
fn fold(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a < -PI {
        a += 2.0 * PI;
    }
    if a >= PI {
        a -= 2.0 * PI;
    }
    a
}

/// Gain of an antenna steered to `sector` towards `bearing`: main lobe when
/// the bearing is within half a beamwidth of the sector center.
pub fn pattern(sector: u32, bearing: f64, psi: f64, offset: f64, g: f64, s: f64) -> f64 {
    let d = fold(bearing - (offset + sector as f64 * psi));
    if (-psi / 2.0..psi / 2.0).contains(&d) {
        g
    } else {
        s
    }
}

/// Sector whose center is closest to `bearing`.
pub fn aim(bearing: f64, psi: f64, offset: f64) -> u32 {
    let r = (2.0 * PI / psi).round() as u32;
    (0..r)
        .find(|&k| pattern(k, bearing, psi, offset, 1.0, 0.0) == 1.0)
        .expect("some sector contains every bearing")
}

/// Short-arc offset from `a` to `b` on a ring of length `l`.
pub fn arc(a: f64, b: f64, l: f64) -> f64 {
    let mut d = b - a;
    while d > l / 2.0 {
        d -= l;
    }
    while d <= -l / 2.0 {
        d += l;
    }
    d
}

#[derive(Debug, Clone, Copy)]
pub struct Box2 {
    pub cx: f64,
    pub cy: f64,
    pub hx: f64,
    pub hy: f64,
}

impl Box2 {
    /// Non-positive inside or on the boundary.
    pub fn signed(&self, x: f64, y: f64) -> f64 {
        ((x - self.cx).abs() - self.hx).max((y - self.cy).abs() - self.hy)
    }
}

/// Minimum signed distance from the segment to the box: dense sampling
/// followed by ternary refinement (the signed distance is convex along the
/// segment).
pub fn min_signed_distance(a: (f64, f64), b: (f64, f64), bx: &Box2, samples: usize) -> f64 {
    let at = |t: f64| bx.signed(a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
    let mut best = f64::INFINITY;
    let mut best_i = 0;
    for i in 0..=samples {
        let v = at(i as f64 / samples as f64);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let mut lo = (best_i.saturating_sub(1)) as f64 / samples as f64;
    let mut hi = ((best_i + 1).min(samples)) as f64 / samples as f64;
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if at(m1) <= at(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    best.min(at(0.5 * (lo + hi)))
}

/// Plain description of a vehicle for oracle scenarios.
#[derive(Debug, Clone, Copy)]
pub struct Spec {
    pub lane: usize,
    pub x: f64,
    pub truck: bool,
    pub rx: bool,
    pub sector: u32,
}

pub struct Scene {
    pub road: RoadConfig,
    pub vehicles: Vec<Spec>,
}

impl Scene {
    pub fn y(&self, lane: usize) -> f64 {
        (lane as f64 - 0.5) * self.road.lane_width
    }

    pub fn footprint(&self, v: &Spec) -> Box2 {
        let (len, wid) = if v.truck {
            (self.road.truck.length, self.road.truck.width)
        } else {
            (self.road.car.length, self.road.car.width)
        };
        Box2 {
            cx: v.x,
            cy: self.y(v.lane),
            hx: len / 2.0,
            hy: wid / 2.0,
        }
    }

    /// Minimum signed distance over all trucks other than the endpoints,
    /// in coordinates unwrapped around `a`.
    pub fn clearance(&self, a: usize, b: usize, samples: usize) -> f64 {
        let l = self.road.road_length;
        let va = &self.vehicles[a];
        let vb = &self.vehicles[b];
        let pa = (0.0, self.y(va.lane));
        let pb = (arc(va.x, vb.x, l), self.y(vb.lane));
        self.vehicles
            .iter()
            .enumerate()
            .filter(|(i, v)| *i != a && *i != b && v.truck)
            .map(|(_, v)| {
                let mut bx = self.footprint(v);
                bx.cx = arc(va.x, v.x, l);
                min_signed_distance(pa, pb, &bx, samples)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn los(&self, a: usize, b: usize, samples: usize) -> bool {
        self.clearance(a, b, samples) > 0.0
    }

    /// Library snapshot with ids equal to indices in `vehicles`.
    pub fn snapshot(&self) -> Snapshot {
        let vehicles = self
            .vehicles
            .iter()
            .enumerate()
            .map(|(i, v)| Vehicle {
                id: VehicleId(i as u32),
                lane: v.lane,
                position: v.x.rem_euclid(self.road.road_length),
                kind: if v.truck { VehicleKind::Truck } else { VehicleKind::Car },
                mode: if v.truck {
                    Mode::Inactive
                } else if v.rx {
                    Mode::Rx
                } else {
                    Mode::Tx
                },
                boresight: (!v.truck).then_some(v.sector),
            })
            .collect();
        Snapshot {
            vehicles,
            road: Arc::new(self.road.clone()),
            seed: 0,
        }
    }

    pub fn overlaps(&self) -> bool {
        let l = self.road.road_length;
        for (i, a) in self.vehicles.iter().enumerate() {
            for b in &self.vehicles[i + 1..] {
                if a.lane != b.lane {
                    continue;
                }
                let (fa, fb) = (self.footprint(a), self.footprint(b));
                if arc(a.x, b.x, l).abs() < fa.hx + fb.hx {
                    return true;
                }
            }
        }
        false
    }
}

/// Radio parameters of the oracle SINR computation.
#[derive(Debug, Clone, Copy)]
pub struct Radio {
    pub psi: f64,
    pub offset: f64,
    pub main: f64,
    pub side: f64,
    pub c: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSlot {
    /// `(index, sinr)` for every cluster member, in index order.
    pub members: Vec<(usize, f64)>,
    pub interference: f64,
}

/// SINR of every cluster member at receiver `o` with fading `h[j]`.
pub fn brute_force_sinr(scene: &Scene, o: usize, radio: &Radio, h: &[f64]) -> OracleSlot {
    let l = scene.road.road_length;
    let rx = &scene.vehicles[o];
    let mut members = Vec::new();
    let mut interference = 0.0;
    let mut signals = Vec::new();
    for (j, v) in scene.vehicles.iter().enumerate() {
        if j == o || v.truck || v.rx {
            continue;
        }
        let dx = arc(v.x, rx.x, l);
        let dy = scene.y(rx.lane) - scene.y(v.lane);
        let r = (dx * dx + dy * dy).sqrt();
        let bearing = dy.atan2(dx);
        let delta = pattern(v.sector, bearing, radio.psi, radio.offset, radio.main, radio.side)
            * pattern(rx.sector, bearing + PI, radio.psi, radio.offset, radio.main, radio.side);
        let los = scene.los(j, o, 10_000);
        let p = if los { delta * path_gain(r, radio.c, radio.alpha) } else { 0.0 };
        if los && p > 0.0 && p >= radio.threshold {
            signals.push((j, h[j] * p));
        } else {
            interference += h[j] * p;
        }
    }
    for (j, s) in signals {
        members.push((j, s / (radio.sigma + interference)));
    }
    OracleSlot {
        members,
        interference,
    }
}

/// A random 4 to 8 vehicle scene around the receiver (index 0, lane 2)
/// with at least one transmitter aimed at it.
pub fn random_scene<R: Rng>(rng: &mut R, psi: f64) -> Scene {
    let road = RoadConfig::default();
    let x0 = rng.random_range(0.0..road.road_length);
    loop {
        let n = rng.random_range(4..=8);
        let mut vs = vec![Spec {
            lane: 2,
            x: x0,
            truck: false,
            rx: true,
            sector: 0,
        }];
        for _ in 1..n {
            vs.push(Spec {
                lane: rng.random_range(1..=4),
                x: x0 + rng.random_range(-120.0..120.0),
                truck: rng.random::<f64>() < 0.25,
                rx: rng.random::<f64>() < 0.2,
                sector: rng.random_range(0..(2.0 * PI / psi).round() as u32),
            });
        }
        let scene = Scene { road: road.clone(), vehicles: vs };
        if scene.overlaps() {
            continue;
        }
        let mut scene = scene;
        // point the receiver and one transmitter at each other
        let Some(t) = (1..n).find(|&j| !scene.vehicles[j].truck && !scene.vehicles[j].rx) else {
            continue;
        };
        let tx = scene.vehicles[t];
        let dx = arc(tx.x, x0, road.road_length);
        let dy = scene.y(2) - scene.y(tx.lane);
        let bearing = dy.atan2(dx);
        scene.vehicles[t].sector = aim(bearing, psi, 0.0);
        scene.vehicles[0].sector = aim(bearing + PI, psi, 0.0);
        return scene;
    }
}

/// Lanczos approximation of ln Gamma(x), x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = G[0];
    let t = x + 7.5;
    for (i, g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized lower incomplete gamma P(s, x) by its power series.
pub fn lower_gamma_p(s: f64, x: f64) -> f64 {
    let mut term = 1.0 / s;
    let mut sum = term;
    for k in 1..500 {
        term *= x / (s + k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    (s * x.ln() - x - ln_gamma(s)).exp() * sum
}

/// Endpoints plus up to six trucks around the link, anywhere on the ring.
pub fn random_los_case<R: Rng>(rng: &mut R) -> Scene {
    let road = mmwave_highway::road::RoadConfig::default();
    let base = rng.random_range(0.0..road.road_length);
    let len = rng.random_range(-150.0..150.0);
    let mut vehicles = vec![
        Spec { lane: rng.random_range(1..=4), x: base, truck: false, rx: true, sector: 0 },
        Spec { lane: rng.random_range(1..=4), x: base + len, truck: false, rx: false, sector: 0 },
    ];
    for _ in 0..rng.random_range(0..=6) {
        vehicles.push(Spec {
            lane: rng.random_range(1..=4),
            x: base + rng.random_range(-0.2..1.2) * len,
            truck: true,
            rx: false,
            sector: 0,
        });
    }
    Scene { road, vehicles }
}

/// Runs `n` random cases against the oracle; returns (agreeing, excluded
/// as tangent, blocked).
pub fn check_los_cases(n: usize, seed: u64) -> (usize, usize, usize) {
    let mut rng = mmwave_highway::rng::stream(seed);
    let (mut agree, mut excluded, mut blocked) = (0, 0, 0);
    let mut checked = 0;
    while checked < n {
        let scene = random_los_case(&mut rng);
        if scene.overlaps() || scene.vehicles[0].x == scene.vehicles[1].x && scene.vehicles[0].lane == scene.vehicles[1].lane {
            continue;
        }
        checked += 1;
        let clearance = scene.clearance(0, 1, 10_000);
        if clearance.abs() < 1e-9 {
            excluded += 1;
            continue;
        }
        let want = clearance > 0.0;
        let snap = scene.snapshot();
        let (a, b) = (&snap.vehicles[0], &snap.vehicles[1]);
        let direct = mmwave_highway::blockage::is_los(a, b, &snap).unwrap();
        let reverse = mmwave_highway::blockage::is_los(b, a, &snap).unwrap();
        let idx = mmwave_highway::blockage::LosIndex::new(&snap, a, false);
        let dx = snap.road.ring_offset(a.position, b.position);
        let indexed = idx.is_los_to(b.id, dx, snap.road.lane_center(b.lane));
        if direct == want && reverse == want && indexed == want {
            agree += 1;
        }
        if !want {
            blocked += 1;
        }
    }
    (agree, excluded, blocked)
}


/// Oracle radio matching the library defaults at beamwidth `psi_deg`.
pub fn radio(psi_deg: f64) -> Radio {
    let psi = psi_deg.to_radians();
    let main = main_gain(psi, 0.01);
    let c = fspl_1m(28e9);
    Radio {
        psi,
        offset: 0.0,
        main,
        side: 0.01 * main,
        c,
        alpha: 2.6,
        sigma: noise(2.16e9, 9.0, 1.0),
        threshold: main * main * path_gain(100.0, c, 2.6),
    }
}

/// Deterministic fading marks in [0.2, 3.2).
pub fn pinned(n: usize) -> Vec<f64> {
    (0..n).map(|j| 0.2 + 3.0 * ((j as f64 + 1.0) * 0.618_033_988_75).fract()).collect()
}

/// Library SINR per member index, sorted by index, plus best and worst.
pub fn library(scene: &Scene, psi_deg: f64, h: &[f64]) -> (Vec<(usize, f64)>, Option<usize>, Option<usize>) {
    use mmwave_highway::antenna::AntennaConfig;
    use mmwave_highway::channel::ChannelParams;
    use mmwave_highway::mac::{form_cluster, LinkOptions, MacConfig};
    use mmwave_highway::metrics::{evaluate_with_fading, Evaluation};

    let snap = scene.snapshot();
    let antenna = AntennaConfig::normalized((360.0 / psi_deg) as u32, Some(20.0)).unwrap();
    let ch = ChannelParams::default();
    let mut cluster = form_cluster(
        &snap.vehicles[0],
        &snap,
        &MacConfig::default(),
        &ch,
        &antenna,
        LinkOptions::default(),
        &mut mmwave_highway::rng::stream(0),
    )
    .unwrap();
    let ev = evaluate_with_fading(&mut cluster, ch.normalized_noise(), |id: VehicleId| h[id.0 as usize]);
    let mut out: Vec<(usize, f64)> = cluster.samples.iter().map(|s| (s.member.0 as usize, s.sinr)).collect();
    out.sort_by_key(|p| p.0);
    if ev == Evaluation::Skipped {
        assert!(out.is_empty());
    }
    (
        out,
        cluster.best.map(|v| v.0 as usize),
        cluster.worst.map(|v| v.0 as usize),
    )
}

/// Compares library and brute-force SINR on `n` random scenes alternating
/// 45 and 90 degree beams; returns the number of non-empty clusters.
pub fn check_sinr_scenes(n: usize, seed: u64) -> Result<usize, String> {
    let mut rng = mmwave_highway::rng::stream(seed);
    let mut nonempty = 0;
    for i in 0..n {
        let psi_deg: f64 = if i % 2 == 0 { 45.0 } else { 90.0 };
        let scene = random_scene(&mut rng, psi_deg.to_radians());
        let h = pinned(scene.vehicles.len());
        let want = brute_force_sinr(&scene, 0, &radio(psi_deg), &h);
        let (got, best, worst) = library(&scene, psi_deg, &h);
        let ids = |v: &[(usize, f64)]| v.iter().map(|p| p.0).collect::<Vec<_>>();
        if ids(&got) != ids(&want.members) {
            return Err(format!("scene {i}: members {:?} vs {:?}", ids(&got), ids(&want.members)));
        }
        for ((_, a), (_, b)) in got.iter().zip(&want.members) {
            if (a / b - 1.0).abs() >= 1e-12 {
                return Err(format!("scene {i}: sinr {a} vs {b}"));
            }
        }
        if want.members.is_empty() {
            continue;
        }
        nonempty += 1;
        let sinr = |id: Option<usize>| id.and_then(|id| want.members.iter().find(|p| p.0 == id)).map(|p| p.1);
        let max = want.members.iter().map(|p| p.1).fold(f64::MIN, f64::max);
        let min = want.members.iter().map(|p| p.1).fold(f64::MAX, f64::min);
        if sinr(best) != Some(max) || sinr(worst) != Some(min) {
            return Err(format!("scene {i}: best/worst selection differs"));
        }
    }
    Ok(nonempty)
}
