//! Monte Carlo orchestration: sweep points, snapshot generation per
//! mobility mode, and the output files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::antenna::AntennaConfig;
use crate::channel::{ChannelParams, FadingSampler};
use crate::config::{config_hash, MobilityMode, ScenarioConfig, SweepPoint};
use crate::error::{Result, SimError};
use crate::mac::{form_cluster, ClusterResult, LinkOptions, MacConfig};
use crate::metrics::{
    evaluate_snapshot, CurvePoint, Member, MetricAccumulator, RateMapping,
};
use crate::mobility::{warmup, TrafficState};
use crate::rng::{derive_seed, substream, Substream};
use crate::road::{assign_radio_marks, build_vehicles, sample_snapshot, tagged_receiver, RoadConfig, Snapshot};

pub const CSV_HEADER: &str =
    "sweep_id,lambda,psi_deg,member,grid_kind,grid_value,estimate,ci_low,ci_high,n_effective";

/// Snapshots per work unit when snapshots are independent.
const CHUNK: usize = 50;

/// Everything one slot needs besides the snapshot itself.
#[derive(Debug, Clone)]
pub struct SlotContext {
    pub tagged_lane: usize,
    pub mac: MacConfig,
    pub channel: ChannelParams,
    pub antenna: AntennaConfig,
    pub opts: LinkOptions,
    fading: FadingSampler,
    noise: f64,
}

impl SlotContext {
    pub fn new(
        tagged_lane: usize,
        mac: MacConfig,
        channel: ChannelParams,
        antenna: AntennaConfig,
        opts: LinkOptions,
    ) -> Result<Self> {
        let fading = channel.fading()?;
        let noise = channel.normalized_noise();
        Ok(SlotContext {
            tagged_lane,
            mac,
            channel,
            antenna,
            opts,
            fading,
            noise,
        })
    }

    /// Context for one sweep point of `cfg`.
    pub fn for_point(cfg: &ScenarioConfig, point: &SweepPoint) -> Result<Self> {
        SlotContext::new(
            cfg.tagged_lane,
            cfg.mac.clone(),
            cfg.channel.clone(),
            cfg.antenna.build(point.beamwidth_deg)?,
            LinkOptions {
                cars_block: cfg.cars_block,
            },
        )
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    /// Cluster of the tagged receiver with SINR evaluated, or `None` when
    /// the tagged lane has no receiver.
    pub fn run_slot(&self, snapshot: &Snapshot, slot_seed: u64) -> Result<Option<ClusterResult>> {
        let Some(rx) = tagged_receiver(snapshot, self.tagged_lane) else {
            return Ok(None);
        };
        let mut det_rng = substream(slot_seed, Substream::Detection);
        let mut cluster = form_cluster(
            rx,
            snapshot,
            &self.mac,
            &self.channel,
            &self.antenna,
            self.opts,
            &mut det_rng,
        )?;
        let mut fade_rng = substream(slot_seed, Substream::Fading);
        evaluate_snapshot(&mut cluster, self.noise, &self.fading, &mut fade_rng);
        Ok(Some(cluster))
    }
}

/// Result of one sweep point.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub point: SweepPoint,
    pub seed: u64,
    pub tagged_lane: usize,
    /// Intensity of the tagged lane.
    pub lambda: f64,
    pub threshold: f64,
    pub metrics: MetricAccumulator,
}

impl PointResult {
    pub fn outage(&self, member: Member) -> Vec<CurvePoint> {
        self.metrics.outage_curve(member)
    }

    pub fn coverage(&self, member: Member) -> Vec<CurvePoint> {
        self.metrics.coverage_curve(member)
    }
}

/// One unit of parallel work: a trace, or a chunk of independent snapshots.
#[derive(Debug, Clone, Copy)]
struct Unit {
    point: usize,
    index: usize,
    first: usize,
    count: usize,
}

fn units_for(cfg: &ScenarioConfig, point: usize) -> Vec<Unit> {
    let n = cfg.num_snapshots;
    let size = match cfg.mobility.mode {
        MobilityMode::Trace => cfg.mobility.snapshots_per_trace,
        MobilityMode::Off | MobilityMode::Redraw => CHUNK,
    };
    (0..n.div_ceil(size))
        .map(|index| {
            let first = index * size;
            Unit {
                point,
                index,
                first,
                count: size.min(n - first),
            }
        })
        .collect()
}

/// Seed of sweep point `index`; depends on nothing else.
pub fn point_seed(master_seed: u64, index: usize) -> u64 {
    derive_seed(master_seed, index as u64)
}

/// Snapshot seeds live in their own branch so they never collide with trace
/// seeds.
fn snapshot_seed(point_seed: u64, k: usize) -> u64 {
    derive_seed(derive_seed(point_seed, 0), k as u64)
}

fn trace_seed(point_seed: u64, t: usize) -> u64 {
    derive_seed(derive_seed(point_seed, 1), t as u64)
}

fn run_unit(
    cfg: &ScenarioConfig,
    road: &Arc<RoadConfig>,
    ctx: &SlotContext,
    seed: u64,
    unit: Unit,
    template: &MetricAccumulator,
) -> Result<MetricAccumulator> {
    let mut acc = template.empty_like();
    let sectors = ctx.antenna.num_sectors;
    let slot = |acc: &mut MetricAccumulator, snap: &Snapshot, slot_seed: u64| -> Result<()> {
        match ctx.run_slot(snap, slot_seed)? {
            Some(cluster) => acc.accumulate(&cluster),
            None => acc.record_no_receiver(),
        }
        Ok(())
    };
    match cfg.mobility.mode {
        MobilityMode::Off => {
            for k in unit.first..unit.first + unit.count {
                let s = snapshot_seed(seed, k);
                let snap = sample_snapshot(road.clone(), cfg.p_rx, sectors, s)?;
                slot(&mut acc, &snap, s)?;
            }
        }
        MobilityMode::Redraw => {
            for k in unit.first..unit.first + unit.count {
                let s = snapshot_seed(seed, k);
                let snap = sample_snapshot(road.clone(), cfg.p_rx, sectors, s)?;
                let mut mob = substream(s, Substream::Mobility);
                let snap = warmup(&snap, &cfg.mobility.krauss, &mut mob)?;
                slot(&mut acc, &snap, s)?;
            }
        }
        MobilityMode::Trace => {
            let t_seed = trace_seed(seed, unit.index);
            let initial = sample_snapshot(road.clone(), cfg.p_rx, sectors, t_seed)?;
            let params = &cfg.mobility.krauss;
            let mut mob = substream(t_seed, Substream::Mobility);
            let mut state = TrafficState::from_snapshot(&initial);
            state.run(params, params.steps_for(params.warmup_duration), &mut mob, |_| {})?;
            let between = params.steps_for(cfg.mobility.sample_interval);
            for j in 0..unit.count {
                if j > 0 {
                    state.run(params, between, &mut mob, |_| {})?;
                }
                let s = snapshot_seed(seed, unit.first + j);
                let snap = remark(&state, cfg.p_rx, sectors, s);
                slot(&mut acc, &snap, s)?;
            }
        }
    }
    Ok(acc)
}

/// Frozen trace state with fresh modes and steering; kinds stay fixed.
fn remark(state: &TrafficState, p_rx: f64, sectors: u32, seed: u64) -> Snapshot {
    let mut vehicles = build_vehicles(&state.lane_layout());
    assign_radio_marks(
        &mut vehicles,
        p_rx,
        sectors,
        &mut substream(seed, Substream::Modes),
        &mut substream(seed, Substream::Steering),
    );
    Snapshot {
        vehicles,
        road: state.road.clone(),
        seed,
    }
}

/// Runs every sweep point on `workers` threads (0 for the rayon default).
/// Output is identical for any worker count.
pub fn run_sweep(cfg: &ScenarioConfig, workers: usize) -> Result<Vec<PointResult>> {
    cfg.validate()?;
    let points = cfg.sweep_points();
    let rate = RateMapping {
        bandwidth: cfg.channel.bandwidth,
        divisor: if cfg.metrics.subslot_rate_scaling {
            cfg.mac.num_subslots as f64
        } else {
            1.0
        },
    };
    let template = MetricAccumulator::new(
        cfg.metrics.theta_grid.clone(),
        cfg.metrics.kappa_grid.clone(),
        rate,
    )
    .with_empty_as_outage(cfg.metrics.empty_cluster_as_outage);

    let prepared = points
        .iter()
        .map(|p| {
            let ctx = SlotContext::for_point(cfg, p)?;
            Ok((Arc::new(p.road.clone()), ctx, point_seed(cfg.master_seed, p.index)))
        })
        .collect::<Result<Vec<_>>>()?;
    let units: Vec<Unit> = (0..points.len()).flat_map(|i| units_for(cfg, i)).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SimError::InvalidArgument(format!("cannot build worker pool: {e}")))?;
    let partials: Vec<Result<MetricAccumulator>> = pool.install(|| {
        units
            .par_iter()
            .map(|u| {
                let (road, ctx, seed) = &prepared[u.point];
                run_unit(cfg, road, ctx, *seed, *u, &template)
            })
            .collect()
    });

    let mut totals: Vec<MetricAccumulator> = points.iter().map(|_| template.empty_like()).collect();
    for (u, part) in units.iter().zip(partials) {
        totals[u.point].merge(&part?);
    }
    points
        .into_iter()
        .zip(prepared)
        .zip(totals)
        .map(|((point, (_, ctx, seed)), metrics)| {
            Ok(PointResult {
                lambda: point.lambda(cfg.tagged_lane),
                tagged_lane: cfg.tagged_lane,
                threshold: cfg.mac.threshold(&ctx.channel, &ctx.antenna)?,
                point,
                seed,
                metrics,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Output files

#[derive(Debug, Clone, Serialize)]
pub struct PointManifest {
    pub sweep_id: usize,
    pub seed: u64,
    pub lambda: f64,
    pub psi_deg: f64,
    pub truck_fractions: Vec<f64>,
    pub snapshots: u64,
    pub evaluated: u64,
    pub skipped: u64,
    pub empty_clusters: u64,
    pub no_receiver: u64,
    pub truncations: u64,
    pub detection_threshold: f64,
}

/// Reproducibility record written next to the CSVs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config_sha256: String,
    pub code_version: String,
    pub master_seed: u64,
    pub num_snapshots: usize,
    pub workers: usize,
    pub wall_clock_s: f64,
    pub points: Vec<PointManifest>,
}

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

fn curve_rows(out: &mut String, r: &PointResult, curves: &[Vec<CurvePoint>]) {
    for c in curves.iter().flatten() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.point.index,
            r.lambda,
            r.point.beamwidth_deg,
            c.member.label(),
            c.kind.label(),
            c.grid_value,
            c.estimate,
            c.ci_low,
            c.ci_high,
            c.n
        );
    }
}

/// `R_C` rows; kappa in bits per second.
pub fn rc_csv(results: &[PointResult]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in results {
        curve_rows(&mut out, r, &[r.coverage(Member::Best), r.coverage(Member::Worst)]);
    }
    out
}

/// `P_T` rows; theta linear.
pub fn pt_csv(results: &[PointResult]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in results {
        curve_rows(&mut out, r, &[r.outage(Member::Best), r.outage(Member::Worst)]);
    }
    out
}

pub fn summary_csv(results: &[PointResult]) -> String {
    let mut out = String::from(
        "sweep_id,lambda,psi_deg,tagged_truck_fraction,snapshots,evaluated,skipped,empty_clusters,no_receiver,truncations,mean_cluster_size,detection_threshold\n",
    );
    for r in results {
        let c = &r.metrics.counters;
        let mean = if c.evaluated == 0 {
            f64::NAN
        } else {
            c.cluster_members as f64 / c.evaluated as f64
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.point.index,
            r.lambda,
            r.point.beamwidth_deg,
            r.point.road.truck_fractions[r.tagged_lane - 1],
            c.snapshots,
            c.evaluated,
            c.skipped(),
            c.empty_clusters,
            c.no_receiver,
            c.truncations,
            mean,
            r.threshold
        );
    }
    out
}

/// Fails early if `dir` cannot be created or written.
pub fn ensure_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"").map_err(|e| SimError::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| SimError::io(&probe, e))?;
    Ok(())
}

fn write(path: PathBuf, text: &str) -> Result<()> {
    fs::write(&path, text).map_err(|e| SimError::io(path, e))
}

/// Validates the output directory, runs the sweep and writes all
/// artifacts. Returns the manifest that was written.
pub fn simulate(cfg: &ScenarioConfig, out_dir: &Path, workers: usize) -> Result<(RunManifest, Vec<PointResult>)> {
    cfg.validate()?;
    ensure_writable(out_dir)?;
    let started = Instant::now();
    let results = run_sweep(cfg, workers)?;
    let elapsed = started.elapsed().as_secs_f64();

    let mut echo = cfg.clone();
    echo.output_dir = Some(out_dir.to_path_buf());
    let config_text = echo.canonical_toml();
    let manifest = RunManifest {
        config_sha256: config_hash(&config_text),
        code_version: CODE_VERSION.to_string(),
        master_seed: cfg.master_seed,
        num_snapshots: cfg.num_snapshots,
        workers,
        wall_clock_s: elapsed,
        points: results
            .iter()
            .map(|r| {
                let c = &r.metrics.counters;
                PointManifest {
                    sweep_id: r.point.index,
                    seed: r.seed,
                    lambda: r.lambda,
                    psi_deg: r.point.beamwidth_deg,
                    truck_fractions: r.point.road.truck_fractions.clone(),
                    snapshots: c.snapshots,
                    evaluated: c.evaluated,
                    skipped: c.skipped(),
                    empty_clusters: c.empty_clusters,
                    no_receiver: c.no_receiver,
                    truncations: c.truncations,
                    detection_threshold: r.threshold,
                }
            })
            .collect(),
    };
    write(out_dir.join("rc_curve.csv"), &rc_csv(&results))?;
    write(out_dir.join("pt_curve.csv"), &pt_csv(&results))?;
    write(out_dir.join("summary.csv"), &summary_csv(&results))?;
    write(out_dir.join("config.toml"), &config_text)?;
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write(out_dir.join("manifest.json"), &json)?;
    Ok((manifest, results))
}
