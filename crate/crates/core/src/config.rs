//! Scenario configuration: the TOML file format, defaults and validation.
//!
//! Parsing never stops at the first problem. Unknown keys, type errors in
//! each section, missing required fields and every semantic violation are
//! collected and reported together.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::antenna::{sectors_for_beamwidth_deg, AntennaConfig};
use crate::channel::{db_to_linear, free_space_intercept, ChannelParams};
use crate::error::{Result, SimError};
use crate::mac::MacConfig;
use crate::metrics::{default_kappa_grid, default_theta_grid};
use crate::mobility::KraussParams;
use crate::road::{Footprint, RoadConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MobilityMode {
    /// Hard-core Poisson snapshots, no car following.
    Off,
    /// A few long Krauss traces sampled at a fixed interval.
    Trace,
    /// Every snapshot gets its own warmed-up trace.
    Redraw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobilityConfig {
    pub mode: MobilityMode,
    pub krauss: KraussParams,
    /// Seconds between consecutive snapshots of one trace.
    pub sample_interval: f64,
    pub snapshots_per_trace: usize,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        MobilityConfig {
            mode: MobilityMode::Trace,
            krauss: KraussParams::default(),
            sample_interval: 10.0,
            snapshots_per_trace: 100,
        }
    }
}

/// Antenna settings before the beamwidth of a sweep point is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct AntennaSpec {
    pub beamwidth_deg: f64,
    /// Side-lobe level below the main lobe; `None` for no side lobe.
    pub sidelobe_db: Option<f64>,
    /// Explicit `(main, side)` gains instead of the normalized pattern.
    pub explicit_gains: Option<(f64, f64)>,
    pub boresight_offset_deg: f64,
}

impl Default for AntennaSpec {
    fn default() -> Self {
        AntennaSpec {
            beamwidth_deg: 45.0,
            sidelobe_db: Some(20.0),
            explicit_gains: None,
            boresight_offset_deg: 0.0,
        }
    }
}

impl AntennaSpec {
    pub fn build(&self, beamwidth_deg: f64) -> Result<AntennaConfig> {
        let sectors = sectors_for_beamwidth_deg(beamwidth_deg)?;
        let cfg = match self.explicit_gains {
            Some((main, side)) => AntennaConfig::explicit(sectors, main, side)?,
            None => AntennaConfig::normalized(sectors, self.sidelobe_db)?,
        };
        Ok(cfg.with_offset(self.boresight_offset_deg.to_radians()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsConfig {
    pub theta_grid: Vec<f64>,
    /// Bits per second.
    pub kappa_grid: Vec<f64>,
    pub subslot_rate_scaling: bool,
    pub empty_cluster_as_outage: bool,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            theta_grid: default_theta_grid(),
            kappa_grid: default_kappa_grid(),
            subslot_rate_scaling: false,
            empty_cluster_as_outage: false,
        }
    }
}

/// Overrides swept as a cartesian product. An empty list keeps the base
/// value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepSpec {
    /// Per-meter intensity applied to every lane.
    pub lambdas: Vec<f64>,
    pub beamwidths_deg: Vec<f64>,
    pub truck_fractions: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub road: RoadConfig,
    pub p_rx: f64,
    /// Lane of the measured receiver (1-based).
    pub tagged_lane: usize,
    pub mobility: MobilityConfig,
    pub channel: ChannelParams,
    pub antenna: AntennaSpec,
    pub mac: MacConfig,
    pub metrics: MetricsConfig,
    pub cars_block: bool,
    pub sweep: SweepSpec,
    pub num_snapshots: usize,
    pub master_seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            road: RoadConfig::default(),
            p_rx: 0.5,
            tagged_lane: 2,
            mobility: MobilityConfig::default(),
            channel: ChannelParams::default(),
            antenna: AntennaSpec::default(),
            mac: MacConfig::default(),
            metrics: MetricsConfig::default(),
            cars_block: false,
            sweep: SweepSpec::default(),
            num_snapshots: 5000,
            master_seed: 1,
            output_dir: None,
        }
    }
}

/// One combination of swept values.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub road: RoadConfig,
    pub beamwidth_deg: f64,
}

impl SweepPoint {
    /// Intensity of the tagged lane, used to label output rows.
    pub fn lambda(&self, tagged_lane: usize) -> f64 {
        self.road.lane_intensities[tagged_lane - 1]
    }
}

impl ScenarioConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut errs = self.road.violations();
        errs.extend(self.mobility.krauss.violations());
        errs.extend(self.channel.violations());
        errs.extend(self.mac.violations());
        if !(0.0..=1.0).contains(&self.p_rx) {
            errs.push(format!("road.p_rx must be in [0, 1], got {}", self.p_rx));
        }
        if self.tagged_lane < 1 || self.tagged_lane > self.road.num_lanes {
            errs.push(format!(
                "run.tagged_lane must be in 1..={}, got {}",
                self.road.num_lanes, self.tagged_lane
            ));
        }
        if self.num_snapshots < 1 {
            errs.push("run.num_snapshots must be >= 1".to_string());
        }
        if !(self.mobility.sample_interval > 0.0) {
            errs.push(format!(
                "mobility.sample_interval_s must be > 0, got {}",
                self.mobility.sample_interval
            ));
        }
        if self.mobility.snapshots_per_trace < 1 {
            errs.push("mobility.snapshots_per_trace must be >= 1".to_string());
        }
        let mut psis = vec![("antenna.beamwidth_deg".to_string(), self.antenna.beamwidth_deg)];
        psis.extend(
            self.sweep
                .beamwidths_deg
                .iter()
                .enumerate()
                .map(|(i, &p)| (format!("sweep.beamwidths_deg[{i}]"), p)),
        );
        for (name, psi) in psis {
            match self.antenna.build(psi) {
                Ok(a) => errs.extend(a.violations()),
                Err(e) => errs.push(format!("{name}: {e}")),
            }
        }
        if let Some(db) = self.antenna.sidelobe_db {
            if !(db >= 0.0) {
                errs.push(format!("antenna.sidelobe_db must be >= 0, got {db}"));
            }
        }
        if !self.antenna.boresight_offset_deg.is_finite() {
            errs.push("antenna.boresight_offset_deg must be finite".to_string());
        }
        for (name, grid) in [
            ("metrics.theta_grid", &self.metrics.theta_grid),
            ("metrics.kappa_grid_gbps", &self.metrics.kappa_grid),
        ] {
            if grid.is_empty() {
                errs.push(format!("{name} must not be empty"));
            }
            if !grid.windows(2).all(|w| w[0] < w[1]) {
                errs.push(format!("{name} must be strictly increasing"));
            }
            if grid.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                errs.push(format!("{name} values must be positive and finite"));
            }
        }
        for (i, &l) in self.sweep.lambdas.iter().enumerate() {
            if !(l > 0.0) {
                errs.push(format!("sweep.lambdas[{i}] must be > 0, got {l}"));
            }
        }
        for (i, eps) in self.sweep.truck_fractions.iter().enumerate() {
            if eps.len() != self.road.num_lanes {
                errs.push(format!(
                    "sweep.truck_fractions[{i}] has {} entries but num_lanes is {}",
                    eps.len(),
                    self.road.num_lanes
                ));
            }
            if eps.iter().any(|e| !(0.0..=1.0).contains(e)) {
                errs.push(format!("sweep.truck_fractions[{i}] values must be in [0, 1]"));
            }
        }
        errs
    }

    pub fn validate(&self) -> Result<()> {
        let errs = self.violations();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(SimError::Rejected(errs))
        }
    }

    /// Sweep points in output order: beamwidth outermost, then intensity,
    /// then truck mix.
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        let psis = if self.sweep.beamwidths_deg.is_empty() {
            vec![self.antenna.beamwidth_deg]
        } else {
            self.sweep.beamwidths_deg.clone()
        };
        let lambdas: Vec<Option<f64>> = if self.sweep.lambdas.is_empty() {
            vec![None]
        } else {
            self.sweep.lambdas.iter().copied().map(Some).collect()
        };
        let eps_sets: Vec<Option<&Vec<f64>>> = if self.sweep.truck_fractions.is_empty() {
            vec![None]
        } else {
            self.sweep.truck_fractions.iter().map(Some).collect()
        };
        let mut out = Vec::new();
        for &psi in &psis {
            for &lambda in &lambdas {
                for eps in &eps_sets {
                    let mut road = match lambda {
                        Some(l) => self.road.with_uniform_intensity(l),
                        None => self.road.clone(),
                    };
                    if let Some(eps) = eps {
                        road.truck_fractions = (*eps).clone();
                    }
                    out.push(SweepPoint {
                        index: out.len(),
                        road,
                        beamwidth_deg: psi,
                    });
                }
            }
        }
        out
    }

    /// Fully populated file form, with every default spelled out.
    pub fn to_file(&self) -> ConfigFile {
        let k = &self.mobility.krauss;
        ConfigFile {
            run: Some(RunSection {
                num_snapshots: Some(self.num_snapshots),
                master_seed: Some(self.master_seed),
                tagged_lane: Some(self.tagged_lane),
                output_dir: self.output_dir.clone(),
            }),
            road: Some(RoadSection {
                road_length_m: Some(self.road.road_length),
                num_lanes: Some(self.road.num_lanes),
                lane_width_m: Some(self.road.lane_width),
                lane_intensities_per_m: Some(self.road.lane_intensities.clone()),
                truck_fractions: Some(self.road.truck_fractions.clone()),
                car_length_m: Some(self.road.car.length),
                car_width_m: Some(self.road.car.width),
                truck_length_m: Some(self.road.truck.length),
                truck_width_m: Some(self.road.truck.width),
                min_gap_m: Some(self.road.min_gap),
                p_rx: Some(self.p_rx),
            }),
            mobility: Some(MobilitySection {
                mode: Some(self.mobility.mode),
                max_speed_car_kmh: Some(k.max_speed_car * 3.6),
                max_speed_truck_kmh: Some(k.max_speed_truck * 3.6),
                max_accel: Some(k.max_accel),
                max_decel: Some(k.max_decel),
                driver_imperfection: Some(k.driver_imperfection),
                reaction_time_s: Some(k.reaction_time),
                time_step_s: Some(k.time_step),
                warmup_s: Some(k.warmup_duration),
                sample_interval_s: Some(self.mobility.sample_interval),
                snapshots_per_trace: Some(self.mobility.snapshots_per_trace),
            }),
            channel: Some(ChannelSection {
                carrier_frequency_hz: Some(self.channel.carrier_frequency),
                bandwidth_hz: Some(self.channel.bandwidth),
                pathloss_intercept: Some(InterceptSpec::Linear(self.channel.intercept)),
                pathloss_exponent: Some(self.channel.pathloss_exponent),
                nakagami_m: Some(self.channel.nakagami_m),
                tx_power_w: Some(self.channel.tx_power),
                noise_figure_db: Some(self.channel.noise_figure_db),
                normalize_fading_power: Some(self.channel.normalize_fading_power),
            }),
            antenna: Some(AntennaSection {
                beamwidth_deg: Some(self.antenna.beamwidth_deg),
                sidelobe_db: Some(match self.antenna.sidelobe_db {
                    Some(db) => SidelobeSpec::Db(db),
                    None => SidelobeSpec::Text("none".into()),
                }),
                main_gain: self.antenna.explicit_gains.map(|g| g.0),
                side_gain: self.antenna.explicit_gains.map(|g| g.1),
                boresight_offset_deg: Some(self.antenna.boresight_offset_deg),
            }),
            mac: Some(MacSection {
                slot_duration_s: Some(self.mac.slot_duration),
                num_subslots: Some(self.mac.num_subslots),
                coverage_design_range_m: Some(self.mac.coverage_design_range),
                detection_threshold: self.mac.detection_threshold,
                fading_in_detection: Some(self.mac.fading_in_detection),
            }),
            metrics: Some(MetricsSection {
                theta_grid: Some(self.metrics.theta_grid.clone()),
                kappa_grid_gbps: Some(self.metrics.kappa_grid.iter().map(|k| k / 1e9).collect()),
                subslot_rate_scaling: Some(self.metrics.subslot_rate_scaling),
                empty_cluster_as_outage: Some(self.metrics.empty_cluster_as_outage),
            }),
            blockage: Some(BlockageSection {
                cars_block: Some(self.cars_block),
            }),
            sweep: Some(SweepSection {
                lambdas: Some(self.sweep.lambdas.clone()),
                beamwidths_deg: Some(self.sweep.beamwidths_deg.clone()),
                truck_fractions: Some(self.sweep.truck_fractions.clone()),
            }),
        }
    }

    /// Canonical TOML text of the fully populated configuration.
    pub fn canonical_toml(&self) -> String {
        toml::to_string(&self.to_file()).expect("config serializes")
    }
}

/// SHA-256 of a configuration text, hex encoded.
pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

// ---------------------------------------------------------------------------
// File form

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<RunSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub road: Option<RoadSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mobility: Option<MobilitySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub antenna: Option<AntennaSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mac: Option<MacSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blockage: Option<BlockageSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSection {
    pub num_snapshots: Option<usize>,
    pub master_seed: Option<u64>,
    pub tagged_lane: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RoadSection {
    pub road_length_m: Option<f64>,
    pub num_lanes: Option<usize>,
    pub lane_width_m: Option<f64>,
    pub lane_intensities_per_m: Option<Vec<f64>>,
    pub truck_fractions: Option<Vec<f64>>,
    pub car_length_m: Option<f64>,
    pub car_width_m: Option<f64>,
    pub truck_length_m: Option<f64>,
    pub truck_width_m: Option<f64>,
    pub min_gap_m: Option<f64>,
    pub p_rx: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MobilitySection {
    pub mode: Option<MobilityMode>,
    pub max_speed_car_kmh: Option<f64>,
    pub max_speed_truck_kmh: Option<f64>,
    pub max_accel: Option<f64>,
    pub max_decel: Option<f64>,
    pub driver_imperfection: Option<f64>,
    pub reaction_time_s: Option<f64>,
    pub time_step_s: Option<f64>,
    pub warmup_s: Option<f64>,
    pub sample_interval_s: Option<f64>,
    pub snapshots_per_trace: Option<usize>,
}

/// `7.26e-7` (linear), `"-61.4 dB"`, or `"fspl@1m"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InterceptSpec {
    Linear(f64),
    Text(String),
}

impl InterceptSpec {
    fn resolve(&self, carrier_frequency: f64) -> std::result::Result<f64, String> {
        match self {
            InterceptSpec::Linear(v) => Ok(*v),
            InterceptSpec::Text(t) => {
                let t = t.trim();
                if t.eq_ignore_ascii_case("fspl@1m") {
                    return Ok(free_space_intercept(carrier_frequency));
                }
                let lower = t.to_ascii_lowercase();
                match lower.strip_suffix("db").map(str::trim).map(str::parse::<f64>) {
                    Some(Ok(db)) => Ok(db_to_linear(db)),
                    _ => Err(format!(
                        "channel.pathloss_intercept: expected a number, \"<x> dB\" or \"fspl@1m\", got {t:?}"
                    )),
                }
            }
        }
    }
}

/// Side-lobe level in dB below the main lobe, or `"none"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SidelobeSpec {
    Db(f64),
    Text(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelSection {
    pub carrier_frequency_hz: Option<f64>,
    pub bandwidth_hz: Option<f64>,
    pub pathloss_intercept: Option<InterceptSpec>,
    pub pathloss_exponent: Option<f64>,
    pub nakagami_m: Option<f64>,
    pub tx_power_w: Option<f64>,
    pub noise_figure_db: Option<f64>,
    pub normalize_fading_power: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AntennaSection {
    pub beamwidth_deg: Option<f64>,
    pub sidelobe_db: Option<SidelobeSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub main_gain: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side_gain: Option<f64>,
    pub boresight_offset_deg: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MacSection {
    pub slot_duration_s: Option<f64>,
    pub num_subslots: Option<usize>,
    pub coverage_design_range_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection_threshold: Option<f64>,
    pub fading_in_detection: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsSection {
    pub theta_grid: Option<Vec<f64>>,
    pub kappa_grid_gbps: Option<Vec<f64>>,
    pub subslot_rate_scaling: Option<bool>,
    pub empty_cluster_as_outage: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BlockageSection {
    pub cars_block: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepSection {
    pub lambdas: Option<Vec<f64>>,
    pub beamwidths_deg: Option<Vec<f64>>,
    pub truck_fractions: Option<Vec<Vec<f64>>>,
}

const SECTIONS: [&str; 9] = [
    "run", "road", "mobility", "channel", "antenna", "mac", "metrics", "blockage", "sweep",
];

fn section<T>(table: &toml::Table, name: &str, errs: &mut Vec<String>) -> Option<T>
where
    T: for<'de> Deserialize<'de>,
{
    let value = table.get(name)?.clone();
    let mut unknown = Vec::new();
    let parsed: std::result::Result<T, _> = serde_ignored::deserialize(value, |path| {
        unknown.push(format!("{name}.{path}"));
    });
    for key in unknown {
        errs.push(format!("unknown key `{key}`"));
    }
    match parsed {
        Ok(v) => Some(v),
        Err(e) => {
            errs.push(format!("[{name}] {e}"));
            None
        }
    }
}

/// Parses and validates configuration text. Defaults fill every optional
/// field; the returned error lists all problems found.
pub fn validate_config(raw: &str) -> std::result::Result<ScenarioConfig, Vec<String>> {
    let table: toml::Table = raw.parse().map_err(|e: toml::de::Error| vec![format!("syntax: {e}")])?;
    let mut errs = Vec::new();
    for key in table.keys() {
        if !SECTIONS.contains(&key.as_str()) {
            errs.push(format!("unknown section `{key}`"));
        }
    }
    let file = ConfigFile {
        run: section(&table, "run", &mut errs),
        road: section(&table, "road", &mut errs),
        mobility: section(&table, "mobility", &mut errs),
        channel: section(&table, "channel", &mut errs),
        antenna: section(&table, "antenna", &mut errs),
        mac: section(&table, "mac", &mut errs),
        metrics: section(&table, "metrics", &mut errs),
        blockage: section(&table, "blockage", &mut errs),
        sweep: section(&table, "sweep", &mut errs),
    };
    let cfg = from_file(&file, &table, &mut errs);
    errs.extend(cfg.violations());
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(errs)
    }
}

fn from_file(file: &ConfigFile, table: &toml::Table, errs: &mut Vec<String>) -> ScenarioConfig {
    let d = ScenarioConfig::default();
    let run = file.run.clone().unwrap_or_default();
    let road = file.road.clone().unwrap_or_default();
    let mob = file.mobility.clone().unwrap_or_default();
    let ch = file.channel.clone().unwrap_or_default();
    let ant = file.antenna.clone().unwrap_or_default();
    let mac = file.mac.clone().unwrap_or_default();
    let met = file.metrics.clone().unwrap_or_default();
    let blk = file.blockage.clone().unwrap_or_default();
    let sw = file.sweep.clone().unwrap_or_default();

    // A section that failed to parse already produced an error; do not pile
    // "missing field" reports on top of it.
    let road_parsed = file.road.is_some() || !table.contains_key("road");
    let lane_intensities = road.lane_intensities_per_m.unwrap_or_else(|| {
        if road_parsed {
            errs.push("missing required field `road.lane_intensities_per_m`".to_string());
        }
        Vec::new()
    });
    let truck_fractions = road.truck_fractions.unwrap_or_else(|| {
        if road_parsed {
            errs.push("missing required field `road.truck_fractions`".to_string());
        }
        Vec::new()
    });

    let carrier = ch.carrier_frequency_hz.unwrap_or(d.channel.carrier_frequency);
    let intercept = match &ch.pathloss_intercept {
        None => free_space_intercept(carrier),
        Some(spec) => spec.resolve(carrier).unwrap_or_else(|e| {
            errs.push(e);
            d.channel.intercept
        }),
    };
    let sidelobe_db = match &ant.sidelobe_db {
        None => d.antenna.sidelobe_db,
        Some(SidelobeSpec::Db(db)) => Some(*db),
        Some(SidelobeSpec::Text(t)) if t.eq_ignore_ascii_case("none") => None,
        Some(SidelobeSpec::Text(t)) => {
            errs.push(format!("antenna.sidelobe_db: expected a number or \"none\", got {t:?}"));
            d.antenna.sidelobe_db
        }
    };
    let explicit_gains = match (ant.main_gain, ant.side_gain) {
        (Some(m), Some(s)) => Some((m, s)),
        (None, None) => None,
        _ => {
            errs.push("antenna.main_gain and antenna.side_gain must be given together".to_string());
            None
        }
    };
    let dk = &d.mobility.krauss;

    ScenarioConfig {
        road: RoadConfig {
            road_length: road.road_length_m.unwrap_or(d.road.road_length),
            num_lanes: road.num_lanes.unwrap_or(d.road.num_lanes),
            lane_width: road.lane_width_m.unwrap_or(d.road.lane_width),
            lane_intensities,
            truck_fractions,
            car: Footprint {
                length: road.car_length_m.unwrap_or(d.road.car.length),
                width: road.car_width_m.unwrap_or(d.road.car.width),
            },
            truck: Footprint {
                length: road.truck_length_m.unwrap_or(d.road.truck.length),
                width: road.truck_width_m.unwrap_or(d.road.truck.width),
            },
            min_gap: road.min_gap_m.unwrap_or(d.road.min_gap),
        },
        p_rx: road.p_rx.unwrap_or(d.p_rx),
        tagged_lane: run.tagged_lane.unwrap_or(d.tagged_lane),
        mobility: MobilityConfig {
            mode: mob.mode.unwrap_or(d.mobility.mode),
            krauss: KraussParams {
                max_speed_car: mob.max_speed_car_kmh.map(|v| v / 3.6).unwrap_or(dk.max_speed_car),
                max_speed_truck: mob.max_speed_truck_kmh.map(|v| v / 3.6).unwrap_or(dk.max_speed_truck),
                max_accel: mob.max_accel.unwrap_or(dk.max_accel),
                max_decel: mob.max_decel.unwrap_or(dk.max_decel),
                driver_imperfection: mob.driver_imperfection.unwrap_or(dk.driver_imperfection),
                reaction_time: mob.reaction_time_s.unwrap_or(dk.reaction_time),
                time_step: mob.time_step_s.unwrap_or(dk.time_step),
                warmup_duration: mob.warmup_s.unwrap_or(dk.warmup_duration),
            },
            sample_interval: mob.sample_interval_s.unwrap_or(d.mobility.sample_interval),
            snapshots_per_trace: mob.snapshots_per_trace.unwrap_or(d.mobility.snapshots_per_trace),
        },
        channel: ChannelParams {
            carrier_frequency: carrier,
            bandwidth: ch.bandwidth_hz.unwrap_or(d.channel.bandwidth),
            intercept,
            pathloss_exponent: ch.pathloss_exponent.unwrap_or(d.channel.pathloss_exponent),
            nakagami_m: ch.nakagami_m.unwrap_or(d.channel.nakagami_m),
            tx_power: ch.tx_power_w.unwrap_or(d.channel.tx_power),
            noise_figure_db: ch.noise_figure_db.unwrap_or(d.channel.noise_figure_db),
            normalize_fading_power: ch.normalize_fading_power.unwrap_or(d.channel.normalize_fading_power),
        },
        antenna: AntennaSpec {
            beamwidth_deg: ant.beamwidth_deg.unwrap_or(d.antenna.beamwidth_deg),
            sidelobe_db,
            explicit_gains,
            boresight_offset_deg: ant.boresight_offset_deg.unwrap_or(d.antenna.boresight_offset_deg),
        },
        mac: MacConfig {
            slot_duration: mac.slot_duration_s.unwrap_or(d.mac.slot_duration),
            num_subslots: mac.num_subslots.unwrap_or(d.mac.num_subslots),
            coverage_design_range: mac.coverage_design_range_m.unwrap_or(d.mac.coverage_design_range),
            detection_threshold: mac.detection_threshold,
            fading_in_detection: mac.fading_in_detection.unwrap_or(d.mac.fading_in_detection),
        },
        metrics: MetricsConfig {
            theta_grid: met.theta_grid.unwrap_or(d.metrics.theta_grid),
            kappa_grid: met
                .kappa_grid_gbps
                .map(|g| g.iter().map(|k| k * 1e9).collect())
                .unwrap_or(d.metrics.kappa_grid),
            subslot_rate_scaling: met.subslot_rate_scaling.unwrap_or(d.metrics.subslot_rate_scaling),
            empty_cluster_as_outage: met
                .empty_cluster_as_outage
                .unwrap_or(d.metrics.empty_cluster_as_outage),
        },
        cars_block: blk.cars_block.unwrap_or(d.cars_block),
        sweep: SweepSpec {
            lambdas: sw.lambdas.unwrap_or_default(),
            beamwidths_deg: sw.beamwidths_deg.unwrap_or_default(),
            truck_fractions: sw.truck_fractions.unwrap_or_default(),
        },
        num_snapshots: run.num_snapshots.unwrap_or(d.num_snapshots),
        master_seed: run.master_seed.unwrap_or(d.master_seed),
        output_dir: run.output_dir,
    }
}
