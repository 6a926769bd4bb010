//! Two-cell highway scenario, experiment drivers and their CSV output.
//!
//! Every driver is a pure function of a [`ScenarioConfig`] (which carries the
//! seed), so rerunning with the same config reproduces the same bytes.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::admission::{service_curve, AdmissionConfig, ServiceCurve, TraceSource};
use crate::error::{Error, Result};
use crate::link_model::{build_trace, ChannelTrace, LinkBudget, Point, ShadowingModel};
use crate::planner::{plan_anticipatory, AllocationPlan};
use crate::playout_buffer::{simulate_playback, BufferTimeline, VideoSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VideoConfig {
    pub rate_bps: f64,
    pub slot_duration_s: f64,
    /// Buffer limit `Z` in multiples of the per-slot demand `V`.
    pub max_carryover_v: f64,
}

impl Default for VideoConfig {
    fn default() -> Self {
        VideoConfig {
            rate_bps: 1.5e6,
            slot_duration_s: 1.0 / 6.0,
            max_carryover_v: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdmissionSettings {
    pub mean_interarrival_s: f64,
    /// PRBs left for video after the existing cell load.
    pub available_prbs: f64,
    pub request_counts: Vec<usize>,
    pub num_seeds: u64,
}

impl Default for AdmissionSettings {
    fn default() -> Self {
        AdmissionSettings {
            mean_interarrival_s: 0.58,
            available_prbs: 15.0,
            request_counts: vec![5, 10, 15, 20, 25, 30, 35, 40],
            num_seeds: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    /// Buffer limits to evaluate, in multiples of `V`.
    pub z_values_v: Vec<f64>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            z_values_v: (0..=10).map(f64::from).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub bs_positions_m: Vec<Point>,
    pub user_start_m: Point,
    /// Direction of travel; normalized before use.
    pub user_heading: Point,
    pub user_speed_mps: f64,
    pub lookahead_s: f64,
    /// Informational; cell selection uses received power only.
    pub cell_radius_m: f64,
    pub video: VideoConfig,
    pub link: LinkBudget,
    pub shadowing: ShadowingModel,
    pub admission: AdmissionSettings,
    pub sweep: SweepSettings,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 0,
            bs_positions_m: vec![Point::new(0.0, 0.0), Point::new(550.0, 0.0)],
            user_start_m: Point::new(35.0, 0.0),
            user_heading: Point::new(1.0, 0.0),
            user_speed_mps: 30.0,
            lookahead_s: 16.0,
            cell_radius_m: 250.0,
            video: VideoConfig::default(),
            link: LinkBudget::default(),
            shadowing: ShadowingModel::default(),
            admission: AdmissionSettings::default(),
            sweep: SweepSettings::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text)
            .map_err(|e| Error::config("config", e.message().to_string() + &span_hint(text, e.span())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<()> {
        if self.bs_positions_m.is_empty() {
            return Err(Error::config("bs_positions_m", "needs at least one base station"));
        }
        if !(self.user_speed_mps > 0.0 && self.user_speed_mps.is_finite()) {
            return Err(Error::config("user_speed_mps", "must be positive and finite"));
        }
        if !(self.lookahead_s > 0.0 && self.lookahead_s.is_finite()) {
            return Err(Error::config("lookahead_s", "must be positive and finite"));
        }
        if !(self.cell_radius_m > 0.0) {
            return Err(Error::config("cell_radius_m", "must be positive"));
        }
        if self.user_heading.x.hypot(self.user_heading.y) == 0.0 {
            return Err(Error::config("user_heading", "must be a non-zero vector"));
        }
        if !(self.video.rate_bps > 0.0 && self.video.rate_bps.is_finite()) {
            return Err(Error::config("video.rate_bps", "must be positive and finite"));
        }
        if !(self.video.max_carryover_v >= 0.0) {
            return Err(Error::config("video.max_carryover_v", "must be non-negative"));
        }
        self.link.validate()?;
        self.shadowing.validate()?;
        self.num_slots()?;
        self.video_spec()?;
        self.admission_config(1, self.seed)
            .validate(self.link.num_system_prbs)?;
        if self.admission.num_seeds < 1 {
            return Err(Error::config("admission.num_seeds", "must be at least 1"));
        }
        if self.sweep.z_values_v.iter().any(|z| !(*z >= 0.0)) {
            return Err(Error::config("sweep.z_values_v", "values must be non-negative"));
        }
        Ok(())
    }

    /// Slots in the look-ahead window. The window must hold a whole number of
    /// slots.
    pub fn num_slots(&self) -> Result<usize> {
        let td = self.video.slot_duration_s;
        if !(td > 0.0 && td.is_finite()) {
            return Err(Error::config(
                "video.slot_duration_s",
                "must be positive and finite",
            ));
        }
        let ratio = self.lookahead_s / td;
        let slots = ratio.round();
        if slots < 1.0 || (ratio - slots).abs() > 1e-6 {
            return Err(Error::config(
                "lookahead_s",
                format!("{} s is not a whole number of {td} s slots", self.lookahead_s),
            ));
        }
        Ok(slots as usize)
    }

    pub fn video_spec(&self) -> Result<VideoSpec> {
        let v = &self.video;
        let bits = v.rate_bps * v.slot_duration_s;
        VideoSpec::from_rate(
            v.rate_bps,
            v.slot_duration_s,
            self.num_slots()?,
            v.max_carryover_v * bits,
        )
    }

    pub fn admission_config(&self, total_requests: usize, seed: u64) -> AdmissionConfig {
        AdmissionConfig {
            total_requests,
            mean_interarrival_s: self.admission.mean_interarrival_s,
            available_prbs: self.admission.available_prbs,
            seed,
        }
    }

    /// User position at the start of every slot of the window.
    pub fn trajectory(&self) -> Result<Vec<Point>> {
        let slots = self.num_slots()?;
        let h = self.user_heading;
        let norm = h.x.hypot(h.y);
        let step = self.user_speed_mps * self.video.slot_duration_s;
        Ok((0..slots)
            .map(|k| {
                let d = step * k as f64;
                Point::new(
                    self.user_start_m.x + d * h.x / norm,
                    self.user_start_m.y + d * h.y / norm,
                )
            })
            .collect())
    }
}

impl TraceSource for ScenarioConfig {
    /// Every user drives the same path; shadowing differs per user and seed.
    fn trace(&self, seed: u64, user: usize) -> Result<ChannelTrace> {
        build_trace(
            &self.trajectory()?,
            &self.bs_positions_m,
            &self.link,
            &self.video_spec()?,
            &self.shadowing,
            seed,
            user as u64,
        )
    }
}

fn span_hint(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    match span {
        Some(r) => {
            let line = text[..r.start.min(text.len())].matches('\n').count() + 1;
            format!(" (line {line})")
        }
        None => String::new(),
    }
}

/// Formats like C's `%.9g`.
pub fn fmt_sig(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedRun {
    pub label: &'static str,
    pub spec: VideoSpec,
    pub plan: AllocationPlan,
    pub timeline: BufferTimeline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleUserReport {
    pub trace: ChannelTrace,
    /// Buffer limit from the config.
    pub anticipatory: PlannedRun,
    /// Same LP with `Z = 0`.
    pub zero_buffer: PlannedRun,
}

impl SingleUserReport {
    pub fn feasible(&self) -> bool {
        self.anticipatory.plan.feasible && self.zero_buffer.plan.feasible
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for run in [&self.anticipatory, &self.zero_buffer] {
            s += &format!(
                "{:<13} Z = {:>12} bits  feasible = {:<5}  total_prb_slots = {}  outages = {}\n",
                run.label,
                fmt_sig(run.spec.max_carryover_bits),
                run.plan.feasible,
                fmt_sig(run.plan.total_prb_slots),
                run.timeline.outage_count(),
            );
        }
        if self.feasible() {
            let saved = 1.0 - self.anticipatory.plan.total_prb_slots / self.zero_buffer.plan.total_prb_slots;
            s += &format!("spectrum saved by buffering: {}%\n", fmt_sig(100.0 * saved));
        }
        s
    }
}

fn plan_run(label: &'static str, spec: VideoSpec, trace: &ChannelTrace, free: &[f64]) -> Result<PlannedRun> {
    let plan = plan_anticipatory(&spec, trace, free)?;
    let timeline = simulate_playback(&plan.received_bits, &spec)?;
    Ok(PlannedRun {
        label,
        spec,
        plan,
        timeline,
    })
}

/// One user with the full system bandwidth, planned with the configured
/// buffer and without any buffer.
pub fn run_single_user(cfg: &ScenarioConfig) -> Result<SingleUserReport> {
    cfg.validate()?;
    let spec = cfg.video_spec()?;
    let trace = cfg.trace(cfg.seed, 0)?;
    let free = vec![f64::from(cfg.link.num_system_prbs); spec.num_slots];
    Ok(SingleUserReport {
        anticipatory: plan_run("anticipatory", spec, &trace, &free)?,
        zero_buffer: plan_run("zero_buffer", spec.with_max_carryover(0.0)?, &trace, &free)?,
        trace,
    })
}

pub const TRACE_HEADER: [&str; 13] = [
    "planner",
    "slot",
    "time_s",
    "distance_m",
    "serving_bs",
    "gain_db",
    "bits_per_prb",
    "r_bits",
    "z_bits",
    "w_prbs",
    "buffer_bits",
    "played_bits",
    "outage",
];

#[allow(clippy::needless_range_loop)] // parallel per-slot columns
pub fn write_trace_csv<W: Write>(report: &SingleUserReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    let t = &report.trace;
    for run in [&report.anticipatory, &report.zero_buffer] {
        let buffer = run.timeline.buffer_bits();
        for k in 0..t.len() {
            w.write_record([
                run.label.to_string(),
                k.to_string(),
                fmt_sig(k as f64 * t.slot_duration_s),
                fmt_sig(t.distances_m[k]),
                t.serving_bs[k].to_string(),
                fmt_sig(t.gain_db[k]),
                fmt_sig(t.bits_per_prb[k]),
                fmt_sig(run.plan.received_bits[k]),
                fmt_sig(run.timeline.carryover_bits[k]),
                fmt_sig(run.plan.prbs[k]),
                fmt_sig(buffer[k]),
                fmt_sig(run.timeline.played_bits[k]),
                u8::from(run.timeline.outage_flags[k]).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub z_v: f64,
    pub z_bits: f64,
    pub feasible: bool,
    pub total_prb_slots: f64,
    /// Normalized by `T` times the system PRBs.
    pub fraction_of_system: f64,
    /// Normalized by `T` times the PRBs available to video.
    pub fraction_of_available: f64,
}

/// Total spectrum of the anticipatory plan as a function of the buffer limit.
pub fn run_buffer_sweep(cfg: &ScenarioConfig, z_values_v: &[f64]) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    if z_values_v.is_empty() {
        return Err(Error::config("sweep.z_values_v", "must not be empty"));
    }
    let spec = cfg.video_spec()?;
    let trace = cfg.trace(cfg.seed, 0)?;
    let free = vec![f64::from(cfg.link.num_system_prbs); spec.num_slots];
    let slots = spec.num_slots as f64;
    z_values_v
        .iter()
        .map(|&z_v| {
            if !(z_v >= 0.0 && z_v.is_finite()) {
                return Err(Error::config("sweep.z_values_v", "values must be non-negative"));
            }
            let z_bits = z_v * spec.bits_per_slot;
            let plan = plan_anticipatory(&spec.with_max_carryover(z_bits)?, &trace, &free)?;
            Ok(SweepRow {
                z_v,
                z_bits,
                feasible: plan.feasible,
                total_prb_slots: plan.total_prb_slots,
                fraction_of_system: plan.total_prb_slots / (slots * f64::from(cfg.link.num_system_prbs)),
                fraction_of_available: plan.total_prb_slots / (slots * cfg.admission.available_prbs),
            })
        })
        .collect()
}

pub const SWEEP_HEADER: [&str; 6] = [
    "z_v",
    "z_bits",
    "feasible",
    "total_prb_slots",
    "fraction_of_system_prbs",
    "fraction_of_available_prbs",
];

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            fmt_sig(r.z_v),
            fmt_sig(r.z_bits),
            u8::from(r.feasible).to_string(),
            fmt_sig(r.total_prb_slots),
            fmt_sig(r.fraction_of_system),
            fmt_sig(r.fraction_of_available),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Served users against offered requests for both planners, seeds
/// `cfg.seed .. cfg.seed + num_seeds`.
pub fn run_multiuser(cfg: &ScenarioConfig, request_counts: &[usize], num_seeds: u64) -> Result<ServiceCurve> {
    cfg.validate()?;
    if request_counts.is_empty() || request_counts.contains(&0) {
        return Err(Error::config(
            "admission.request_counts",
            "must be non-empty and positive",
        ));
    }
    if num_seeds < 1 {
        return Err(Error::config("admission.num_seeds", "must be at least 1"));
    }
    let seeds: Vec<u64> = (0..num_seeds).map(|k| cfg.seed.wrapping_add(k)).collect();
    service_curve(
        request_counts,
        &cfg.admission_config(1, cfg.seed),
        &seeds,
        &cfg.video_spec()?,
        cfg.link.num_system_prbs,
        cfg,
    )
}

pub const SERVICE_HEADER: [&str; 7] = [
    "total_requests",
    "planner",
    "seed",
    "admitted_users",
    "served_users",
    "service_rate",
    "row_kind",
];

/// Per-seed rows followed by one mean row per (request count, planner); mean
/// rows leave `seed` empty.
pub fn write_service_csv<W: Write>(curve: &ServiceCurve, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SERVICE_HEADER)?;
    for r in &curve.rows {
        w.write_record([
            r.total_requests.to_string(),
            r.planner.to_string(),
            r.seed.to_string(),
            r.admitted.to_string(),
            r.served.to_string(),
            fmt_sig(r.service_rate),
            "seed".into(),
        ])?;
    }
    for m in &curve.means {
        w.write_record([
            m.total_requests.to_string(),
            m.planner.to_string(),
            String::new(),
            fmt_sig(m.mean_admitted),
            fmt_sig(m.mean_served),
            fmt_sig(m.mean_service_rate),
            "mean".into(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<String> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}
