//! Sequential admission of video requests against a per-slot spectrum ledger.
//!
//! Requests arrive with exponential inter-arrival times. Each one is planned
//! against the PRBs still free over its own look-ahead window; an admitted
//! plan is subtracted from the ledger before the next request is considered.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link_model::ChannelTrace;
use crate::planner::{plan_anticipatory, plan_baseline, AllocationPlan};
use crate::playout_buffer::{simulate_playback, VideoSpec};

/// RNG stream for arrival times; shadowing streams count up from zero.
const ARRIVAL_STREAM: u64 = u64::MAX;

/// Supplies the predicted channel of the `user`-th request of a run.
pub trait TraceSource: Sync {
    fn trace(&self, seed: u64, user: usize) -> Result<ChannelTrace>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    Anticipatory,
    Baseline,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 2] = [PlannerKind::Anticipatory, PlannerKind::Baseline];

    pub fn as_str(self) -> &'static str {
        match self {
            PlannerKind::Anticipatory => "anticipatory",
            PlannerKind::Baseline => "baseline",
        }
    }
}

impl std::fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissionConfig {
    pub total_requests: usize,
    pub mean_interarrival_s: f64,
    pub available_prbs: f64,
    pub seed: u64,
}

impl AdmissionConfig {
    pub fn validate(&self, num_system_prbs: u32) -> Result<()> {
        if self.total_requests < 1 {
            return Err(Error::config("admission.total_requests", "must be at least 1"));
        }
        if !(self.mean_interarrival_s > 0.0 && self.mean_interarrival_s.is_finite()) {
            return Err(Error::config(
                "admission.mean_interarrival_s",
                "must be positive and finite",
            ));
        }
        if !(self.available_prbs >= 0.0 && self.available_prbs <= f64::from(num_system_prbs)) {
            return Err(Error::config(
                "admission.available_prbs",
                format!("must lie in [0, {num_system_prbs}]"),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RequestRecord {
    pub arrival_time_s: f64,
    pub arrival_slot: usize,
    pub admitted: bool,
    pub plan: Option<AllocationPlan>,
    pub outage_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissionLog {
    pub kind: PlannerKind,
    pub requests: Vec<RequestRecord>,
    /// Admitted users whose playback never stalled.
    pub served_count: usize,
    /// PRBs left in each global slot after all admissions.
    pub residual_prbs_timeline: Vec<f64>,
}

impl AdmissionLog {
    pub fn admitted_count(&self) -> usize {
        self.requests.iter().filter(|r| r.admitted).count()
    }

    pub fn service_rate(&self) -> f64 {
        self.served_count as f64 / self.requests.len() as f64
    }
}

/// Arrival times in seconds; the first request arrives at `t = 0`.
pub fn arrival_times(count: usize, mean_interarrival_s: f64, seed: u64) -> Result<Vec<f64>> {
    let exp = Exp::new(1.0 / mean_interarrival_s)
        .map_err(|e| Error::invalid(format!("bad inter-arrival mean: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ARRIVAL_STREAM);
    let mut t = 0.0;
    Ok((0..count)
        .map(|k| {
            if k > 0 {
                t += exp.sample(&mut rng);
            }
            t
        })
        .collect())
}

pub fn run_admission(
    config: &AdmissionConfig,
    spec: &VideoSpec,
    num_system_prbs: u32,
    source: &dyn TraceSource,
    kind: PlannerKind,
) -> Result<AdmissionLog> {
    config.validate(num_system_prbs)?;
    spec.validate()?;
    let slots = spec.num_slots;
    let arrivals = arrival_times(config.total_requests, config.mean_interarrival_s, config.seed)?;
    let arrival_slots: Vec<usize> = arrivals
        .iter()
        .map(|t| (t / spec.slot_duration_s).floor() as usize)
        .collect();
    let horizon = arrival_slots.last().copied().unwrap_or(0) + slots;
    let mut ledger = vec![config.available_prbs; horizon];

    let mut requests = Vec::with_capacity(config.total_requests);
    for (user, (&arrival_time_s, &start)) in arrivals.iter().zip(&arrival_slots).enumerate() {
        let trace = source.trace(config.seed, user)?;
        let window: Vec<f64> = ledger[start..start + slots].iter().map(|w| w.max(0.0)).collect();
        let plan = match kind {
            PlannerKind::Anticipatory => {
                Some(plan_anticipatory(spec, &trace, &window)?).filter(|p| p.feasible)
            }
            PlannerKind::Baseline => {
                // Admission looks only at the current slot; later shortfalls
                // turn into stalls.
                if spec.bits_per_slot / trace.bits_per_prb[0] <= window[0] {
                    Some(plan_baseline(spec, &trace, &window)?)
                } else {
                    None
                }
            }
        };
        let mut record = RequestRecord {
            arrival_time_s,
            arrival_slot: start,
            admitted: plan.is_some(),
            plan: None,
            outage_count: 0,
        };
        if let Some(plan) = plan {
            for (free, w) in ledger[start..start + slots].iter_mut().zip(&plan.prbs) {
                *free -= w;
            }
            record.plan = Some(plan);
        }
        requests.push(record);
    }

    let mut served_count = 0;
    for record in requests.iter_mut() {
        if let Some(plan) = &record.plan {
            let timeline = simulate_playback(&plan.received_bits, spec)?;
            record.outage_count = timeline.outage_count();
            if record.outage_count == 0 {
                served_count += 1;
            }
        }
    }

    Ok(AdmissionLog {
        kind,
        requests,
        served_count,
        residual_prbs_timeline: ledger,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServiceRow {
    pub total_requests: usize,
    pub planner: PlannerKind,
    pub seed: u64,
    pub admitted: usize,
    pub served: usize,
    pub service_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServiceMean {
    pub total_requests: usize,
    pub planner: PlannerKind,
    pub mean_admitted: f64,
    pub mean_served: f64,
    pub mean_service_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ServiceCurve {
    /// Ordered by request count, then planner, then seed.
    pub rows: Vec<ServiceRow>,
    pub means: Vec<ServiceMean>,
}

impl ServiceCurve {
    pub fn mean(&self, total_requests: usize, planner: PlannerKind) -> Option<&ServiceMean> {
        self.means
            .iter()
            .find(|m| m.total_requests == total_requests && m.planner == planner)
    }
}

/// Served users per request count and planner, averaged over `seeds`.
/// Independent runs are spread over the rayon pool; the output order does
/// not depend on scheduling.
pub fn service_curve(
    request_counts: &[usize],
    base: &AdmissionConfig,
    seeds: &[u64],
    spec: &VideoSpec,
    num_system_prbs: u32,
    source: &dyn TraceSource,
) -> Result<ServiceCurve> {
    if request_counts.is_empty() {
        return Err(Error::invalid("no request counts given"));
    }
    if seeds.is_empty() {
        return Err(Error::invalid("no seeds given"));
    }
    let jobs: Vec<(usize, PlannerKind, u64)> = request_counts
        .iter()
        .flat_map(|&kv| {
            PlannerKind::ALL
                .into_iter()
                .flat_map(move |kind| seeds.iter().map(move |&seed| (kv, kind, seed)))
        })
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(kv, kind, seed)| {
            let config = AdmissionConfig {
                total_requests: kv,
                seed,
                ..*base
            };
            let log = run_admission(&config, spec, num_system_prbs, source, kind)?;
            Ok(ServiceRow {
                total_requests: kv,
                planner: kind,
                seed,
                admitted: log.admitted_count(),
                served: log.served_count,
                service_rate: log.service_rate(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let means = rows
        .chunks(seeds.len())
        .map(|chunk| {
            let n = chunk.len() as f64;
            ServiceMean {
                total_requests: chunk[0].total_requests,
                planner: chunk[0].planner,
                mean_admitted: chunk.iter().map(|r| r.admitted as f64).sum::<f64>() / n,
                mean_served: chunk.iter().map(|r| r.served as f64).sum::<f64>() / n,
                mean_service_rate: chunk.iter().map(|r| r.service_rate).sum::<f64>() / n,
            }
        })
        .collect();
    Ok(ServiceCurve { rows, means })
}
