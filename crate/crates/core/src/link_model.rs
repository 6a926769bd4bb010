//! Radio link model: path loss, shadowing, cell selection and the per-PRB
//! capacity that converts allocated bits into allocated spectrum.

use std::f64::consts::{LN_2, TAU};

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::playout_buffer::VideoSpec;

/// Radio constants of the downlink. Defaults are a 10 MHz LTE carrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkBudget {
    pub total_power_dbm: f64,
    pub num_system_prbs: u32,
    pub prb_bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub interference_psd_dbm_hz: f64,
    /// Effective-SINR penalty of practical modulation and coding relative to
    /// Shannon capacity. 0 dB means pure capacity.
    pub snr_gap_db: f64,
    pub min_bs_distance_m: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        LinkBudget {
            total_power_dbm: 46.0,
            num_system_prbs: 50,
            prb_bandwidth_hz: 180_000.0,
            noise_psd_dbm_hz: -174.0,
            noise_figure_db: 9.0,
            interference_psd_dbm_hz: -149.0,
            snr_gap_db: 0.0,
            min_bs_distance_m: 35.0,
        }
    }
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        if self.num_system_prbs < 1 {
            return Err(Error::config("link.num_system_prbs", "must be at least 1"));
        }
        if !(self.prb_bandwidth_hz > 0.0 && self.prb_bandwidth_hz.is_finite()) {
            return Err(Error::config(
                "link.prb_bandwidth_hz",
                "must be positive and finite",
            ));
        }
        if !(self.snr_gap_db >= 0.0 && self.snr_gap_db.is_finite()) {
            return Err(Error::config(
                "link.snr_gap_db",
                "must be non-negative and finite",
            ));
        }
        for (name, v) in [
            ("link.total_power_dbm", self.total_power_dbm),
            ("link.noise_psd_dbm_hz", self.noise_psd_dbm_hz),
            ("link.noise_figure_db", self.noise_figure_db),
            ("link.interference_psd_dbm_hz", self.interference_psd_dbm_hz),
        ] {
            if !v.is_finite() {
                return Err(Error::config(name, "must be finite"));
            }
        }
        if !(self.min_bs_distance_m > 0.0 && self.min_bs_distance_m.is_finite()) {
            return Err(Error::config(
                "link.min_bs_distance_m",
                "must be positive and finite",
            ));
        }
        Ok(())
    }

    /// Transmit power per PRB in dBm. The total power is split over all
    /// system PRBs, whether or not they are schedulable for video.
    pub fn per_prb_power_dbm(&self) -> f64 {
        self.total_power_dbm - 10.0 * f64::from(self.num_system_prbs).log10()
    }

    /// Thermal noise (including noise figure) over one PRB, dBm.
    pub fn noise_dbm(&self) -> f64 {
        self.noise_psd_dbm_hz + self.noise_figure_db + 10.0 * self.prb_bandwidth_hz.log10()
    }

    /// Average inter-cell interference over one PRB, dBm.
    pub fn interference_dbm(&self) -> f64 {
        self.interference_psd_dbm_hz + 10.0 * self.prb_bandwidth_hz.log10()
    }

    /// Effective SINR (linear) for an average channel gain in dB.
    pub fn effective_sinr(&self, gain_db: f64) -> f64 {
        let signal_mw = dbm_to_mw(self.per_prb_power_dbm()) * db_to_linear(gain_db);
        let impairment_mw = dbm_to_mw(self.noise_dbm()) + dbm_to_mw(self.interference_dbm());
        signal_mw / (db_to_linear(self.snr_gap_db) * impairment_mw)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_linear(dbm)
}

/// Outdoor macro-cell path loss in dB for a distance in kilometres,
/// without shadowing.
pub fn path_loss_db(distance_km: f64) -> Result<f64> {
    if !(distance_km > 0.0) || !distance_km.is_finite() {
        return Err(Error::Domain(format!(
            "path loss needs a positive finite distance, got {distance_km} km"
        )));
    }
    Ok(128.1 + 37.6 * distance_km.log10())
}

/// Bits one PRB carries during one slot at the given average gain.
pub fn per_prb_bits(gain_db: f64, budget: &LinkBudget, slot_duration_s: f64) -> f64 {
    let sinr = budget.effective_sinr(gain_db);
    // ln_1p keeps tiny SINRs strictly positive instead of rounding to zero.
    slot_duration_s * budget.prb_bandwidth_hz * sinr.ln_1p() / LN_2
}

/// Spatial structure of log-normal shadowing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShadowingModel {
    pub sigma_db: f64,
    /// Distance at which the autocorrelation has dropped to 1/e.
    pub decorrelation_m: f64,
    /// Spacing of the lattice the Gauss-Markov process is generated on.
    pub lattice_m: f64,
}

impl Default for ShadowingModel {
    fn default() -> Self {
        ShadowingModel {
            sigma_db: 10.0,
            decorrelation_m: 50.0,
            lattice_m: 1.0,
        }
    }
}

impl ShadowingModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_db >= 0.0 && self.sigma_db.is_finite()) {
            return Err(Error::config(
                "shadowing.sigma_db",
                "must be non-negative and finite",
            ));
        }
        if !(self.decorrelation_m > 0.0) {
            return Err(Error::config("shadowing.decorrelation_m", "must be positive"));
        }
        if !(self.lattice_m > 0.0 && self.lattice_m.is_finite()) {
            return Err(Error::config(
                "shadowing.lattice_m",
                "must be positive and finite",
            ));
        }
        // Sampling cost grows linearly with this ratio.
        if self.decorrelation_m / self.lattice_m > MAX_CORRELATION_LATTICE_RATIO {
            return Err(Error::config(
                "shadowing.decorrelation_m",
                format!("must be at most {MAX_CORRELATION_LATTICE_RATIO} lattice spacings"),
            ));
        }
        Ok(())
    }
}

/// One realization of a zero-mean Gaussian shadowing process (in dB) over a
/// one-dimensional position, with autocorrelation `exp(-|dx| / decorrelation_m)`.
///
/// The value at a position is a pure function of `(seed, stream, position)`.
/// Lattice points are grouped in blocks; each block starts from an
/// exponentially weighted sum of counter-indexed innovations (truncated once
/// the weights fall below 1e-12) and continues with the Gauss-Markov
/// recursion. Positions between lattice points take one more
/// Ornstein-Uhlenbeck step from the lattice point below.
#[derive(Debug, Clone, Copy)]
pub struct ShadowingField {
    model: ShadowingModel,
    seed: u64,
    stream: u64,
}

const MAX_CORRELATION_LATTICE_RATIO: f64 = 10_000.0;
const INNOVATION_OFFSET: i128 = 1 << 62;
const TAIL_CUTOFF: f64 = 1e-12;
const BLOCK_LEN: i64 = 256;

impl ShadowingField {
    pub fn new(model: ShadowingModel, seed: u64, stream: u64) -> Self {
        ShadowingField { model, seed, stream }
    }

    pub fn model(&self) -> &ShadowingModel {
        &self.model
    }

    pub fn sample(&self, position_m: f64) -> f64 {
        self.sample_path(&[position_m])[0]
    }

    /// Samples several positions, sharing work between positions in the same
    /// block. Identical to calling [`sample`](Self::sample) on each.
    pub fn sample_path(&self, positions_m: &[f64]) -> Vec<f64> {
        let m = &self.model;
        if m.sigma_db == 0.0 {
            return vec![0.0; positions_m.len()];
        }
        let rho = (-m.lattice_m / m.decorrelation_m).exp();
        let scale = m.sigma_db * (1.0 - rho * rho).sqrt();
        let mut cached: Option<(i64, Vec<f64>)> = None;
        positions_m
            .iter()
            .map(|&position_m| {
                let cell = (position_m / m.lattice_m).floor();
                let index = cell as i64;
                let block = index.div_euclid(BLOCK_LEN);
                if cached.as_ref().is_none_or(|(b, _)| *b != block) {
                    cached = Some((block, self.block_accumulators(block, rho)));
                }
                let acc = cached.as_ref().expect("filled above").1[index.rem_euclid(BLOCK_LEN) as usize];
                let lattice_value = scale * acc;
                let frac_m = position_m - cell * m.lattice_m;
                if frac_m <= 0.0 {
                    return lattice_value;
                }
                let rho_f = (-frac_m / m.decorrelation_m).exp();
                let mut bridge = self.rng(1);
                seek_normal(&mut bridge, index as i128);
                let n = next_normal_pair(&mut bridge).0;
                rho_f * lattice_value + m.sigma_db * (1.0 - rho_f * rho_f).sqrt() * n
            })
            .collect()
    }

    /// Unit-innovation accumulators for every lattice point of `block`.
    fn block_accumulators(&self, block: i64, rho: f64) -> Vec<f64> {
        let taps = if rho > 0.0 {
            (TAIL_CUTOFF.ln() / rho.ln()).ceil() as i128
        } else {
            0
        };
        let block_start = i128::from(block) * i128::from(BLOCK_LEN);
        let first = block_start - taps;
        let mut rng = self.rng(0);
        seek_normal(&mut rng, first);
        let mut pending = None;
        if first.rem_euclid(2) == 1 {
            // Discard the partner of an odd-indexed first sample.
            pending = Some(next_normal_pair(&mut rng).1);
        }
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(BLOCK_LEN as usize);
        for i in first..block_start + i128::from(BLOCK_LEN) {
            let n = match pending.take() {
                Some(n) => n,
                None => {
                    let (a, b) = next_normal_pair(&mut rng);
                    pending = Some(b);
                    a
                }
            };
            acc = rho * acc + n;
            if i >= block_start {
                out.push(acc);
            }
        }
        out
    }

    fn rng(&self, lane: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream.wrapping_mul(2).wrapping_add(lane));
        rng
    }
}

/// Positions the generator so the next pair starts at the even sample at or below `index`.
fn seek_normal(rng: &mut ChaCha8Rng, index: i128) {
    let pair = (index + INNOVATION_OFFSET).div_euclid(2) as u128;
    // Each pair consumes two u64 draws, i.e. four 32-bit words.
    rng.set_word_pos(pair * 4);
}

fn next_normal_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    // u1 in (0, 1], u2 in [0, 1)
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 / (1u64 << 53) as f64;
    let u2 = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let r = (-2.0 * u1.ln()).sqrt();
    (r * (TAU * u2).cos(), r * (TAU * u2).sin())
}

/// Free-function form of [`ShadowingField::sample`].
pub fn shadowing_db(position_m: f64, seed: u64, stream: u64, model: ShadowingModel) -> f64 {
    ShadowingField::new(model, seed, stream).sample(position_m)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Predicted average channel of one user over the look-ahead window.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTrace {
    pub slot_duration_s: f64,
    /// Distance to the serving BS, clamped to the minimum BS distance.
    pub distances_m: Vec<f64>,
    pub serving_bs: Vec<usize>,
    /// Average gain including path loss and shadowing, dB.
    pub gain_db: Vec<f64>,
    pub bits_per_prb: Vec<f64>,
}

impl ChannelTrace {
    /// Trace built directly from gains, e.g. for synthetic experiments.
    pub fn from_gains(gain_db: Vec<f64>, budget: &LinkBudget, slot_duration_s: f64) -> Self {
        let bits_per_prb = gain_db
            .iter()
            .map(|&g| per_prb_bits(g, budget, slot_duration_s))
            .collect();
        let n = gain_db.len();
        ChannelTrace {
            slot_duration_s,
            distances_m: vec![f64::NAN; n],
            serving_bs: vec![0; n],
            gain_db,
            bits_per_prb,
        }
    }

    /// Trace with prescribed capacities and no radio interpretation.
    pub fn from_capacities(bits_per_prb: Vec<f64>, slot_duration_s: f64) -> Self {
        let n = bits_per_prb.len();
        ChannelTrace {
            slot_duration_s,
            distances_m: vec![f64::NAN; n],
            serving_bs: vec![0; n],
            gain_db: vec![f64::NAN; n],
            bits_per_prb,
        }
    }

    pub fn len(&self) -> usize {
        self.bits_per_prb.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits_per_prb.is_empty()
    }

    /// Recomputes the capacities from the stored gains.
    pub fn recompute_bits(&self, budget: &LinkBudget) -> Vec<f64> {
        self.gain_db
            .iter()
            .map(|&g| per_prb_bits(g, budget, self.slot_duration_s))
            .collect()
    }

    /// Index of the slot with the lowest capacity (first one on ties).
    pub fn worst_slot(&self) -> Option<usize> {
        self.bits_per_prb
            .iter()
            .enumerate()
            .fold(None, |best: Option<(usize, f64)>, (i, &c)| match best {
                Some((_, b)) if b <= c => best,
                _ => Some((i, c)),
            })
            .map(|(i, _)| i)
    }
}

/// Builds the predicted channel for a user following `trajectory`, one point
/// per slot.
///
/// Each slot is served by the BS with the highest average received power.
/// Every BS link has its own shadowing stream, derived from `user_stream`, and
/// shadowing is indexed by the distance travelled along the trajectory.
pub fn build_trace(
    trajectory: &[Point],
    bs_positions: &[Point],
    budget: &LinkBudget,
    spec: &VideoSpec,
    shadowing: &ShadowingModel,
    seed: u64,
    user_stream: u64,
) -> Result<ChannelTrace> {
    if trajectory.is_empty() {
        return Err(Error::invalid("trajectory is empty"));
    }
    if trajectory.len() != spec.num_slots {
        return Err(Error::invalid(format!(
            "trajectory has {} points but the video spans {} slots",
            trajectory.len(),
            spec.num_slots
        )));
    }
    if bs_positions.is_empty() {
        return Err(Error::invalid("no base stations"));
    }

    let fields: Vec<ShadowingField> = (0..bs_positions.len())
        .map(|b| {
            let stream = user_stream
                .wrapping_mul(bs_positions.len() as u64)
                .wrapping_add(b as u64);
            ShadowingField::new(*shadowing, seed, stream)
        })
        .collect();

    let n = trajectory.len();
    let mut trace = ChannelTrace {
        slot_duration_s: spec.slot_duration_s,
        distances_m: Vec::with_capacity(n),
        serving_bs: Vec::with_capacity(n),
        gain_db: Vec::with_capacity(n),
        bits_per_prb: Vec::with_capacity(n),
    };

    let mut travelled_m = 0.0;
    let path_m: Vec<f64> = trajectory
        .iter()
        .enumerate()
        .map(|(t, point)| {
            if t > 0 {
                travelled_m += trajectory[t - 1].distance(point);
            }
            travelled_m
        })
        .collect();
    let shadow: Vec<Vec<f64>> = fields.iter().map(|f| f.sample_path(&path_m)).collect();

    for (t, point) in trajectory.iter().enumerate() {
        let mut best: Option<(usize, f64, f64)> = None;
        for (b, bs) in bs_positions.iter().enumerate() {
            let d = point.distance(bs).max(budget.min_bs_distance_m);
            let gain = -path_loss_db(d / 1000.0)? - shadow[b][t];
            if best.is_none_or(|(_, _, g)| gain > g) {
                best = Some((b, d, gain));
            }
        }
        let (b, d, gain) = best.expect("at least one BS");
        trace.serving_bs.push(b);
        trace.distances_m.push(d);
        trace.gain_db.push(gain);
        trace
            .bits_per_prb
            .push(per_prb_bits(gain, budget, spec.slot_duration_s));
    }
    Ok(trace)
}
