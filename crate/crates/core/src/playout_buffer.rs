//! Client play-out buffer, simulated slot by slot.
//!
//! Each slot the buffer holds the bits carried over from the previous slot
//! plus the bits received in this one. If that reaches the per-slot video
//! demand `V`, `V` bits are played and the rest is carried over; otherwise the
//! player stalls for the slot and keeps everything it has.

use serde::Serialize;

use crate::error::{Error, Result};

/// A constant-bit-rate video stream on a slotted timeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VideoSpec {
    /// `V`: bits played per slot.
    pub bits_per_slot: f64,
    pub slot_duration_s: f64,
    /// `T`: slots in the look-ahead window, which is also the video length.
    pub num_slots: usize,
    /// `Z`: largest number of bits that may be carried between slots.
    pub max_carryover_bits: f64,
    pub avg_rate_bps: Option<f64>,
}

impl VideoSpec {
    pub fn new(
        bits_per_slot: f64,
        slot_duration_s: f64,
        num_slots: usize,
        max_carryover_bits: f64,
    ) -> Result<Self> {
        let spec = VideoSpec {
            bits_per_slot,
            slot_duration_s,
            num_slots,
            max_carryover_bits,
            avg_rate_bps: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Derives `V = R * T_d` from the average video rate.
    pub fn from_rate(
        avg_rate_bps: f64,
        slot_duration_s: f64,
        num_slots: usize,
        max_carryover_bits: f64,
    ) -> Result<Self> {
        let spec = VideoSpec {
            bits_per_slot: avg_rate_bps * slot_duration_s,
            slot_duration_s,
            num_slots,
            max_carryover_bits,
            avg_rate_bps: Some(avg_rate_bps),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bits_per_slot > 0.0 && self.bits_per_slot.is_finite()) {
            return Err(Error::config(
                "video.bits_per_slot",
                "must be positive and finite",
            ));
        }
        if !(self.slot_duration_s > 0.0 && self.slot_duration_s.is_finite()) {
            return Err(Error::config(
                "video.slot_duration_s",
                "must be positive and finite",
            ));
        }
        if self.num_slots < 1 {
            return Err(Error::config("video.num_slots", "must be at least 1"));
        }
        if !(self.max_carryover_bits >= 0.0 && self.max_carryover_bits.is_finite()) {
            return Err(Error::config(
                "video.max_carryover_bits",
                "must be non-negative and finite",
            ));
        }
        if let Some(rate) = self.avg_rate_bps {
            let implied = self.bits_per_slot / self.slot_duration_s;
            if !(rate > 0.0) || ((rate - implied) / rate).abs() > 1e-6 {
                return Err(Error::config(
                    "video.rate_bps",
                    format!("{rate} b/s disagrees with V / T_d = {implied} b/s"),
                ));
            }
        }
        Ok(())
    }

    /// Total video bits in the window, `T * V`.
    pub fn total_bits(&self) -> f64 {
        self.num_slots as f64 * self.bits_per_slot
    }

    /// Same stream with a different buffer limit.
    pub fn with_max_carryover(mut self, bits: f64) -> Result<Self> {
        self.max_carryover_bits = bits;
        self.validate()?;
        Ok(self)
    }
}

/// Shortfall, relative to `V`, that still counts as a full segment. Plans come
/// out of a floating-point solve and may miss `V` by a fraction of a bit.
pub const PLAYBACK_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BufferStep {
    pub next_carryover: f64,
    pub played: f64,
    pub outage: bool,
}

/// Advances the buffer by one slot.
pub fn step_buffer(carryover: f64, received: f64, bits_per_slot: f64) -> Result<BufferStep> {
    if !(carryover >= 0.0) || !(received >= 0.0) || !(bits_per_slot >= 0.0) {
        return Err(Error::invalid(format!(
            "buffer quantities must be non-negative (z = {carryover}, r = {received}, V = {bits_per_slot})"
        )));
    }
    let available = carryover + received;
    Ok(if available >= bits_per_slot * (1.0 - PLAYBACK_SLACK) {
        BufferStep {
            next_carryover: (available - bits_per_slot).max(0.0),
            played: bits_per_slot,
            outage: false,
        }
    } else {
        BufferStep {
            next_carryover: available,
            played: 0.0,
            outage: true,
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BufferTimeline {
    pub received_bits: Vec<f64>,
    /// `z_t`, bits entering slot `t` from the previous slot; `z_1 = 0`.
    pub carryover_bits: Vec<f64>,
    pub played_bits: Vec<f64>,
    pub outage_flags: Vec<bool>,
    /// Bits left after the last slot.
    pub final_carryover: f64,
    /// Slots whose outgoing carry-over exceeded the buffer limit `Z`.
    pub carryover_violations: Vec<usize>,
}

impl BufferTimeline {
    pub fn outage_count(&self) -> usize {
        self.outage_flags.iter().filter(|&&o| o).count()
    }

    /// Bits available to the player in each slot, `r_t + z_t`.
    pub fn buffer_bits(&self) -> Vec<f64> {
        self.received_bits
            .iter()
            .zip(&self.carryover_bits)
            .map(|(r, z)| r + z)
            .collect()
    }
}

/// Runs a whole received-bits schedule through the buffer.
///
/// Carry-over above `Z` (beyond a `1e-6 * V` tolerance) is not clipped but
/// listed in [`BufferTimeline::carryover_violations`].
pub fn simulate_playback(received: &[f64], spec: &VideoSpec) -> Result<BufferTimeline> {
    if received.len() != spec.num_slots {
        return Err(Error::invalid(format!(
            "plan has {} slots, video has {}",
            received.len(),
            spec.num_slots
        )));
    }
    let v = spec.bits_per_slot;
    let limit = spec.max_carryover_bits + 1e-6 * v;
    let n = received.len();
    let mut timeline = BufferTimeline {
        received_bits: received.to_vec(),
        carryover_bits: Vec::with_capacity(n),
        played_bits: Vec::with_capacity(n),
        outage_flags: Vec::with_capacity(n),
        final_carryover: 0.0,
        carryover_violations: Vec::new(),
    };
    let mut z = 0.0;
    for (t, &r) in received.iter().enumerate() {
        let step = step_buffer(z, r, v)?;
        timeline.carryover_bits.push(z);
        timeline.played_bits.push(step.played);
        timeline.outage_flags.push(step.outage);
        if step.next_carryover > limit {
            timeline.carryover_violations.push(t);
        }
        z = step.next_carryover;
    }
    timeline.final_carryover = z;
    Ok(timeline)
}
