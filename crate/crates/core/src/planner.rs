//! Rate planning for one video user over the look-ahead window.
//!
//! The anticipatory planner solves
//!
//! ```text
//! minimize    sum_t r_t / c_t                        (PRB-slots)
//! subject to  r_1 - z_2             = V
//!             r_t + z_t - z_{t+1}   = V              1 < t < T
//!             r_T + z_T             = V
//!             0 <= r_t <= c_t * residual_t           (spectrum per slot)
//!             0 <= z_t <= Z                          (buffer size)
//! ```
//!
//! where `c_t` is the predicted per-PRB capacity of slot `t`. The spectrum
//! variables `w_t = r_t / c_t` are substituted out and rebuilt afterwards.

use crate::error::{Error, Result};
use crate::link_model::ChannelTrace;
use crate::lp_solver::{self, LpProblem, LpStatus};
use crate::playout_buffer::{simulate_playback, VideoSpec};

/// Bits per LP unit. A power of two keeps the conversion in and out of the
/// LP exact while making coefficients O(1).
const LP_UNIT_BITS: f64 = (1u64 << 20) as f64;

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationPlan {
    /// `r_t`, bits delivered in each slot.
    pub received_bits: Vec<f64>,
    /// `z_2 .. z_T`, bits carried into each slot after the first.
    pub carryover_bits: Vec<f64>,
    /// `w_t`, fractional PRBs per slot.
    pub prbs: Vec<f64>,
    pub total_prb_slots: f64,
    pub feasible: bool,
}

impl AllocationPlan {
    fn infeasible(slots: usize) -> Self {
        AllocationPlan {
            received_bits: vec![0.0; slots],
            carryover_bits: vec![0.0; slots.saturating_sub(1)],
            prbs: vec![0.0; slots],
            total_prb_slots: 0.0,
            feasible: false,
        }
    }

    fn from_received(received_bits: Vec<f64>, carryover_bits: Vec<f64>, trace: &ChannelTrace) -> Self {
        let prbs: Vec<f64> = received_bits
            .iter()
            .zip(&trace.bits_per_prb)
            .map(|(r, c)| r / c)
            .collect();
        AllocationPlan {
            total_prb_slots: prbs.iter().sum(),
            received_bits,
            carryover_bits,
            prbs,
            feasible: true,
        }
    }

    pub fn num_slots(&self) -> usize {
        self.received_bits.len()
    }

    /// Carry-over entering every slot, `z_1 = 0` first.
    pub fn carryover_per_slot(&self) -> Vec<f64> {
        std::iter::once(0.0)
            .chain(self.carryover_bits.iter().copied())
            .collect()
    }
}

/// The `T x (2T - 1)` no-outage constraint matrix `[I B]` over
/// `x = [r_1 .. r_T, z_2 .. z_T]`.
pub fn build_buffer_matrix(slots: usize) -> Result<Vec<Vec<f64>>> {
    if slots < 1 {
        return Err(Error::invalid("buffer matrix needs at least one slot"));
    }
    let cols = 2 * slots - 1;
    Ok((0..slots)
        .map(|t| {
            let mut row = vec![0.0; cols];
            row[t] = 1.0;
            if t >= 1 {
                // z_t arrives from the previous slot
                row[slots + t - 1] = 1.0;
            }
            if t + 1 < slots {
                // z_{t+1} leaves for the next slot
                row[slots + t] = -1.0;
            }
            row
        })
        .collect())
}

fn check_inputs(spec: &VideoSpec, trace: &ChannelTrace, residual_prbs: &[f64]) -> Result<()> {
    spec.validate()?;
    if trace.len() != spec.num_slots {
        return Err(Error::invalid(format!(
            "trace has {} slots, video has {}",
            trace.len(),
            spec.num_slots
        )));
    }
    if residual_prbs.len() != spec.num_slots {
        return Err(Error::invalid(format!(
            "residual capacity has {} slots, video has {}",
            residual_prbs.len(),
            spec.num_slots
        )));
    }
    if residual_prbs.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
        return Err(Error::invalid("residual PRBs must be finite and non-negative"));
    }
    if trace.bits_per_prb.iter().any(|&c| !(c > 0.0) || !c.is_finite()) {
        return Err(Error::invalid("per-PRB capacities must be finite and positive"));
    }
    Ok(())
}

/// Appends one user's variables and no-outage rows to `lp`, returning the
/// index of its first variable.
fn add_user_block(
    lp: &mut LpProblem,
    spec: &VideoSpec,
    trace: &ChannelTrace,
    rate_caps_bits: &[f64],
) -> Result<usize> {
    let slots = spec.num_slots;
    let offset = lp.objective.len();
    let width = 2 * slots - 1;
    let total = offset + width;

    for row in lp.eq_matrix.iter_mut().chain(lp.ub_matrix.iter_mut()) {
        row.resize(total, 0.0);
    }
    lp.objective
        .extend(trace.bits_per_prb.iter().map(|c| LP_UNIT_BITS / c));
    lp.objective.extend(std::iter::repeat_n(0.0, slots - 1));
    lp.var_upper_bounds
        .extend(rate_caps_bits.iter().map(|cap| cap / LP_UNIT_BITS));
    lp.var_upper_bounds.extend(std::iter::repeat_n(
        spec.max_carryover_bits / LP_UNIT_BITS,
        slots - 1,
    ));

    let rhs = spec.bits_per_slot / LP_UNIT_BITS;
    for block_row in build_buffer_matrix(slots)? {
        let mut row = vec![0.0; total];
        row[offset..].copy_from_slice(&block_row);
        lp.add_eq(row, rhs);
    }
    Ok(offset)
}

fn extract(x: &[f64], offset: usize, slots: usize, trace: &ChannelTrace) -> AllocationPlan {
    let received: Vec<f64> = x[offset..offset + slots]
        .iter()
        .map(|v| v * LP_UNIT_BITS)
        .collect();
    let carry: Vec<f64> = x[offset + slots..offset + 2 * slots - 1]
        .iter()
        .map(|v| v * LP_UNIT_BITS)
        .collect();
    AllocationPlan::from_received(received, carry, trace)
}

/// Cheapest no-outage plan given the predicted channel and the PRBs still
/// free in each slot. Returns a plan with `feasible == false` when no plan
/// fits.
pub fn plan_anticipatory(
    spec: &VideoSpec,
    trace: &ChannelTrace,
    residual_prbs: &[f64],
) -> Result<AllocationPlan> {
    check_inputs(spec, trace, residual_prbs)?;
    let caps: Vec<f64> = trace
        .bits_per_prb
        .iter()
        .zip(residual_prbs)
        .map(|(c, w)| c * w)
        .collect();
    let mut lp = LpProblem::default();
    add_user_block(&mut lp, spec, trace, &caps)?;
    let solution = lp_solver::solve(&lp)?;
    match solution.status {
        LpStatus::Optimal => Ok(extract(&solution.x, 0, spec.num_slots, trace)),
        LpStatus::Infeasible => Ok(AllocationPlan::infeasible(spec.num_slots)),
        LpStatus::Unbounded => Err(Error::Solver(
            "planner LP unbounded despite positive costs".into(),
        )),
    }
}

/// Slot-local plan without prediction or pre-loading: deliver `V` each slot
/// if the free PRBs allow it, otherwise whatever the free PRBs carry.
pub fn plan_baseline(
    spec: &VideoSpec,
    trace: &ChannelTrace,
    residual_prbs: &[f64],
) -> Result<AllocationPlan> {
    check_inputs(spec, trace, residual_prbs)?;
    let v = spec.bits_per_slot;
    let mut short = false;
    let received: Vec<f64> = trace
        .bits_per_prb
        .iter()
        .zip(residual_prbs)
        .map(|(&c, &free)| {
            if v / c <= free {
                v
            } else {
                short = true;
                c * free
            }
        })
        .collect();
    let timeline = simulate_playback(&received, spec)?;
    let carry = timeline.carryover_bits[1..].to_vec();
    let mut plan = AllocationPlan::from_received(received, carry, trace);
    plan.feasible = !short;
    Ok(plan)
}

/// One user in a joint plan, starting at global slot `start_slot`.
#[derive(Debug, Clone)]
pub struct JointUser<'a> {
    pub spec: &'a VideoSpec,
    pub trace: &'a ChannelTrace,
    pub start_slot: usize,
}

/// Plans several users in a single LP sharing the per-slot spectrum.
/// Returns `None` when the users cannot all be served together.
pub fn plan_joint(users: &[JointUser<'_>], residual_prbs: &[f64]) -> Result<Option<Vec<AllocationPlan>>> {
    let mut lp = LpProblem::default();
    let mut offsets = Vec::with_capacity(users.len());
    for u in users {
        let end = u.start_slot + u.spec.num_slots;
        if end > residual_prbs.len() {
            return Err(Error::invalid(format!(
                "user window ends at slot {end}, ledger has {}",
                residual_prbs.len()
            )));
        }
        let window = &residual_prbs[u.start_slot..end];
        check_inputs(u.spec, u.trace, window)?;
        let caps: Vec<f64> = u
            .trace
            .bits_per_prb
            .iter()
            .zip(window)
            .map(|(c, w)| c * w)
            .collect();
        offsets.push(add_user_block(&mut lp, u.spec, u.trace, &caps)?);
    }

    // Shared spectrum: sum_k r_{k,t} / c_{k,t} <= residual_t on every slot
    // used by more than one user.
    let n = lp.num_vars();
    for (slot, &free) in residual_prbs.iter().enumerate() {
        let active: Vec<(usize, usize)> = users
            .iter()
            .enumerate()
            .filter(|(_, u)| slot >= u.start_slot && slot < u.start_slot + u.spec.num_slots)
            .map(|(k, u)| (k, slot - u.start_slot))
            .collect();
        if active.len() < 2 {
            continue;
        }
        let mut row = vec![0.0; n];
        for (k, t) in active {
            row[offsets[k] + t] = LP_UNIT_BITS / users[k].trace.bits_per_prb[t];
        }
        lp.add_ub(row, free);
    }

    let solution = lp_solver::solve(&lp)?;
    match solution.status {
        LpStatus::Optimal => Ok(Some(
            users
                .iter()
                .zip(&offsets)
                .map(|(u, &off)| extract(&solution.x, off, u.spec.num_slots, u.trace))
                .collect(),
        )),
        LpStatus::Infeasible => Ok(None),
        LpStatus::Unbounded => Err(Error::Solver("joint LP unbounded".into())),
    }
}
