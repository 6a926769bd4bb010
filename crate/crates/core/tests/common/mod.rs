//! Test-only helpers: a brute-force LP oracle and random instance generators.

#![allow(dead_code, clippy::needless_range_loop)]

use preload_core::LpProblem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Solves a square system by Gaussian elimination with partial pivoting.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for i in col + 1..n {
            let f = a[i][col] / a[col][col];
            for k in col..n {
                a[i][k] -= f * a[col][k];
            }
            b[i] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

/// Minimum objective over all basic feasible solutions, or `None` when no
/// vertex is feasible. Requires finite upper bounds (bounded region) and
/// linearly independent equality rows.
pub fn vertex_enumeration(p: &LpProblem) -> Option<f64> {
    let n = p.num_vars();
    let m_eq = p.eq_matrix.len();
    assert!(m_eq <= n);
    // Candidate hyperplanes besides the equalities: inequality rows, then
    // x_j = 0, then x_j = u_j.
    let mut planes: Vec<(Vec<f64>, f64)> = p
        .ub_matrix
        .iter()
        .cloned()
        .zip(p.ub_rhs.iter().copied())
        .collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), 0.0));
        planes.push((e, p.var_upper_bounds[j]));
    }
    let mut best: Option<f64> = None;
    combinations(planes.len(), n - m_eq, &mut |pick| {
        let mut a: Vec<Vec<f64>> = p.eq_matrix.clone();
        let mut b: Vec<f64> = p.eq_rhs.clone();
        for &i in pick {
            a.push(planes[i].0.clone());
            b.push(planes[i].1);
        }
        let Some(x) = solve_square(a, b) else { return };
        if p.max_violation(&x) > 1e-9 {
            return;
        }
        let obj = p.objective_value(&x);
        if best.is_none_or(|b| obj < b) {
            best = Some(obj);
        }
    });
    best
}

/// Random LP with 1..=6 variables, at most 4 rows, finite bounds. Most
/// instances are built around a feasible point; some get a perturbed
/// right-hand side and may be infeasible.
pub fn random_bounded_lp(rng: &mut ChaCha8Rng) -> LpProblem {
    let n = rng.random_range(1..=6usize);
    let rows = rng.random_range(0..=4usize);
    let m_eq = rng.random_range(0..=rows.min(n));
    let upper: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..10.0)).collect();
    let x0: Vec<f64> = upper.iter().map(|&u| rng.random_range(0.0..=u)).collect();
    let objective: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
    let mut p = LpProblem::new(objective);
    p.var_upper_bounds = upper;
    let perturb = rng.random_bool(0.2);
    for i in 0..rows {
        let row: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let at: f64 = row.iter().zip(&x0).map(|(a, x)| a * x).sum();
        let shift = if perturb {
            rng.random_range(-20.0..20.0)
        } else {
            0.0
        };
        if i < m_eq {
            p.add_eq(row, at + shift);
        } else {
            p.add_ub(row, at + rng.random_range(0.0..3.0) + shift);
        }
    }
    p
}

use preload_core::admission::TraceSource;
use preload_core::link_model::ShadowingModel;
use preload_core::{ChannelTrace, ScenarioConfig, VideoSpec};

/// A perturbed highway scenario: random seed, shadowing, speed, buffer size
/// and per-slot free spectrum.
pub fn random_scenario(rng: &mut ChaCha8Rng) -> (VideoSpec, ChannelTrace, Vec<f64>) {
    let cfg = ScenarioConfig {
        seed: rng.random(),
        user_speed_mps: rng.random_range(10.0..35.0),
        shadowing: ShadowingModel {
            sigma_db: rng.random_range(0.0..12.0),
            decorrelation_m: rng.random_range(5.0..100.0),
            ..Default::default()
        },
        ..Default::default()
    };
    let mut cfg = cfg;
    cfg.video.max_carryover_v = rng.random_range(0.0..12.0);
    cfg.validate().unwrap();
    let spec = cfg.video_spec().unwrap();
    let trace = cfg.trace(cfg.seed, rng.random_range(0..8)).unwrap();
    let low = rng.random_range(0.0..3.0);
    let residual = (0..spec.num_slots)
        .map(|_| rng.random_range(low..low + 20.0))
        .collect();
    (spec, trace, residual)
}
