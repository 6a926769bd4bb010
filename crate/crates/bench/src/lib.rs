//! Fixtures shared by the benchmarks.

use preload_core::{ChannelTrace, ScenarioConfig, TraceSource, VideoSpec};

/// Default scenario with the shadowing standard deviation overridden.
pub fn scenario(sigma_db: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.shadowing.sigma_db = sigma_db;
    cfg
}

/// Spec, first-user trace and a flat residual of `prbs` for `cfg`.
pub fn single_user_inputs(cfg: &ScenarioConfig, prbs: f64) -> (VideoSpec, ChannelTrace, Vec<f64>) {
    let spec = cfg.video_spec().expect("valid scenario");
    let trace = cfg.trace(cfg.seed, 0).expect("valid scenario");
    let residual = vec![prbs; spec.num_slots];
    (spec, trace, residual)
}
