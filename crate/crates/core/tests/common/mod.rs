#![allow(dead_code)]

use sirfit_core::sir::{step_euler, SirParams, SirState};

/// Fixed-step Euler reference solution sampled once per day.
pub fn euler_daily(
    initial: SirState,
    params: &SirParams,
    population: f64,
    dt: f64,
    days: usize,
) -> Vec<SirState> {
    let per_day = (1.0 / dt).round() as usize;
    let mut x = initial;
    let mut out = Vec::with_capacity(days + 1);
    out.push(x);
    for _ in 0..days {
        for _ in 0..per_day {
            x = step_euler(&x, params, population, dt).unwrap();
        }
        out.push(x);
    }
    out
}

/// Richardson extrapolation of two Euler runs at `dt` and `2 dt`, second
/// order accurate.
pub fn euler_extrapolated(
    initial: SirState,
    params: &SirParams,
    population: f64,
    dt: f64,
    days: usize,
) -> Vec<SirState> {
    let fine = euler_daily(initial, params, population, dt, days);
    let coarse = euler_daily(initial, params, population, 2.0 * dt, days);
    fine.iter()
        .zip(&coarse)
        .map(|(f, c)| SirState::new(2.0 * f.s - c.s, 2.0 * f.i - c.i, 2.0 * f.r - c.r))
        .collect()
}

pub fn max_component_error(a: &[SirState], b: &[SirState]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.s - y.s).abs().max((x.i - y.i).abs()).max((x.r - y.r).abs()))
        .fold(0.0, f64::max)
}
