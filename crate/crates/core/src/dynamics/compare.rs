use alloc::vec::Vec;

use super::flow::{rate_with, FlowField, FlowKind, RateConvention};
use super::integrate::{integrate, integrate_with, IntegratorConfig};
use crate::error::Result;
use crate::math::hypot;
use crate::system::{additive_hamiltonian, PhaseState, Potential, SystemParams, Trajectory};

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: PhaseState,
    b: PhaseState,
    cx: f64,
}

fn point_segment_distance(q: PhaseState, s: &Segment) -> f64 {
    let (dx, dp) = (s.b.x - s.a.x, s.b.p - s.a.p);
    let len2 = dx * dx + dp * dp;
    let t = if len2 > 0.0 {
        (((q.x - s.a.x) * dx + (q.p - s.a.p) * dp) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    hypot(q.x - (s.a.x + t * dx), q.p - (s.a.p + t * dp))
}

/// One-sided geometric distance from `a` to `b`: the largest distance from a
/// sample of `a` to the polyline through the samples of `b`.
///
/// Time stamps are ignored, so two flows that trace the same orbit at
/// different speeds score the rounding/integration error only. For that
/// comparison `a` should be the trajectory covering less of the orbit.
pub fn coincidence_metric(a: &Trajectory, b: &Trajectory) -> f64 {
    let pts: Vec<PhaseState> = b.samples().iter().map(|s| s.state).collect();
    if pts.len() == 1 {
        return a
            .samples()
            .iter()
            .map(|s| s.state.distance(&pts[0]))
            .fold(0.0, f64::max);
    }
    let mut segments: Vec<Segment> = pts
        .windows(2)
        .map(|w| Segment {
            a: w[0],
            b: w[1],
            cx: 0.5 * (w[0].x + w[1].x),
        })
        .collect();
    let half_width = segments
        .iter()
        .map(|s| 0.5 * (s.a.x - s.b.x).abs())
        .fold(0.0, f64::max);
    segments.sort_by(|l, r| l.cx.total_cmp(&r.cx));

    // Upper bound from the segment that served the previous query, then an
    // exact search over the x-slab that can still beat it.
    let mut hint = 0usize;
    let mut worst = 0.0f64;
    for (k, sample) in a.samples().iter().enumerate() {
        let q = sample.state;
        let mut best = f64::INFINITY;
        let mut best_idx = hint;
        if k == 0 {
            for (i, s) in segments.iter().enumerate() {
                let d = point_segment_distance(q, s);
                if d < best {
                    best = d;
                    best_idx = i;
                }
            }
        } else {
            let lo = hint.saturating_sub(8);
            let hi = (hint + 8).min(segments.len() - 1);
            for (i, s) in segments.iter().enumerate().take(hi + 1).skip(lo) {
                let d = point_segment_distance(q, s);
                if d < best {
                    best = d;
                    best_idx = i;
                }
            }
            let reach = best + half_width;
            let start = segments.partition_point(|s| s.cx < q.x - reach);
            for (i, s) in segments.iter().enumerate().skip(start) {
                if s.cx > q.x + reach {
                    break;
                }
                let d = point_segment_distance(q, s);
                if d < best {
                    best = d;
                    best_idx = i;
                }
            }
        }
        hint = best_idx;
        worst = worst.max(best);
    }
    worst
}

/// [`rescaling_check_with`] using the chain-rule rate factors.
pub fn rescaling_check(
    kind: FlowKind,
    potential: &Potential,
    params: &SystemParams,
    start: PhaseState,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    rescaling_check_with(RateConvention::Derived, kind, potential, params, start, cfg)
}

/// Runs the `kind` flow for `t_end` and the standard flow for
/// `rate · t_end`, where `rate` comes from `convention` at the starting
/// energy, and returns the distance between the two end points.
///
/// A negative rate runs the standard flow backwards; a zero rate compares
/// against `start`.
pub fn rescaling_check_with(
    convention: RateConvention,
    kind: FlowKind,
    potential: &Potential,
    params: &SystemParams,
    start: PhaseState,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let energy = additive_hamiltonian(start, potential, params);
    let rate = rate_with(convention, kind, energy, params)?;
    let scaled = FlowField::new(kind, potential.clone(), *params)?;
    let end = integrate(&scaled, start, cfg)?.last().state;

    let standard_time = rate * cfg.t_end();
    if standard_time == 0.0 {
        return Ok(end.distance(&start));
    }
    let standard = FlowField::new(FlowKind::Standard, potential.clone(), *params)?;
    let reference = if standard_time > 0.0 {
        integrate(&standard, start, &cfg.with_t_end(standard_time)?)?
    } else {
        let backwards = IntegratorConfig::rk4(cfg.dt(), -standard_time)?;
        integrate_with(
            |s| {
                let (dx, dp) = standard.eval(s);
                Ok((-dx, -dp))
            },
            start,
            &backwards,
            energy,
        )?
    };
    Ok(end.distance(&reference.last().state))
}
