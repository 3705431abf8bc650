//! Radial reduction of disc averages.
//!
//! For a radial function `phi` and a point `w` at distance `d` from the
//! origin, the average of `phi(|y - w|)` over `y` uniform in `B(o, R)` is
//! `(1 / pi R^2) int phi(r) r theta(r, d) dr`, where `theta` is the angular
//! measure of the circle of radius `r` around `w` that lies inside the disc.

use std::f64::consts::{PI, TAU};

use crate::quad::{integrate, QuadOptions, QuadResult, QuadValue};

/// Angular measure of `{w + r e^{i t}} ∩ B(o, R)` for `|w| = d`.
pub fn arc_weight(r: f64, d: f64, radius: f64) -> f64 {
    if r <= radius - d {
        return TAU;
    }
    if r <= d - radius || r >= d + radius {
        return 0.0;
    }
    let c = ((r * r + d * d - radius * radius) / (2.0 * r * d)).clamp(-1.0, 1.0);
    2.0 * c.acos()
}

/// Average of `phi(|y - w|)` over `y` uniform in `B(o, radius)`, `|w| = d`.
///
/// The full-circle part `[0, R - d]` is integrated directly; the partial-arc
/// part `[|R - d|, R + d]` uses `r = m - h cos t`, which absorbs the square
/// root behaviour of the arc weight at both ends.
pub fn disc_average<V, F>(phi: F, d: f64, radius: f64, opts: &QuadOptions) -> QuadResult<V>
where
    V: QuadValue,
    F: Fn(f64) -> V,
{
    let area = PI * radius * radius;
    let lo = (radius - d).abs();
    let hi = radius + d;
    let partial = if d > 0.0 {
        let m = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        Some(integrate(
            |t: f64| {
                let (sin, cos) = t.sin_cos();
                let r = m - h * cos;
                phi(r) * (r * arc_weight(r, d, radius) * h * sin / area)
            },
            0.0,
            PI,
            opts,
        ))
    } else {
        None
    };
    if d >= radius {
        return partial.expect("d > 0 here");
    }
    let full = integrate(|r: f64| phi(r) * (TAU * r / area), 0.0, radius - d, opts);
    match partial {
        None => full,
        Some(p) => QuadResult {
            value: full.value + p.value,
            error: full.error + p.error,
            evaluations: full.evaluations + p.evaluations,
            converged: full.converged && p.converged,
        },
    }
}
