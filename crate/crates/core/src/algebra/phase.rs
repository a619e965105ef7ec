//! Continuous phase tracking along a parameterized curve.

use super::Complex64;
use std::f64::consts::PI;

/// `arg(b / a)` in `(-π, π]`.
#[inline]
pub fn principal_diff(a: Complex64, b: Complex64) -> f64 {
    (b * a.conj()).arg()
}

/// Total unwrapped phase change along a sampled sequence.
pub fn unwrap_total(values: &[Complex64]) -> f64 {
    values.windows(2).map(|w| principal_diff(w[0], w[1])).sum()
}

/// Unwrapped phase of a sequence, starting from the principal argument.
pub fn unwrap(values: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let Some(first) = values.first() else {
        return out;
    };
    let mut acc = first.arg();
    out.push(acc);
    for w in values.windows(2) {
        acc += principal_diff(w[0], w[1]);
        out.push(acc);
    }
    out
}

/// Result of adaptive phase tracking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseTrace {
    pub total: f64,
    /// Largest phase step left after refinement.
    pub max_step: f64,
    pub evaluations: usize,
}

impl PhaseTrace {
    /// Steps above π/2 cannot be attributed to a direction reliably.
    pub fn resolved(&self) -> bool {
        self.max_step <= 0.5 * PI
    }
}

/// Phase change of `f` along `params`, bisecting any interval whose phase
/// step exceeds π/4 (up to `depth` halvings).
pub fn track_phase(
    f: &impl Fn(f64) -> Complex64,
    params: &[f64],
    values: &[Complex64],
    depth: u32,
) -> PhaseTrace {
    let mut trace = PhaseTrace {
        total: 0.0,
        max_step: 0.0,
        evaluations: 0,
    };
    for (p, v) in params.windows(2).zip(values.windows(2)) {
        segment(f, p[0], p[1], v[0], v[1], depth, &mut trace);
    }
    trace
}

fn segment(
    f: &impl Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    fa: Complex64,
    fb: Complex64,
    depth: u32,
    trace: &mut PhaseTrace,
) {
    let d = principal_diff(fa, fb);
    if d.abs() <= 0.25 * PI || depth == 0 {
        trace.total += d;
        trace.max_step = trace.max_step.max(d.abs());
        return;
    }
    let m = 0.5 * (a + b);
    let fm = f(m);
    trace.evaluations += 1;
    segment(f, a, m, fa, fm, depth - 1, trace);
    segment(f, m, b, fm, fb, depth - 1, trace);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unwrap_full_turn() {
        let vals: Vec<Complex64> = (0..=64)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 64.0))
            .collect();
        assert!((unwrap_total(&vals) - 2.0 * PI).abs() < 1e-12);
        let u = unwrap(&vals);
        assert!((u[64] - u[0] - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn adaptive_tracking_recovers_fast_rotation() {
        let f = |t: f64| Complex64::from_polar(1.0, -40.0 * t);
        let params = [0.0, 0.5, 1.0];
        let vals: Vec<Complex64> = params.iter().map(|&t| f(t)).collect();
        let trace = track_phase(&f, &params, &vals, 12);
        assert!((trace.total + 40.0).abs() < 1e-9);
        assert!(trace.resolved());
    }
}
