//! Sampling of `G₁^*G₂ ∘ φ` on circles of the annulus `ρ < |z| < 1`, with
//! `φ(z) = (1+z)/(1−z)`.
//!
//! The circle `|z| = r` maps to the right-half-plane circle with centre
//! `(1+r²)/(1−r²)` and radius `2r/(1−r²)`. It is traversed as
//! `s(ψ) = c − R·e^{iψ}`, counter-clockwise and starting at the point nearest
//! the origin; the orientation agrees with `z = r·e^{iθ}`, `θ = ψ + π`.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::{axis_condition, base_flags, Diagnostics, Flag, MetricResult};
use crate::algebra::phase::principal_diff;
use crate::algebra::Complex64;
use crate::plants::Plant;
use crate::{Error, Result};

/// Modulus below which the pairing counts as vanishing on the annulus.
pub const ANNULUS_TOL: f64 = 1e-5;

const MAX_DEPTH: u32 = 48;
/// Phase steps above this are bisected.
const PHASE_STEP: f64 = PI / 8.0;
/// Winding must land this close to an integer (in turns).
const WINDING_SLACK: f64 = 0.05;

/// Circles sampled for `d^ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnulusProbe {
    pub rho: f64,
    pub radii: Vec<f64>,
    pub samples_per_circle: usize,
    /// Extra dyadic levels of circles beyond `1 − 2^{-12}`.
    pub refinement_near_one: u32,
}

impl AnnulusProbe {
    pub const DEFAULT_SAMPLES: usize = 256;
    pub const DEFAULT_REFINEMENT: u32 = 4;

    /// Radii `1 − 2^{-x}` for `x = 2.5, 3, …, 12 + refinement`.
    pub fn master_radii(refinement_near_one: u32) -> Vec<f64> {
        let top = 2 * (12 + refinement_near_one);
        (5..=top).map(|h| 1.0 - (-(h as f64) / 2.0).exp2()).collect()
    }

    /// Master circles inside `(ρ, 1)`; when fewer than four remain, eight
    /// circles geometrically approaching `|z| = 1` from `ρ` replace them.
    pub fn new(rho: f64) -> Result<Self> {
        Self::with_settings(rho, Self::DEFAULT_SAMPLES, Self::DEFAULT_REFINEMENT)
    }

    pub fn with_settings(rho: f64, samples_per_circle: usize, refinement_near_one: u32) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidArgument(format!("rho must lie in (0, 1), got {rho}")));
        }
        if samples_per_circle < 256 {
            return Err(Error::InvalidArgument(format!(
                "at least 256 samples per circle are required, got {samples_per_circle}"
            )));
        }
        let mut radii: Vec<f64> = Self::master_radii(refinement_near_one)
            .into_iter()
            .filter(|&r| r > rho)
            .collect();
        if radii.len() < 4 {
            radii = (1..=8).map(|j| 1.0 - (1.0 - rho) * (-(j as f64) / 2.0).exp2()).collect();
        }
        Ok(Self {
            rho,
            radii,
            samples_per_circle,
            refinement_near_one,
        })
    }

    /// All master circles, used by the `ρ → 1` limit.
    pub fn master(refinement_near_one: u32) -> Self {
        Self {
            rho: 0.75,
            radii: Self::master_radii(refinement_near_one),
            samples_per_circle: Self::DEFAULT_SAMPLES,
            refinement_near_one,
        }
    }
}

/// Length scales steering the arc step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepScale {
    /// Largest delay among the factors (0 for rational data).
    pub omega: f64,
    /// Smallest pole distance from the axis.
    pub r_min: f64,
}

impl StepScale {
    pub fn for_plants(p1: &Plant, p2: &Plant) -> Self {
        let elems = [p1.n(), p1.d(), p2.n(), p2.d()];
        let omega = elems.iter().map(|e| e.max_abs_delay()).fold(0.0, f64::max);
        let r_min = elems
            .iter()
            .flat_map(|e| e.atoms().iter())
            .map(|a| a.rate.re)
            .fold(f64::INFINITY, f64::min);
        Self {
            omega,
            r_min: if r_min.is_finite() { r_min } else { 1.0 },
        }
    }

    /// Arc-length step at `s`: resolves `e^{-sτ}` oscillation while it is
    /// not yet damped, and rational features on the scale of `|s|`.
    fn step(&self, s: Complex64) -> f64 {
        let osc = if self.omega > 0.0 {
            let effective = if s.re > 0.0 {
                self.omega.min(25.0 / s.re)
            } else {
                self.omega
            };
            PI / (8.0 * effective)
        } else {
            f64::INFINITY
        };
        osc.min(0.1 * s.norm().max(self.r_min))
    }
}

/// Samples of one circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleSamples {
    pub radius: f64,
    pub winding: i64,
    /// Measured winding in turns.
    pub turns: f64,
    /// Every phase step ended at most π/2 and `turns` is near an integer.
    pub resolved: bool,
    pub min_modulus: f64,
    /// Point `s` of the smallest sampled modulus.
    pub argmin: Complex64,
    /// Lower bound of `|f|` from adjacent-sample differences.
    pub lower_bound: f64,
    pub mismatch_sup: f64,
    pub evaluations: usize,
}

impl CircleSamples {
    pub fn certified_nonvanishing(&self) -> bool {
        self.lower_bound > ANNULUS_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnulusField {
    pub circles: Vec<CircleSamples>,
}

impl AnnulusField {
    /// The circles strictly outside radius `rho`.
    pub fn restrict(&self, rho: f64) -> AnnulusField {
        AnnulusField {
            circles: self.circles.iter().copied().filter(|c| c.radius > rho).collect(),
        }
    }
}

/// Image point of `|z| = r` at parameter `ψ`, computed without cancellation
/// near the origin.
fn circle_point(r: f64, psi: f64) -> Complex64 {
    let big_r = 2.0 * r / ((1.0 - r) * (1.0 + r));
    let half = (0.5 * psi).sin();
    let re = (1.0 - r) / (1.0 + r) + 2.0 * big_r * half * half;
    Complex64::new(re, -big_r * psi.sin())
}

struct Tracker {
    total: f64,
    max_step: f64,
    min_modulus: f64,
    argmin: Complex64,
    lower_bound: f64,
    mismatch_sup: f64,
    evaluations: usize,
}

impl Tracker {
    fn visit(&mut self, s: Complex64, v: (Complex64, Complex64)) {
        let m = v.0.norm();
        if m < self.min_modulus {
            self.min_modulus = m;
            self.argmin = s;
        }
        self.mismatch_sup = self.mismatch_sup.max(v.1.norm());
    }
}

#[allow(clippy::too_many_arguments)]
fn segment<F>(f: &F, r: f64, a: f64, b: f64, fa: Complex64, fb: Complex64, depth: u32, t: &mut Tracker)
where
    F: Fn(Complex64) -> (Complex64, Complex64),
{
    let d = principal_diff(fa, fb);
    let lb = fa.norm().min(fb.norm()) - 0.5 * (fa - fb).norm();
    let small = fa.norm().min(fb.norm()) <= ANNULUS_TOL;
    let refine = d.abs() > PHASE_STEP || (lb <= ANNULUS_TOL && !small);
    if !refine || depth == 0 || small {
        t.total += d;
        t.max_step = t.max_step.max(d.abs());
        t.lower_bound = t.lower_bound.min(lb);
        return;
    }
    let m = 0.5 * (a + b);
    let sm = circle_point(r, m);
    let vm = f(sm);
    t.evaluations += 1;
    t.visit(sm, vm);
    segment(f, r, a, m, fa, vm.0, depth - 1, t);
    segment(f, r, m, b, vm.0, fb, depth - 1, t);
}

fn sample_circle<F>(r: f64, scale: StepScale, samples: usize, f: &F) -> CircleSamples
where
    F: Fn(Complex64) -> (Complex64, Complex64) + Sync,
{
    let big_r = 2.0 * r / ((1.0 - r) * (1.0 + r));
    let max_dpsi = 2.0 * PI / samples as f64;
    let mut params = vec![0.0];
    let mut psi = 0.0;
    while psi < 2.0 * PI {
        let step = (scale.step(circle_point(r, psi)) / big_r).min(max_dpsi);
        psi = (psi + step).min(2.0 * PI);
        params.push(psi);
    }
    let vals: Vec<(Complex64, Complex64)> = params.iter().map(|&p| f(circle_point(r, p))).collect();
    let mut t = Tracker {
        total: 0.0,
        max_step: 0.0,
        min_modulus: f64::INFINITY,
        argmin: Complex64::new(f64::NAN, f64::NAN),
        lower_bound: f64::INFINITY,
        mismatch_sup: 0.0,
        evaluations: params.len(),
    };
    for (&p, &v) in params.iter().zip(&vals) {
        t.visit(circle_point(r, p), v);
    }
    for i in 0..params.len() - 1 {
        segment(f, r, params[i], params[i + 1], vals[i].0, vals[i + 1].0, MAX_DEPTH, &mut t);
    }
    let turns = t.total / (2.0 * PI);
    let winding = turns.round();
    CircleSamples {
        radius: r,
        winding: winding as i64,
        turns,
        resolved: t.max_step <= 0.5 * PI && (turns - winding).abs() <= WINDING_SLACK,
        min_modulus: t.min_modulus,
        argmin: t.argmin,
        lower_bound: t.lower_bound,
        mismatch_sup: t.mismatch_sup,
        evaluations: t.evaluations,
    }
}

/// Samples an arbitrary pair `s ↦ (f(s), g(s))` on the probe circles, where
/// `f` is tracked for zeros and winding and `|g|` for its supremum.
pub fn annulus_eval_with<F>(probe: &AnnulusProbe, scale: StepScale, f: F) -> AnnulusField
where
    F: Fn(Complex64) -> (Complex64, Complex64) + Sync,
{
    let circles = probe
        .radii
        .par_iter()
        .map(|&r| sample_circle(r, scale, probe.samples_per_circle, &f))
        .collect();
    AnnulusField { circles }
}

/// `(G₁^*G₂, G̃₂G₁)` composed with `φ` on the probe circles.
pub fn annulus_eval(p1: &Plant, p2: &Plant, probe: &AnnulusProbe) -> AnnulusField {
    let (n1, d1, n2, d2) = (p1.n(), p1.d(), p2.n(), p2.d());
    annulus_eval_with(probe, StepScale::for_plants(p1, p2), |s| {
        let (a, b) = (n1.eval_plus_unchecked(s), d1.eval_plus_unchecked(s));
        let (c, d) = (n2.eval_plus_unchecked(s), d2.eval_plus_unchecked(s));
        (a.conj() * c + b.conj() * d, c * b - d * a)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusIndex {
    /// Winding shared by all circles (that of the outermost when they differ).
    pub winding: i64,
    pub min_modulus: f64,
    pub constancy_ok: bool,
    pub resolved: bool,
    /// Every circle's lower bound exceeds [`ANNULUS_TOL`].
    pub nonvanishing: bool,
}

pub fn annulus_index(field: &AnnulusField) -> AnnulusIndex {
    let circles = &field.circles;
    let winding = circles.last().map_or(0, |c| c.winding);
    AnnulusIndex {
        winding,
        min_modulus: circles.iter().map(|c| c.min_modulus).fold(f64::INFINITY, f64::min),
        constancy_ok: circles.iter().all(|c| c.winding == winding),
        resolved: circles.iter().all(|c| c.resolved),
        nonvanishing: circles.iter().all(|c| c.certified_nonvanishing()),
    }
}

/// Branch decision on a sampled annulus, given the axis outcome.
fn decide(field: &AnnulusField, axis: Option<(f64, f64)>, mut diag: Diagnostics) -> MetricResult {
    let idx = annulus_index(field);
    diag.margin = Some(diag.margin.unwrap_or(f64::INFINITY).min(idx.min_modulus));
    diag.annulus_winding = Some(idx.winding);
    let Some((axis_sup, axis_err)) = axis else {
        return MetricResult::unity(diag);
    };
    if !idx.nonvanishing {
        diag.flags.push(Flag::AnnulusZero);
        return MetricResult::unity(diag);
    }
    if !idx.resolved {
        diag.flags.push(Flag::WindingUnresolved);
        return MetricResult::unity(diag);
    }
    if !idx.constancy_ok {
        diag.flags.push(Flag::WindingNotConstant);
        return MetricResult::unity(diag);
    }
    if idx.winding != 0 {
        diag.flags.push(Flag::WindingNonzero);
        return MetricResult::unity(diag);
    }
    // the mismatch is holomorphic, so its sup over the annulus is attained on |z| = 1
    let ring_sup = field.circles.iter().map(|c| c.mismatch_sup).fold(0.0, f64::max);
    diag.error_bound = axis_err;
    MetricResult::finite(axis_sup.max(ring_sup), diag)
}

/// `d^ρ_{H∞}(P₁, P₂)`: the sup of `|G̃₂G₁ ∘ φ|` on the annulus when
/// `G₁^*G₂ ∘ φ` is invertible there with winding 0, otherwise 1.
pub fn d_hinf_rho(p1: &Plant, p2: &Plant, rho: f64, tol: f64) -> Result<MetricResult> {
    let probe = AnnulusProbe::new(rho)?;
    let mut diag = Diagnostics {
        flags: base_flags(p1, p2),
        ..Default::default()
    };
    let axis = axis_condition(p1, p2, tol, &mut diag);
    let field = annulus_eval(p1, p2, &probe);
    Ok(decide(&field, axis, diag))
}

/// Trace tolerance for monotonicity in `ρ`.
const MONOTONE_SLACK: f64 = 1e-8;
/// Successive trace values closer than this count as stabilized.
const STABLE_STEP: f64 = 1e-4;

/// `d_{H∞} = lim_{ρ→1} d^ρ_{H∞}` from `ρ_k = 1 − 2^{-k}`, `k = 2..12`, on
/// nested circle sets.
pub fn d_hinf(p1: &Plant, p2: &Plant, tol: f64) -> Result<MetricResult> {
    let mut base = Diagnostics {
        flags: base_flags(p1, p2),
        ..Default::default()
    };
    let axis = axis_condition(p1, p2, tol, &mut base);
    let field = annulus_eval(p1, p2, &AnnulusProbe::master(AnnulusProbe::DEFAULT_REFINEMENT));
    let mut trace = Vec::new();
    let mut last: Option<MetricResult> = None;
    for k in 2..=12 {
        let rho = 1.0 - (-(k as f64)).exp2();
        let result = decide(&field.restrict(rho), axis, base.clone());
        if let Some(prev) = &last {
            if result.value > prev.value + MONOTONE_SLACK {
                return Err(Error::Numerical(format!(
                    "rho trace increases at rho = {rho}: {} -> {}",
                    prev.value, result.value
                )));
            }
        }
        trace.push((rho, result.value));
        last = Some(result);
    }
    let mut result = last.expect("nonempty trace");
    let n = trace.len();
    if (trace[n - 1].1 - trace[n - 2].1).abs() >= STABLE_STEP {
        result.diagnostics.flags.push(Flag::TraceNotStabilized);
    }
    result.diagnostics.rho_trace = trace;
    Ok(result)
}

/// First `k` (2-based) at which the trace has stabilized for good.
pub fn stabilization_step(trace: &[(f64, f64)]) -> Option<usize> {
    (1..trace.len())
        .find(|&i| trace[i..].windows(2).all(|w| (w[1].1 - w[0].1).abs() < STABLE_STEP)
            && (trace[i].1 - trace[i - 1].1).abs() < STABLE_STEP)
        .map(|i| i + 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{d_aplus, Branch, DEFAULT_TOL};
    use crate::plants::mirrored_gain_delay;

    #[test]
    fn circle_images() {
        // z = -r maps to (1-r)/(1+r), z = r to (1+r)/(1-r)
        let r = 0.9;
        let near = circle_point(r, 0.0);
        assert!((near - Complex64::new(0.1 / 1.9, 0.0)).norm() < 1e-14);
        let far = circle_point(r, PI);
        assert!((far.re - 1.9 / 0.1).abs() < 1e-9);
        let phi = |z: Complex64| (1.0 + z) / (1.0 - z);
        let (c, big_r) = ((1.0 + r * r) / (1.0 - r * r), 2.0 * r / (1.0 - r * r));
        for &th in &[0.3, 1.7, 4.0] {
            let s = phi(Complex64::from_polar(r, th));
            assert!(((s - c).norm() - big_r).abs() < 1e-9);
            assert!(((circle_point(r, th) - c).norm() - big_r).abs() < 1e-9);
        }
    }

    #[test]
    fn identity_field_winds_once() {
        let probe = AnnulusProbe::new(0.5).unwrap();
        let scale = StepScale { omega: 0.0, r_min: 1.0 };
        let field = annulus_eval_with(&probe, scale, |s| ((s - 1.0) / (s + 1.0), Complex64::new(0.0, 0.0)));
        let idx = annulus_index(&field);
        assert_eq!(idx.winding, 1);
        assert!(idx.constancy_ok && idx.resolved && idx.nonvanishing);
        for c in &field.circles {
            assert!((c.min_modulus - c.radius).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_field() {
        let probe = AnnulusProbe::new(0.9).unwrap();
        let scale = StepScale { omega: 1.0, r_min: 1.0 };
        let field = annulus_eval_with(&probe, scale, |_| (Complex64::new(0.3, -0.1), Complex64::new(0.0, 0.0)));
        let idx = annulus_index(&field);
        assert_eq!(idx.winding, 0);
        assert!((idx.min_modulus - 0.1f64.hypot(0.3)).abs() < 1e-15);
        assert!(idx.constancy_ok && idx.nonvanishing);
    }

    #[test]
    fn mirrored_pair_has_annulus_zeros() {
        let (p1, p2) = mirrored_gain_delay(0.8, 1.0).unwrap();
        let field = annulus_eval(&p1, &p2, &AnnulusProbe::new(0.9).unwrap());
        let idx = annulus_index(&field);
        assert!(idx.min_modulus <= ANNULUS_TOL, "{idx:?}");
        assert!(!idx.nonvanishing);
        let zero_re = 0.5 * (16.0f64 / 9.0).ln();
        for c in &field.circles {
            assert!((c.argmin.re - zero_re).abs() < 1e-4, "{c:?}");
        }
        let d = d_hinf_rho(&p1, &p2, 0.9, DEFAULT_TOL).unwrap();
        assert_eq!(d.branch, Branch::Unity);
        assert!(d.has_flag(Flag::AnnulusZero));
    }

    #[test]
    fn limit_on_mirrored_pair_is_one() {
        let (p1, p2) = mirrored_gain_delay(0.8, 1.0).unwrap();
        let d = d_hinf(&p1, &p2, DEFAULT_TOL).unwrap();
        assert_eq!(d.value, 1.0);
        assert_eq!(d.diagnostics.rho_trace.len(), 11);
        assert_eq!(stabilization_step(&d.diagnostics.rho_trace), Some(3));
    }

    #[test]
    fn rational_pair_agrees_with_axis_metric() {
        let a = Plant::first_order(1.0, 1.0).unwrap();
        let b = Plant::first_order(1.0, 2.0).unwrap();
        let h = d_hinf_rho(&a, &b, 0.9, DEFAULT_TOL).unwrap();
        let ap = d_aplus(&a, &b, DEFAULT_TOL);
        assert_eq!(h.branch, Branch::Finite, "{h:?}");
        assert!((h.value - ap.value).abs() < 2e-3);
        let same = d_hinf(&a, &a, DEFAULT_TOL).unwrap();
        assert!(same.value < 1e-12);
    }
}
