//! Upper bounds on the gap metric from explicit stabilizing controllers.

use super::{d_aplus, MetricResult};
use crate::algebra::{limit_scan_points, scan_function};
use crate::plants::Plant;
use crate::stability::{certify_unit, require_stabilizing};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GapBound {
    /// `min(1, raw)`.
    pub value: f64,
    /// Sampled `sup ‖G₂ − G₁Q₀‖` before capping.
    pub raw: f64,
    pub controller: String,
}

/// `‖G₂ − G₁Q₀‖_∞` with `Q₀ = (K̃₀G₁)^{-1}K̃₀G₂`, evaluated pointwise.
///
/// `C₀` must stabilize `P₁` and `K̃₀G₂` must be a unit of `A+`, so that
/// `Q₀` is an admissible unit and the value bounds the gap from above.
pub fn gap_upper_bound(p1: &Plant, p2: &Plant, c0: &Plant, tol: f64) -> Result<GapBound> {
    let cl = require_stabilizing(p1, c0, tol)?;
    let k2 = &(c0.d() * p2.d()) - &(c0.n() * p2.n());
    let cert = certify_unit(&k2, tol);
    if !cert.is_certified() {
        return Err(Error::Precondition(format!(
            "K̃₀G₂ is not a unit for controller {} ({})",
            c0.label, cert.detail
        )));
    }
    let k1 = &cl.denominator;
    let pts = limit_scan_points(&[p1.n(), p1.d(), p2.n(), p2.d(), c0.n(), c0.d()], 1e-9);
    let column = |y: f64| {
        let q = k2.eval(y) / k1.eval(y);
        let a = p2.n().eval(y) - p1.n().eval(y) * q;
        let b = p2.d().eval(y) - p1.d().eval(y) * q;
        (a.norm_sqr() + b.norm_sqr()).sqrt()
    };
    let raw = scan_function(column, &pts).max;
    Ok(GapBound {
        value: raw.min(1.0),
        raw,
        controller: c0.label.clone(),
    })
}

/// `[d_{A+}, min_C bound]`, bracketing the gap metric.
#[derive(Debug, Clone, PartialEq)]
pub struct GapInterval {
    pub lo: f64,
    pub hi: f64,
    pub lower: MetricResult,
    pub bounds: Vec<(String, Result<GapBound>)>,
    pub best_controller: Option<String>,
}

impl GapInterval {
    pub fn consistent(&self, tol: f64) -> bool {
        self.lo <= self.hi + tol
    }
}

pub fn gap_bounds(p1: &Plant, p2: &Plant, controllers: &[Plant], tol: f64) -> GapInterval {
    let lower = d_aplus(p1, p2, tol);
    let bounds: Vec<(String, Result<GapBound>)> = controllers
        .iter()
        .map(|c| (c.label.clone(), gap_upper_bound(p1, p2, c, tol)))
        .collect();
    let best = bounds
        .iter()
        .filter_map(|(_, b)| b.as_ref().ok())
        .min_by(|a, b| a.value.total_cmp(&b.value));
    let hi = best.map_or(1.0, |b| b.value);
    GapInterval {
        lo: lower.value,
        hi,
        best_controller: best.map(|b| b.controller.clone()),
        lower,
        bounds,
    }
}
