//! Closed loops `H(P, C)`, stability margins `μ_{P,C}` and the inequality
//! chain relating `d_{A+}`, `d_{H∞}` and the gap metric.

use crate::algebra::{
    index_w, is_invertible, limit_scan_points, scan_function, AElement, Complex64, IndexPair, Invertibility,
};
use crate::metrics::{d_aplus, d_hinf, gap_bounds, GapInterval, MetricResult};
use crate::plants::Plant;
use crate::{Error, Result};

/// Slack allowed in the inequality checks.
pub const CHAIN_TOL: f64 = 1e-4;

/// Largest singular value of a 2×2 matrix, from the Frobenius norm and determinant.
pub fn sigma_max(m: [[Complex64; 2]; 2]) -> f64 {
    let fro = m.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>();
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).norm();
    let disc = (fro * fro - 4.0 * det * det).max(0.0).sqrt();
    (0.5 * (fro + disc)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitStatus {
    Certified,
    Refuted,
    Inconclusive,
}

/// Evidence that an `A+` element is a unit of `A+`: invertible on the axis
/// with index `(0, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitCertificate {
    pub status: UnitStatus,
    /// Estimated `inf |F(iy)|`.
    pub margin: f64,
    /// Width of the uncertainty on `margin`.
    pub band: f64,
    pub index: Option<IndexPair>,
    /// AP bounds rest on a finite window (incommensurate delays).
    pub approximate: bool,
    pub detail: String,
}

impl UnitCertificate {
    pub fn is_certified(&self) -> bool {
        self.status == UnitStatus::Certified
    }

    fn refuted(margin: f64, detail: String) -> Self {
        Self {
            status: UnitStatus::Refuted,
            margin,
            band: 0.0,
            index: None,
            approximate: false,
            detail,
        }
    }
}

pub fn certify_unit(f: &AElement, tol: f64) -> UnitCertificate {
    if !f.is_plus() {
        return UnitCertificate::refuted(0.0, "element is not causal".into());
    }
    let (margin, band, approximate) = match is_invertible(f, tol) {
        Invertibility::Invertible {
            margin,
            band,
            certificate,
        } => (margin, band, certificate == crate::algebra::ApCertificate::Approximate),
        Invertibility::NotInvertible { witness, modulus } => {
            return UnitCertificate::refuted(modulus, format!("|F(iy)| = {modulus:.3e} at y = {witness}"));
        }
        Invertibility::Inconclusive { margin, band } => {
            return UnitCertificate {
                status: UnitStatus::Inconclusive,
                margin,
                band,
                index: None,
                approximate: false,
                detail: "margin within the error band".into(),
            };
        }
    };
    match index_w(f, tol) {
        Ok(w) if w.is_zero(1e-9) => UnitCertificate {
            status: UnitStatus::Certified,
            margin,
            band,
            index: Some(w),
            approximate,
            detail: String::new(),
        },
        Ok(w) => UnitCertificate {
            status: UnitStatus::Refuted,
            margin,
            band,
            index: Some(w),
            approximate,
            detail: format!("index ({}, {})", w.w_av, w.w),
        },
        Err(e) => UnitCertificate {
            status: UnitStatus::Inconclusive,
            margin,
            band,
            index: None,
            approximate,
            detail: e.to_string(),
        },
    }
}

/// `H(P, C) = [N; D](YD − XN)^{-1}[−X, Y]` for `P = N/D`, `C = X/Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoop {
    pub plant: Plant,
    pub controller: Plant,
    /// `YD − XN`.
    pub denominator: AElement,
    pub certificate: UnitCertificate,
}

impl ClosedLoop {
    pub fn stabilizing(&self) -> bool {
        self.certificate.is_certified()
    }

    /// `H(iy)`.
    pub fn entries(&self, y: f64) -> [[Complex64; 2]; 2] {
        let (n, d) = (self.plant.n().eval(y), self.plant.d().eval(y));
        let (x, yy) = (self.controller.n().eval(y), self.controller.d().eval(y));
        let inv = 1.0 / self.denominator.eval(y);
        [[-n * x * inv, n * yy * inv], [-d * x * inv, d * yy * inv]]
    }
}

pub fn closed_loop(p: &Plant, c: &Plant, tol: f64) -> ClosedLoop {
    let denominator = &(c.d() * p.d()) - &(c.n() * p.n());
    let certificate = certify_unit(&denominator, tol);
    ClosedLoop {
        plant: p.clone(),
        controller: c.clone(),
        denominator,
        certificate,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginReport {
    /// `μ_{P,C}`; 0 when `C` does not stabilize `P`.
    pub mu: f64,
    pub controller_label: String,
    pub certificate: UnitCertificate,
    /// Sampled `sup σ̄(H(iy))` (infinite when not stabilizing).
    pub sigma_sup: f64,
}

impl MarginReport {
    pub fn stabilizing(&self) -> bool {
        self.certificate.is_certified()
    }
}

/// `μ_{P,C} = ‖H(P, C)‖_∞^{-1}`, or 0 if `C` does not stabilize `P`.
pub fn mu(p: &Plant, c: &Plant, tol: f64) -> MarginReport {
    let cl = closed_loop(p, c, tol);
    if !cl.stabilizing() {
        return MarginReport {
            mu: 0.0,
            controller_label: c.label.clone(),
            certificate: cl.certificate,
            sigma_sup: f64::INFINITY,
        };
    }
    let pts = limit_scan_points(&[p.n(), p.d(), c.n(), c.d()], 1e-9);
    let sigma_sup = scan_function(|y| sigma_max(cl.entries(y)), &pts).max;
    // with both factorizations normalized σ̄(H) = 1/|YD − XN|, whose infimum the certificate carries
    let mu = cl.certificate.margin.min(1.0 / sigma_sup).clamp(0.0, 1.0);
    MarginReport {
        mu,
        controller_label: c.label.clone(),
        certificate: cl.certificate,
        sigma_sup,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessReport {
    pub mu1: f64,
    pub mu2: f64,
    pub d_hinf: f64,
    /// `μ(P₂,C) − μ(P₁,C) + d_{H∞}(P₁,P₂)`.
    pub slack: f64,
    pub passed: bool,
}

/// Checks `μ_{P₂,C} ≥ μ_{P₁,C} − d_{H∞}(P₁, P₂)`.
pub fn robustness_check(p1: &Plant, p2: &Plant, c: &Plant, tol: f64) -> Result<RobustnessReport> {
    let mu1 = mu(p1, c, tol).mu;
    let mu2 = mu(p2, c, tol).mu;
    let d = d_hinf(p1, p2, tol)?.value;
    let slack = mu2 - mu1 + d;
    Ok(RobustnessReport {
        mu1,
        mu2,
        d_hinf: d,
        slack,
        passed: slack >= -1e-6,
    })
}

/// Both halves of the chain for one stabilizing controller.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerSlack {
    pub controller_label: String,
    pub mu: f64,
    /// `d_{H∞} − μ·d_{A+}`.
    pub lower: f64,
    /// `d_{A+}/μ − d_{H∞}`.
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    /// Largest margin over the supplied controllers, a lower bound for `μ_opt(P₁)`.
    pub mu_lb: f64,
    pub best_controller: Option<String>,
    pub margins: Vec<MarginReport>,
    pub d_aplus: MetricResult,
    pub d_hinf: MetricResult,
    pub gap: GapInterval,
    pub per_controller: Vec<ControllerSlack>,
    /// `d_{H∞} − μ_lb·d_{A+}`.
    pub lower_slack: f64,
    /// `d_{A+}/μ_lb − d_{H∞}`; absent when no controller stabilizes.
    pub upper_slack: Option<f64>,
    /// `hi − d_{A+}` of the gap interval.
    pub gap_slack: f64,
    /// No controller stabilizes `P₁`, so the chain says nothing.
    pub vacuous: bool,
    pub passed: bool,
}

/// `μ_lb·d_{A+} ≤ d_{H∞} ≤ d_{A+}/μ_lb` and `d_{A+} ≤ gap upper bound`.
pub fn equivalence_report(p1: &Plant, p2: &Plant, controllers: &[Plant], tol: f64) -> Result<EquivalenceReport> {
    let margins: Vec<MarginReport> = controllers.iter().map(|c| mu(p1, c, tol)).collect();
    let best = margins
        .iter()
        .filter(|m| m.stabilizing())
        .max_by(|a, b| a.mu.total_cmp(&b.mu));
    let mu_lb = best.map_or(0.0, |m| m.mu);
    let best_controller = best.map(|m| m.controller_label.clone());
    let da = d_aplus(p1, p2, tol);
    let dh = d_hinf(p1, p2, tol)?;
    let gap = gap_bounds(p1, p2, controllers, tol);
    let per_controller: Vec<ControllerSlack> = margins
        .iter()
        .filter(|m| m.stabilizing() && m.mu > 0.0)
        .map(|m| ControllerSlack {
            controller_label: m.controller_label.clone(),
            mu: m.mu,
            lower: dh.value - m.mu * da.value,
            upper: da.value / m.mu - dh.value,
        })
        .collect();
    let vacuous = mu_lb <= 0.0;
    let lower_slack = dh.value - mu_lb * da.value;
    let upper_slack = (!vacuous).then(|| da.value / mu_lb - dh.value);
    let gap_slack = gap.hi - gap.lo;
    let passed = lower_slack >= -CHAIN_TOL
        && upper_slack.is_none_or(|s| s >= -CHAIN_TOL)
        && gap_slack >= -CHAIN_TOL
        && per_controller.iter().all(|c| c.lower >= -CHAIN_TOL && c.upper >= -CHAIN_TOL);
    Ok(EquivalenceReport {
        mu_lb,
        best_controller,
        margins,
        d_aplus: da,
        d_hinf: dh,
        gap,
        per_controller,
        lower_slack,
        upper_slack,
        gap_slack,
        vacuous,
        passed,
    })
}

pub(crate) fn require_stabilizing(p: &Plant, c: &Plant, tol: f64) -> Result<ClosedLoop> {
    let cl = closed_loop(p, c, tol);
    if cl.stabilizing() {
        Ok(cl)
    } else {
        Err(Error::Precondition(format!(
            "controller {} does not stabilize {} ({})",
            c.label, p.label, cl.certificate.detail
        )))
    }
}
