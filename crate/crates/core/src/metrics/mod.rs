//! Distances between plants: `d_{A+}`, `d_{H∞}^ρ`, `d_{H∞}` and gap-metric bounds.

mod annulus;
mod gap;

use std::fmt;

use crate::algebra::{index_w, is_invertible, sup_norm_axis, AElement, IndexPair, Invertibility};
use crate::plants::Plant;
use crate::Error;

pub use annulus::{
    annulus_eval, annulus_eval_with, annulus_index, d_hinf, d_hinf_rho, AnnulusField, AnnulusIndex,
    stabilization_step, AnnulusProbe, CircleSamples, StepScale, ANNULUS_TOL,
};
pub use gap::{gap_bounds, gap_upper_bound, GapBound, GapInterval};

/// Default threshold below which a modulus counts as zero.
pub const DEFAULT_TOL: f64 = 1e-6;

/// Accuracy requested for sup norms of the mismatch.
const SUP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// The invertibility and index conditions hold; the value is a sup norm.
    Finite,
    /// The "otherwise" branch: value 1.
    Unity,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Finite => "finite",
            Branch::Unity => "unity",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flag {
    /// Invertibility margin sits inside the numerical error band.
    Inconclusive,
    NotInvertible,
    NonzeroIndex,
    IndexUnresolved,
    /// Incommensurate delays: AP bounds come from a finite window.
    ApproximateCertificate,
    /// A factorization came without Bezout witnesses.
    CoprimalityAsserted,
    AnnulusZero,
    WindingNonzero,
    WindingNotConstant,
    WindingUnresolved,
    TraceNotStabilized,
}

impl Flag {
    /// Flags that leave the branch decision uncertified.
    pub fn is_inconclusive(self) -> bool {
        matches!(
            self,
            Flag::Inconclusive | Flag::IndexUnresolved | Flag::WindingUnresolved | Flag::TraceNotStabilized
        )
    }
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flag::Inconclusive => "inconclusive",
            Flag::NotInvertible => "not_invertible",
            Flag::NonzeroIndex => "nonzero_index",
            Flag::IndexUnresolved => "index_unresolved",
            Flag::ApproximateCertificate => "approximate_certificate",
            Flag::CoprimalityAsserted => "coprimality_asserted",
            Flag::AnnulusZero => "annulus_zero",
            Flag::WindingNonzero => "winding_nonzero",
            Flag::WindingNotConstant => "winding_not_constant",
            Flag::WindingUnresolved => "winding_unresolved",
            Flag::TraceNotStabilized => "trace_not_stabilized",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    /// Invertibility margin of the pairing (axis infimum, or annulus minimum).
    pub margin: Option<f64>,
    pub index: Option<IndexPair>,
    pub annulus_winding: Option<i64>,
    pub error_bound: f64,
    pub flags: Vec<Flag>,
    /// `(ρ, d^ρ)` pairs of a limit computation.
    pub rho_trace: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricResult {
    pub value: f64,
    pub branch: Branch,
    pub diagnostics: Diagnostics,
}

impl MetricResult {
    pub(crate) fn unity(diagnostics: Diagnostics) -> Self {
        Self {
            value: 1.0,
            branch: Branch::Unity,
            diagnostics,
        }
    }

    pub(crate) fn finite(value: f64, diagnostics: Diagnostics) -> Self {
        Self {
            value: value.clamp(0.0, 1.0),
            branch: Branch::Finite,
            diagnostics,
        }
    }

    pub fn has_flag(&self, flag: Flag) -> bool {
        self.diagnostics.flags.contains(&flag)
    }

    pub fn is_inconclusive(&self) -> bool {
        self.diagnostics.flags.iter().any(|f| f.is_inconclusive())
    }
}

/// `G₁^*G₂ = N̄₁N₂ + D̄₁D₂` on the axis.
pub fn pairing_g1star_g2(p1: &Plant, p2: &Plant) -> AElement {
    &p1.n().conjugate() * p2.n() + &p1.d().conjugate() * p2.d()
}

/// `G₁^*G₂` off the axis, continued by conjugating the values of `N₁, D₁`.
pub fn pairing_rhp(p1: &Plant, p2: &Plant, s: crate::algebra::Complex64) -> crate::algebra::Complex64 {
    let (n1, d1) = (p1.n().eval_plus_unchecked(s), p1.d().eval_plus_unchecked(s));
    let (n2, d2) = (p2.n().eval_plus_unchecked(s), p2.d().eval_plus_unchecked(s));
    n1.conj() * n2 + d1.conj() * d2
}

/// `G̃₂G₁ = −D₂N₁ + N₂D₁`.
pub fn mismatch_gtilde2_g1(p1: &Plant, p2: &Plant) -> AElement {
    &(p2.n() * p1.d()) - &(p2.d() * p1.n())
}

pub(crate) fn base_flags(p1: &Plant, p2: &Plant) -> Vec<Flag> {
    if p1.pair.coprimality_asserted() || p2.pair.coprimality_asserted() {
        vec![Flag::CoprimalityAsserted]
    } else {
        Vec::new()
    }
}

/// Axis part shared by all metrics: is `G₁^*G₂` invertible with index `(0, 0)`?
/// On success returns the sup norm of the mismatch and its error bound.
pub(crate) fn axis_condition(p1: &Plant, p2: &Plant, tol: f64, diag: &mut Diagnostics) -> Option<(f64, f64)> {
    let pairing = pairing_g1star_g2(p1, p2);
    let inv = is_invertible(&pairing, tol);
    diag.margin = Some(inv.margin());
    match inv {
        Invertibility::NotInvertible { .. } => {
            diag.flags.push(Flag::NotInvertible);
            return None;
        }
        Invertibility::Inconclusive { .. } => {
            diag.flags.push(Flag::Inconclusive);
            return None;
        }
        Invertibility::Invertible { certificate, .. } => {
            if certificate == crate::algebra::ApCertificate::Approximate {
                diag.flags.push(Flag::ApproximateCertificate);
            }
        }
    }
    match index_w(&pairing, tol) {
        Ok(w) => {
            diag.index = Some(w);
            if !w.is_zero(1e-9) {
                diag.flags.push(Flag::NonzeroIndex);
                return None;
            }
        }
        Err(Error::IndexResolution { .. }) | Err(Error::Numerical(_)) => {
            diag.flags.push(Flag::IndexUnresolved);
            return None;
        }
        Err(_) => {
            diag.flags.push(Flag::Inconclusive);
            return None;
        }
    }
    let sup = sup_norm_axis(&mismatch_gtilde2_g1(p1, p2), SUP_TOL);
    Some((sup.value, sup.error))
}

/// `d_{A+}(P₁, P₂)`: `‖G̃₂G₁‖_∞` when `G₁^*G₂` is invertible in `A` with
/// index `(0, 0)`, otherwise 1.
pub fn d_aplus(p1: &Plant, p2: &Plant, tol: f64) -> MetricResult {
    let mut diag = Diagnostics {
        flags: base_flags(p1, p2),
        ..Default::default()
    };
    match axis_condition(p1, p2, tol, &mut diag) {
        Some((value, error)) => {
            diag.error_bound = error;
            MetricResult::finite(value, diag)
        }
        None => MetricResult::unity(diag),
    }
}
