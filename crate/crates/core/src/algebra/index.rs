//! Invertibility in `A` and the index pair `W(F) = (w_av(F_AP), w(F/F_AP))`.

use std::f64::consts::PI;

use super::phase::{self, track_phase};
use super::scan::{
    ap_extremes, atom_tail_bound, axis_extremes_rel, commensurate_base, sample, tail_radius, ApExtremes,
    FrequencyGrid, MAX_GRID,
};
use super::{AElement, Complex64};
use crate::{Error, Result};

/// How the lower bound on `|F_AP|` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApCertificate {
    /// Commensurate delays: one full period scanned.
    Exact,
    /// Incommensurate delays: long-window scan, not a proof.
    Approximate,
}

/// Three-way invertibility decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Invertibility {
    Invertible {
        margin: f64,
        band: f64,
        certificate: ApCertificate,
    },
    NotInvertible {
        witness: f64,
        modulus: f64,
    },
    Inconclusive {
        margin: f64,
        band: f64,
    },
}

impl Invertibility {
    pub fn is_invertible(&self) -> bool {
        matches!(self, Invertibility::Invertible { .. })
    }

    /// Estimated `inf |F(iy)|` (0 when not invertible).
    pub fn margin(&self) -> f64 {
        match *self {
            Invertibility::Invertible { margin, .. } | Invertibility::Inconclusive { margin, .. } => margin,
            Invertibility::NotInvertible { modulus, .. } => modulus,
        }
    }

    pub(crate) fn into_error(self) -> Error {
        match self {
            Invertibility::Invertible { .. } => unreachable!("invertible decision is not an error"),
            Invertibility::NotInvertible { witness, modulus } => Error::NotInvertible(format!(
                "|F(iy)| = {modulus:.3e} at y = {witness}"
            )),
            Invertibility::Inconclusive { margin, band } => Error::Inconclusive { margin, band },
        }
    }
}

fn certificate(ap: &ApExtremes) -> ApCertificate {
    if ap.is_exact() {
        ApCertificate::Exact
    } else {
        ApCertificate::Approximate
    }
}

/// Decides whether `F` is invertible in `A`: `F(iy) ≠ 0` everywhere and
/// `inf |F_AP| > 0`, each certified above `tol` plus the sampling error.
pub fn is_invertible(f: &AElement, tol: f64) -> Invertibility {
    if f.is_zero() {
        return Invertibility::NotInvertible {
            witness: 0.0,
            modulus: 0.0,
        };
    }
    if f.ap().is_empty() {
        // atoms alone vanish at infinity
        let y = tail_radius(f.atoms(), tol);
        return Invertibility::NotInvertible {
            witness: y,
            modulus: f.eval(y).norm(),
        };
    }
    let ap = ap_extremes(f.ap());
    if ap.inf <= tol {
        return Invertibility::NotInvertible {
            witness: ap.argmin,
            modulus: ap.inf,
        };
    }
    if ap.inf - ap.error <= tol {
        return Invertibility::Inconclusive {
            margin: ap.inf,
            band: ap.error,
        };
    }
    if f.atoms().is_empty() {
        return Invertibility::Invertible {
            margin: ap.inf,
            band: ap.error,
            certificate: certificate(&ap),
        };
    }

    let radius = tail_radius(f.atoms(), 0.5 * ap.inf);
    let grid = FrequencyGrid::for_element(f, radius);
    let tail = atom_tail_bound(f.atoms(), grid.reach());
    let ext = axis_extremes_rel(f, &grid, 0.1 * tol, 0.5);
    if ext.min <= tol {
        return Invertibility::NotInvertible {
            witness: ext.argmin,
            modulus: ext.min,
        };
    }
    let margin = ext.min.min(ap.inf);
    let lower = ext.min_lower_bound.min(ap.inf - ap.error - tail);
    if lower > tol {
        Invertibility::Invertible {
            margin,
            band: margin - lower,
            certificate: certificate(&ap),
        }
    } else {
        Invertibility::Inconclusive {
            margin,
            band: margin - lower,
        }
    }
}

/// Value of the index `W(F)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexPair {
    /// Average winding number of the AP part (radians per unit `y`).
    pub w_av: f64,
    /// Integer winding of `F / F_AP` over the whole axis.
    pub w: i64,
    pub w_av_error: f64,
    /// Distance of the measured winding of `F / F_AP` from `w`, in turns.
    pub w_distance: f64,
}

impl IndexPair {
    pub fn is_zero(&self, tol: f64) -> bool {
        self.w == 0 && self.w_av.abs() <= tol.max(self.w_av_error)
    }
}

/// Fraction of a turn allowed between the measured winding and an integer.
const WINDING_SLACK: f64 = 0.05;
const MAX_REFINEMENTS: u32 = 3;

/// Index pair `W(F)` of an invertible element.
pub fn index_w(f: &AElement, tol: f64) -> Result<IndexPair> {
    let inv = is_invertible(f, tol);
    if !inv.is_invertible() {
        return Err(inv.into_error());
    }
    let ap = ap_extremes(f.ap());
    let (w_av, w_av_error) = average_winding(f, &ap, tol)?;
    let (w, w_distance) = if f.atoms().is_empty() {
        (0, 0.0)
    } else {
        integer_winding(f, &ap)?
    };
    Ok(IndexPair {
        w_av,
        w,
        w_av_error,
        w_distance,
    })
}

fn average_winding(f: &AElement, ap: &ApExtremes, tol: f64) -> Result<(f64, f64)> {
    let terms = f.ap();
    if let [t] = terms {
        return Ok((-t.delay, 0.0));
    }
    let fap = f.ap_part();
    let eval = |y: f64| fap.eval_ap(y);
    let omega = f
        .ap()
        .iter()
        .map(|t| t.delay.abs())
        .fold(0.0, f64::max);
    if let Some(g) = commensurate_base(&f.spectrum()) {
        // F_AP is 2π/g periodic; phase change over one period is 2πm.
        let period = 2.0 * PI / g;
        let n = ((50.0 * omega / g).ceil() as usize).max(256);
        let params: Vec<f64> = (0..=n).map(|i| period * i as f64 / n as f64).collect();
        let vals = sample(&params, eval);
        let trace = track_phase(&eval, &params, &vals, 20);
        let turns = trace.total / (2.0 * PI);
        let m = turns.round();
        if (turns - m).abs() > WINDING_SLACK || !trace.resolved() {
            return Err(Error::IndexResolution {
                distance: (turns - m).abs(),
            });
        }
        return Ok((m * g, 0.0));
    }

    // Incommensurate spectrum: least-squares phase slope over growing windows.
    let step = 2.0 * PI / (50.0 * omega);
    let mut half = 0.5 * ap.window.max(100.0 * step);
    let mut previous: Option<f64> = None;
    loop {
        let n = (2.0 * half / step).ceil() as usize;
        let params: Vec<f64> = (0..=n).map(|i| -half + 2.0 * half * i as f64 / n as f64).collect();
        let vals = sample(&params, eval);
        let phases = phase::unwrap(&vals);
        let slope = least_squares_slope(&params, &phases);
        if let Some(prev) = previous {
            let diff = (slope - prev).abs();
            if diff <= tol || 4 * n > 4 * MAX_GRID {
                return Ok((slope, diff));
            }
        }
        previous = Some(slope);
        half *= 2.0;
    }
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Winding of `1 + F_AP⁻¹ f̂_a = F / F_AP` from `y = -∞` to `+∞`, with the
/// endpoint phases pinned to the limit value 0 (the atom part vanishes).
fn integer_winding(f: &AElement, ap: &ApExtremes) -> Result<(i64, f64)> {
    let radius = tail_radius(f.atoms(), 0.5 * ap.inf);
    let ratio = |y: f64| f.eval(y) / f.eval_ap(y);
    let base = FrequencyGrid::for_element(f, radius);
    if atom_tail_bound(f.atoms(), base.reach()) >= ap.inf {
        return Err(Error::Numerical(
            "scan radius too small to pin the winding endpoints".into(),
        ));
    }
    let mut distance = f64::INFINITY;
    for level in 0..=MAX_REFINEMENTS {
        let params = refine(base.points(), 4usize.pow(level));
        let vals = sample(&params, ratio);
        let trace = track_phase(&ratio, &params, &vals, 16);
        let left = vals[0].arg();
        let right = vals[vals.len() - 1].arg();
        let total = left + trace.total - right;
        let turns = total / (2.0 * PI);
        let w = turns.round();
        distance = (turns - w).abs();
        if distance <= WINDING_SLACK && trace.resolved() {
            return Ok((w as i64, distance));
        }
    }
    Err(Error::IndexResolution { distance })
}

fn refine(points: &[f64], factor: usize) -> Vec<f64> {
    if factor <= 1 {
        return points.to_vec();
    }
    let mut out = Vec::with_capacity(points.len() * factor);
    for w in points.windows(2) {
        for k in 0..factor {
            out.push(w[0] + (w[1] - w[0]) * k as f64 / factor as f64);
        }
    }
    out.extend(points.last());
    out
}

#[allow(dead_code)]
pub(crate) fn phase_at(f: &AElement, y: f64) -> f64 {
    Complex64::arg(f.eval(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{ApTerm, FourierAtom};

    fn rational_factor() -> AElement {
        // 1 - 1.5/(s+1) = (s - 0.5)/(s + 1)
        AElement::one() + AElement::from(FourierAtom::simple_pole(-1.5, 1.0).unwrap())
    }

    #[test]
    fn constant_is_invertible_with_its_modulus() {
        let inv = is_invertible(&AElement::constant(0.28), 1e-6);
        match inv {
            Invertibility::Invertible { margin, certificate, .. } => {
                assert!((margin - 0.28).abs() < 1e-15);
                assert_eq!(certificate, ApCertificate::Exact);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn delay_minus_one_vanishes_at_origin() {
        let f = AElement::new(vec![ApTerm::new(1.0, 1.0), ApTerm::new(-1.0, 0.0)], vec![]);
        match is_invertible(&f, 1e-6) {
            Invertibility::NotInvertible { witness, .. } => {
                // zeros at 2πk; the scan starts at the origin
                assert!((witness / (2.0 * PI)).fract().abs() < 1e-6, "{witness}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rational_with_rhp_zero() {
        let f = rational_factor();
        let inv = is_invertible(&f, 1e-6);
        assert!(inv.is_invertible());
        assert!((inv.margin() - 0.5).abs() < 1e-9, "{inv:?}");
        let w = index_w(&f, 1e-6).unwrap();
        assert_eq!(w.w, -1);
        assert_eq!(w.w_av, 0.0);
    }

    #[test]
    fn constants_and_pure_delays() {
        let w = index_w(&AElement::constant(Complex64::new(-2.0, 1.0)), 1e-6).unwrap();
        assert_eq!((w.w_av, w.w), (0.0, 0));
        let w = index_w(&AElement::delayed(1.0, 2.0), 1e-6).unwrap();
        assert_eq!((w.w_av, w.w), (-2.0, 0));
    }

    #[test]
    fn dominant_term_sets_average_winding() {
        let f = AElement::new(
            vec![ApTerm::new(0.2, 0.0), ApTerm::new(1.0, 1.5), ApTerm::new(0.3, 2.5)],
            vec![],
        );
        let w = index_w(&f, 1e-6).unwrap();
        assert!((w.w_av + 1.5).abs() < 1e-12, "{w:?}");
        let f = AElement::new(
            vec![ApTerm::new(0.2, 0.0), ApTerm::new(1.0, 1.0), ApTerm::new(0.3, 2f64.sqrt())],
            vec![],
        );
        let w = index_w(&f, 1e-5).unwrap();
        assert!((w.w_av + 1.0).abs() < 1e-4, "{w:?}");
    }

    #[test]
    fn atoms_alone_are_not_invertible() {
        let f = AElement::from(FourierAtom::simple_pole(1.0, 1.0).unwrap());
        assert!(matches!(is_invertible(&f, 1e-6), Invertibility::NotInvertible { .. }));
        assert!(index_w(&f, 1e-6).is_err());
        assert!(matches!(
            is_invertible(&AElement::zero(), 1e-6),
            Invertibility::NotInvertible { .. }
        ));
    }

    #[test]
    fn conjugation_negates_index() {
        let f = &rational_factor() * &AElement::delayed(1.0, 0.5);
        let a = index_w(&f, 1e-6).unwrap();
        let b = index_w(&f.conjugate(), 1e-6).unwrap();
        assert_eq!(a.w, -b.w);
        assert!((a.w_av + b.w_av).abs() < 1e-9);
    }
}
