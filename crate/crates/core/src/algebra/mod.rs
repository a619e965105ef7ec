//! Finitely parameterized elements of the convolution algebras `A` (two-sided,
//! boundary values on the imaginary axis) and `A+` (causal).
//!
//! An element is a finite almost-periodic sum `Σ c_k e^{-s t_k}` plus a finite
//! family of exponential-polynomial atoms whose time-domain pieces are
//! `c (t-d)^p e^{-a (t-d)}` on `[d, ∞)` (causal) or `c (d-t)^p e^{-a (d-t)}`
//! on `(-∞, d]` (anticausal). This family is closed under sums, products
//! (partial fractions) and conjugation on the axis.

mod index;
mod norm;
mod partial;
pub mod phase;
mod scan;

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

pub use num_complex::Complex64;

pub use index::{index_w, is_invertible, IndexPair, Invertibility, ApCertificate};
pub use norm::{norm_a, NormEstimate};
pub use scan::{
    ap_extremes, axis_extremes, sup_norm_axis, ApExtremes, AxisExtremes, FrequencyGrid, SupEstimate,
};
pub(crate) use scan::{limit_scan_points, scan_function};

use crate::{Error, Result};

/// Relative size below which a merged coefficient is treated as cancelled.
const CANCEL_REL: f64 = 1e-13;
/// Keys (delays, rates) closer than this, relative to their size, are merged.
const KEY_TOL: f64 = 1e-12;

pub(crate) fn same_key(a: f64, b: f64) -> bool {
    (a - b).abs() <= KEY_TOL * (1.0 + a.abs().max(b.abs()))
}

fn same_rate(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= KEY_TOL * (1.0 + a.norm().max(b.norm()))
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

fn clean_zero(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

/// One almost-periodic term `coeff · e^{-s·delay}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApTerm {
    pub coeff: Complex64,
    pub delay: f64,
}

impl ApTerm {
    pub fn new(coeff: impl Into<Complex64>, delay: f64) -> Self {
        Self {
            coeff: coeff.into(),
            delay,
        }
    }

    #[inline]
    pub fn eval(&self, y: f64) -> Complex64 {
        self.coeff * Complex64::from_polar(1.0, -y * self.delay)
    }
}

/// Time-domain support of an atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Causal,
    Anticausal,
}

impl Side {
    pub fn flip(self) -> Self {
        match self {
            Side::Causal => Side::Anticausal,
            Side::Anticausal => Side::Causal,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Causal => "causal",
            Side::Anticausal => "anticausal",
        })
    }
}

/// Exponential-polynomial atom of the integrable part.
///
/// On the axis a causal atom is `coeff·p!·e^{-iy·delay} / (iy + rate)^{p+1}` and
/// an anticausal one is `coeff·p!·e^{-iy·delay} / (-iy + rate)^{p+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierAtom {
    pub coeff: Complex64,
    pub delay: f64,
    pub rate: Complex64,
    pub power: u32,
    pub side: Side,
}

impl FourierAtom {
    pub fn new(
        coeff: impl Into<Complex64>,
        delay: f64,
        rate: impl Into<Complex64>,
        power: u32,
        side: Side,
    ) -> Result<Self> {
        let rate = rate.into();
        if !(rate.re > 0.0) || !rate.im.is_finite() || !delay.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "atom rate must have positive real part (got {rate}) and finite delay"
            )));
        }
        Ok(Self {
            coeff: coeff.into(),
            delay,
            rate,
            power,
            side,
        })
    }

    /// `coeff / (s + rate)` with no delay.
    pub fn simple_pole(coeff: impl Into<Complex64>, rate: impl Into<Complex64>) -> Result<Self> {
        Self::new(coeff, 0.0, rate, 0, Side::Causal)
    }

    #[inline]
    pub fn eval(&self, y: f64) -> Complex64 {
        let iy = Complex64::new(0.0, y);
        let base = match self.side {
            Side::Causal => iy + self.rate,
            Side::Anticausal => self.rate - iy,
        };
        self.coeff * factorial(self.power) * Complex64::from_polar(1.0, -y * self.delay)
            / base.powi(self.power as i32 + 1)
    }

    /// Laplace-transform value of a causal atom at `s`.
    #[inline]
    fn eval_laplace(&self, s: Complex64) -> Complex64 {
        debug_assert_eq!(self.side, Side::Causal);
        self.coeff * factorial(self.power) * (-s * self.delay).exp()
            / (s + self.rate).powi(self.power as i32 + 1)
    }

    /// Time-domain value of the atom at `t`.
    pub fn time_value(&self, t: f64) -> Complex64 {
        let u = match self.side {
            Side::Causal => t - self.delay,
            Side::Anticausal => self.delay - t,
        };
        if u < 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        self.coeff * u.powi(self.power as i32) * (-self.rate * u).exp()
    }

    pub fn conjugate(&self) -> Self {
        Self {
            coeff: self.coeff.conj(),
            delay: clean_zero(-self.delay),
            rate: self.rate.conj(),
            power: self.power,
            side: self.side.flip(),
        }
    }

    fn shifted(&self, coeff: Complex64, delay: f64) -> Self {
        Self {
            coeff: self.coeff * coeff,
            delay: self.delay + delay,
            ..*self
        }
    }

    fn same_key(&self, other: &Self) -> bool {
        self.side == other.side
            && self.power == other.power
            && same_key(self.delay, other.delay)
            && same_rate(self.rate, other.rate)
    }

    pub(crate) fn key_cmp(&self, other: &Self) -> Ordering {
        self.side
            .cmp(&other.side)
            .then(self.power.cmp(&other.power))
            .then(self.delay.total_cmp(&other.delay))
            .then(self.rate.re.total_cmp(&other.rate.re))
            .then(self.rate.im.total_cmp(&other.rate.im))
            .then(self.coeff.re.total_cmp(&other.coeff.re))
            .then(self.coeff.im.total_cmp(&other.coeff.im))
    }
}

/// Element `F = f̂_a + F_AP` in canonical form.
///
/// Canonical form: AP delays pairwise distinct and sorted, atoms with equal
/// `(side, power, delay, rate)` merged and sorted, cancelled terms removed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AElement {
    ap: Vec<ApTerm>,
    atoms: Vec<FourierAtom>,
}

impl AElement {
    pub fn new(ap: Vec<ApTerm>, atoms: Vec<FourierAtom>) -> Self {
        Self {
            ap: canonical_ap(ap),
            atoms: canonical_atoms(atoms),
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn constant(c: impl Into<Complex64>) -> Self {
        Self::new(vec![ApTerm::new(c, 0.0)], Vec::new())
    }

    /// `c · e^{-s·delay}`.
    pub fn delayed(c: impl Into<Complex64>, delay: f64) -> Self {
        Self::new(vec![ApTerm::new(c, delay)], Vec::new())
    }

    pub fn from_atom(atom: FourierAtom) -> Self {
        Self::new(Vec::new(), vec![atom])
    }

    pub fn ap(&self) -> &[ApTerm] {
        &self.ap
    }

    pub fn atoms(&self) -> &[FourierAtom] {
        &self.atoms
    }

    pub fn is_zero(&self) -> bool {
        self.ap.is_empty() && self.atoms.is_empty()
    }

    /// Almost-periodic part `F_AP` as an element.
    pub fn ap_part(&self) -> Self {
        Self {
            ap: self.ap.clone(),
            atoms: Vec::new(),
        }
    }

    /// Integrable part `f̂_a` as an element.
    pub fn atom_part(&self) -> Self {
        Self {
            ap: Vec::new(),
            atoms: self.atoms.clone(),
        }
    }

    /// Bohr-Fourier spectrum of the AP part (the delays).
    pub fn spectrum(&self) -> Vec<f64> {
        self.ap.iter().map(|t| t.delay).collect()
    }

    /// If the element is a constant (single AP term at delay 0, no atoms).
    pub fn as_constant(&self) -> Option<Complex64> {
        match (self.ap.as_slice(), self.atoms.is_empty()) {
            ([], true) => Some(Complex64::new(0.0, 0.0)),
            ([t], true) if t.delay == 0.0 => Some(t.coeff),
            _ => None,
        }
    }

    /// Membership in `A+`: causal atoms and nonnegative delays only.
    pub fn is_plus(&self) -> bool {
        self.ap.iter().all(|t| t.delay >= 0.0)
            && self
                .atoms
                .iter()
                .all(|a| a.side == Side::Causal && a.delay >= 0.0)
    }

    /// The pointwise conjugate of an `A+` element.
    pub fn is_conjugate_extension(&self) -> bool {
        self.ap.iter().all(|t| t.delay <= 0.0)
            && self
                .atoms
                .iter()
                .all(|a| a.side == Side::Anticausal && a.delay <= 0.0)
    }

    /// Largest absolute delay over AP terms and atoms.
    pub fn max_abs_delay(&self) -> f64 {
        self.ap
            .iter()
            .map(|t| t.delay.abs())
            .chain(self.atoms.iter().map(|a| a.delay.abs()))
            .fold(0.0, f64::max)
    }

    /// `F(iy)`.
    pub fn eval(&self, y: f64) -> Complex64 {
        self.eval_ap(y) + self.eval_atoms(y)
    }

    pub fn eval_ap(&self, y: f64) -> Complex64 {
        self.ap.iter().map(|t| t.eval(y)).sum()
    }

    pub fn eval_atoms(&self, y: f64) -> Complex64 {
        self.atoms.iter().map(|a| a.eval(y)).sum()
    }

    /// Value at `s` with `Re s >= 0`.
    ///
    /// `A+` elements use their holomorphic extension; conjugates of `A+`
    /// elements use `conj(G(s))`, the continuous bounded extension.
    pub fn eval_rhp(&self, s: Complex64) -> Result<Complex64> {
        if !(s.re >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "evaluation point {s} is outside the closed right half-plane"
            )));
        }
        if self.is_plus() {
            Ok(self.eval_plus_unchecked(s))
        } else if self.is_conjugate_extension() {
            Ok(self.conjugate().eval_plus_unchecked(s).conj())
        } else {
            Err(Error::NoExtension)
        }
    }

    pub(crate) fn eval_plus_unchecked(&self, s: Complex64) -> Complex64 {
        let ap: Complex64 = self.ap.iter().map(|t| t.coeff * (-s * t.delay).exp()).sum();
        let atoms: Complex64 = self.atoms.iter().map(|a| a.eval_laplace(s)).sum();
        ap + atoms
    }

    /// Pointwise conjugate on the axis.
    pub fn conjugate(&self) -> Self {
        Self::new(
            self.ap
                .iter()
                .map(|t| ApTerm::new(t.coeff.conj(), clean_zero(-t.delay)))
                .collect(),
            self.atoms.iter().map(FourierAtom::conjugate).collect(),
        )
    }

    pub fn scale(&self, c: impl Into<Complex64>) -> Self {
        let c = c.into();
        Self::new(
            self.ap
                .iter()
                .map(|t| ApTerm::new(t.coeff * c, t.delay))
                .collect(),
            self.atoms.iter().map(|a| a.shifted(c, 0.0)).collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(
            self.ap.iter().chain(&other.ap).copied().collect(),
            self.atoms.iter().chain(&other.atoms).copied().collect(),
        )
    }

    /// Product; atom-atom products are expanded by partial fractions.
    pub fn multiply(&self, other: &Self) -> Self {
        let mut ap = Vec::with_capacity(self.ap.len() * other.ap.len());
        for a in &self.ap {
            for b in &other.ap {
                ap.push(ApTerm::new(a.coeff * b.coeff, a.delay + b.delay));
            }
        }
        let mut atoms = Vec::new();
        for t in &self.ap {
            atoms.extend(other.atoms.iter().map(|a| a.shifted(t.coeff, t.delay)));
        }
        for t in &other.ap {
            atoms.extend(self.atoms.iter().map(|a| a.shifted(t.coeff, t.delay)));
        }
        for x in &self.atoms {
            for y in &other.atoms {
                atoms.extend(partial::atom_product(x, y));
            }
        }
        Self::new(ap, atoms)
    }
}

fn canonical_ap(terms: Vec<ApTerm>) -> Vec<ApTerm> {
    // (representative delay, sum, largest summand)
    let mut groups: Vec<(f64, Complex64, f64)> = Vec::new();
    for t in terms {
        match groups.iter_mut().find(|g| same_key(g.0, t.delay)) {
            Some(g) => {
                g.1 += t.coeff;
                g.2 = g.2.max(t.coeff.norm());
            }
            None => groups.push((clean_zero(t.delay), t.coeff, t.coeff.norm())),
        }
    }
    let mut out: Vec<ApTerm> = groups
        .into_iter()
        .filter(|&(_, sum, big)| sum.norm() > CANCEL_REL * big)
        .map(|(delay, coeff, _)| ApTerm { coeff, delay })
        .collect();
    out.sort_by(|a, b| a.delay.total_cmp(&b.delay));
    out
}

fn canonical_atoms(atoms: Vec<FourierAtom>) -> Vec<FourierAtom> {
    let mut groups: Vec<(FourierAtom, f64)> = Vec::new();
    for a in atoms {
        match groups.iter_mut().find(|g| g.0.same_key(&a)) {
            Some(g) => {
                g.0.coeff += a.coeff;
                g.1 = g.1.max(a.coeff.norm());
            }
            None => {
                let mut a = a;
                a.delay = clean_zero(a.delay);
                groups.push((a, a.coeff.norm()));
            }
        }
    }
    let mut out: Vec<FourierAtom> = groups
        .into_iter()
        .filter(|(a, big)| a.coeff.norm() > CANCEL_REL * big)
        .map(|(a, _)| a)
        .collect();
    out.sort_by(FourierAtom::key_cmp);
    out
}

impl From<FourierAtom> for AElement {
    fn from(a: FourierAtom) -> Self {
        Self::from_atom(a)
    }
}

impl Add for &AElement {
    type Output = AElement;
    fn add(self, rhs: &AElement) -> AElement {
        AElement::add(self, rhs)
    }
}

impl Add for AElement {
    type Output = AElement;
    fn add(self, rhs: AElement) -> AElement {
        AElement::add(&self, &rhs)
    }
}

impl Sub for &AElement {
    type Output = AElement;
    fn sub(self, rhs: &AElement) -> AElement {
        AElement::add(self, &-rhs)
    }
}

impl Sub for AElement {
    type Output = AElement;
    fn sub(self, rhs: AElement) -> AElement {
        &self - &rhs
    }
}

impl Neg for &AElement {
    type Output = AElement;
    fn neg(self) -> AElement {
        self.scale(-1.0)
    }
}

impl Neg for AElement {
    type Output = AElement;
    fn neg(self) -> AElement {
        self.scale(-1.0)
    }
}

impl Mul for &AElement {
    type Output = AElement;
    fn mul(self, rhs: &AElement) -> AElement {
        self.multiply(rhs)
    }
}

impl Mul for AElement {
    type Output = AElement;
    fn mul(self, rhs: AElement) -> AElement {
        self.multiply(&rhs)
    }
}

impl fmt::Display for AElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        for t in &self.ap {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            if t.delay == 0.0 {
                write!(f, "({})", t.coeff)?;
            } else {
                write!(f, "({})e^(-{}s)", t.coeff, t.delay)?;
            }
        }
        for a in &self.atoms {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            write!(
                f,
                "atom[{}; delay {}, rate {}, power {}, {}]",
                a.coeff, a.delay, a.rate, a.power, a.side
            )?;
        }
        Ok(())
    }
}
