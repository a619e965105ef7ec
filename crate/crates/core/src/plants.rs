//! Normalized coprime factorizations `P = N/D` and the graph symbols built from them.

use crate::algebra::{AElement, ApTerm, Complex64, FourierAtom, FrequencyGrid};
use crate::{Error, Result};

/// Pointwise tolerance of the normalization and Bezout identities.
pub const NCF_TOL: f64 = 1e-8;

/// `(N, D)` with an optional Bezout witness `X·N + Y·D = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoprimePair {
    pub n: AElement,
    pub d: AElement,
    pub bezout: Option<(AElement, AElement)>,
}

impl CoprimePair {
    /// Checks that every factor is a "plus" element; the identities are left to [`verify_ncf`].
    pub fn new(n: AElement, d: AElement, bezout: Option<(AElement, AElement)>) -> Result<Self> {
        let plus = |e: &AElement, name: &str| {
            if e.is_plus() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!(
                    "{name} must be causal (nonnegative delays, causal atoms)"
                )))
            }
        };
        plus(&n, "N")?;
        plus(&d, "D")?;
        if let Some((x, y)) = &bezout {
            plus(x, "X")?;
            plus(y, "Y")?;
        }
        Ok(Self { n, d, bezout })
    }

    /// Without Bezout witnesses coprimality is taken on trust.
    pub fn coprimality_asserted(&self) -> bool {
        self.bezout.is_none()
    }

    /// `(−N, −D)` with the Bezout pair negated to match.
    pub fn flipped(&self) -> Self {
        Self {
            n: -&self.n,
            d: -&self.d,
            bezout: self.bezout.as_ref().map(|(x, y)| (-x, -y)),
        }
    }
}

/// `N = (k/√(1+k²))·e^{−sτ}`, `D = 1/√(1+k²)`, Bezout `(0, √(1+k²))`.
pub fn ncf_gain_delay(k: f64, tau: f64) -> Result<CoprimePair> {
    if !k.is_finite() || !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "gain-delay plant needs finite k and tau >= 0 (got k={k}, tau={tau})"
        )));
    }
    let h = k.hypot(1.0);
    Ok(CoprimePair {
        n: AElement::delayed(k / h, tau),
        d: AElement::constant(1.0 / h),
        bezout: Some((AElement::zero(), AElement::constant(h))),
    })
}

/// Factorization of `b/(s+a)`: `N = b/(s+p)`, `D = (s+a)/(s+p)` with `p = √(a²+b²)`.
pub fn ncf_first_order(a: f64, b: f64) -> Result<CoprimePair> {
    if b == 0.0 || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "first-order plant needs finite a and nonzero finite b (got a={a}, b={b})"
        )));
    }
    let p = a.hypot(b);
    let n = AElement::from(FourierAtom::simple_pole(b, p)?);
    let d = AElement::new(
        vec![ApTerm::new(1.0, 0.0)],
        vec![FourierAtom::simple_pole(a - p, p)?],
    );
    // X·b/(s+p) + (s+a)/(s+p) = 1 with X = (p−a)/b
    let bezout = (AElement::constant((p - a) / b), AElement::one());
    Ok(CoprimePair {
        n,
        d,
        bezout: Some(bezout),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcfReport {
    /// `max ||N|² + |D|² − 1|` over the grid.
    pub normalization: f64,
    /// `max |X·N + Y·D − 1|`, when a Bezout pair is present.
    pub bezout: Option<f64>,
    pub passed: bool,
}

impl NcfReport {
    pub fn max_deviation(&self) -> f64 {
        self.normalization.max(self.bezout.unwrap_or(0.0))
    }
}

pub fn verify_ncf(pair: &CoprimePair, grid: &FrequencyGrid) -> NcfReport {
    let mut normalization: f64 = 0.0;
    let mut bezout = pair.bezout.as_ref().map(|_| 0.0f64);
    for &y in grid.points() {
        let n = pair.n.eval(y);
        let d = pair.d.eval(y);
        normalization = normalization.max((n.norm_sqr() + d.norm_sqr() - 1.0).abs());
        if let (Some((x, yy)), Some(dev)) = (&pair.bezout, bezout.as_mut()) {
            let v = x.eval(y) * n + yy.eval(y) * d - 1.0;
            *dev = dev.max(v.norm());
        }
    }
    // the limit y → ±∞ is the AP part alone
    let check_ap = |e: &AElement, y: f64| e.eval_ap(y);
    for &y in grid.points().iter().step_by(97) {
        let n = check_ap(&pair.n, y);
        let d = check_ap(&pair.d, y);
        normalization = normalization.max((n.norm_sqr() + d.norm_sqr() - 1.0).abs());
    }
    let passed = normalization <= NCF_TOL && bezout.is_none_or(|b| b <= NCF_TOL);
    NcfReport {
        normalization,
        bezout,
        passed,
    }
}

/// A plant (or controller) given by a validated normalized coprime factorization.
///
/// A controller `C = X/Y` uses the same type with `n = X`, `d = Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    pub pair: CoprimePair,
    pub label: String,
}

impl Plant {
    /// Validates the pair on [`FrequencyGrid::standard`].
    pub fn new(pair: CoprimePair, label: impl Into<String>) -> Result<Self> {
        let report = verify_ncf(&pair, &FrequencyGrid::standard());
        if !report.passed {
            return Err(Error::Normalization {
                deviation: report.max_deviation(),
            });
        }
        Ok(Self {
            pair,
            label: label.into(),
        })
    }

    pub fn gain_delay(k: f64, tau: f64) -> Result<Self> {
        Self::new(ncf_gain_delay(k, tau)?, format!("gain_delay(k={k},tau={tau})"))
    }

    pub fn first_order(a: f64, b: f64) -> Result<Self> {
        Self::new(ncf_first_order(a, b)?, format!("first_order(a={a},b={b})"))
    }

    /// The zero controller `X = 0, Y = 1`.
    pub fn zero_controller() -> Self {
        Self {
            pair: CoprimePair {
                n: AElement::zero(),
                d: AElement::one(),
                bezout: Some((AElement::zero(), AElement::one())),
            },
            label: "C=0".into(),
        }
    }

    /// Static gain controller `C = c`.
    pub fn gain_controller(c: f64) -> Result<Self> {
        Self::new(ncf_gain_delay(c, 0.0)?, format!("C={c}"))
    }

    pub fn n(&self) -> &AElement {
        &self.pair.n
    }

    pub fn d(&self) -> &AElement {
        &self.pair.d
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Same plant with the factorization `(−N, −D)`.
    pub fn flipped(&self) -> Self {
        Self {
            pair: self.pair.flipped(),
            label: self.label.clone(),
        }
    }

    /// `P(iy) = N(iy)/D(iy)`.
    pub fn transfer(&self, y: f64) -> Complex64 {
        self.pair.n.eval(y) / self.pair.d.eval(y)
    }
}

/// Pair of plants `N = r·e^{−sτ}` with `D = ±√(1−r²)`.
pub fn mirrored_gain_delay(r: f64, tau: f64) -> Result<(Plant, Plant)> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidArgument(format!("r must lie in (0, 1), got {r}")));
    }
    let beta = (1.0 - r * r).sqrt();
    let make = |sign: f64, label: &str| {
        let pair = CoprimePair::new(
            AElement::delayed(r, tau),
            AElement::constant(sign * beta),
            Some((AElement::zero(), AElement::constant(sign / beta))),
        )?;
        Plant::new(pair, label)
    };
    Ok((make(1.0, "P1")?, make(-1.0, "P2")?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Plant,
    Controller,
}

/// `G = [N; D]`, `G̃ = [−D, N]` for plants; `K = [Y; X]`, `K̃ = [−X, Y]` for controllers.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSymbols {
    pub g: [AElement; 2],
    pub g_tilde: [AElement; 2],
}

impl GraphSymbols {
    /// `G̃·G` (or `K̃·K`), which vanishes identically.
    pub fn annihilation(&self) -> AElement {
        &self.g_tilde[0] * &self.g[0] + &self.g_tilde[1] * &self.g[1]
    }

    /// `G^*G` on the axis.
    pub fn gram(&self, y: f64) -> f64 {
        self.g[0].eval(y).norm_sqr() + self.g[1].eval(y).norm_sqr()
    }
}

pub fn assemble_graph_symbols(p: &Plant, role: Role) -> GraphSymbols {
    let (n, d) = (p.n().clone(), p.d().clone());
    match role {
        Role::Plant => GraphSymbols {
            g_tilde: [-&d, n.clone()],
            g: [n, d],
        },
        Role::Controller => GraphSymbols {
            g_tilde: [-&n, d.clone()],
            g: [d, n],
        },
    }
}
