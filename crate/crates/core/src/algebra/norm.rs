use super::{factorial, AElement, FourierAtom, Side};

/// Target absolute accuracy of the L¹ quadrature.
pub const QUAD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub error: f64,
}

/// Algebra norm `‖f_a‖_{L¹} + Σ|f_k|`.
pub fn norm_a(f: &AElement) -> NormEstimate {
    let ell1: f64 = f.ap().iter().map(|t| t.coeff.norm()).sum();
    let l1 = l1_norm(f.atoms());
    NormEstimate {
        value: ell1 + l1.value,
        error: l1.error,
    }
}

/// `∫_x^∞ u^p e^{-σu} du` for `x >= 0`.
fn gamma_tail(p: u32, sigma: f64, x: f64) -> f64 {
    let z = sigma * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=p {
        term *= z / k as f64;
        sum += term;
    }
    factorial(p) / sigma.powi(p as i32 + 1) * (-z).exp() * sum
}

/// Bound on `∫ |atoms|` over `t > hi` (causal tails) and `t < lo` (anticausal).
fn tail_mass(atoms: &[FourierAtom], lo: f64, hi: f64) -> f64 {
    atoms
        .iter()
        .map(|a| {
            let gap = match a.side {
                Side::Causal => hi - a.delay,
                Side::Anticausal => a.delay - lo,
            };
            a.coeff.norm() * gamma_tail(a.power, a.rate.re, gap.max(0.0))
        })
        .sum()
}

fn l1_norm(atoms: &[FourierAtom]) -> NormEstimate {
    if atoms.is_empty() {
        return NormEstimate {
            value: 0.0,
            error: 0.0,
        };
    }
    let mut breaks: Vec<f64> = atoms.iter().map(|a| a.delay).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let d_min = breaks[0];
    let d_max = *breaks.last().unwrap();
    let slowest = atoms.iter().map(|a| a.rate.re).fold(f64::INFINITY, f64::min);
    let tail_target = 0.1 * QUAD_TOL;

    let mut reach = 1.0 / slowest;
    while tail_mass(atoms, d_min - reach, d_max + reach) > tail_target && reach < 1e7 / slowest {
        reach *= 1.5;
    }
    let lo = d_min - reach;
    let hi = d_max + reach;
    let tail = tail_mass(atoms, lo, hi);

    let integrand = |t: f64| -> f64 {
        atoms
            .iter()
            .map(|a| a.time_value(t))
            .sum::<num_complex::Complex64>()
            .norm()
    };
    let mut pts = vec![lo];
    pts.extend(breaks.iter().copied());
    pts.push(hi);
    pts.dedup();

    let seg_tol = QUAD_TOL / pts.len() as f64;
    let mut value = 0.0;
    let mut error = tail;
    for w in pts.windows(2) {
        let (v, e) = adaptive_gk15(&integrand, w[0], w[1], seg_tol, 40);
        value += v;
        error += e;
    }
    NormEstimate { value, error }
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_WEIGHTS[7] * fc;
    let mut gauss = G_WEIGHTS[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let pair = f(c - x) + f(c + x);
        kronrod += GK_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += G_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod 7/15; returns `(integral, error estimate)`.
pub(crate) fn adaptive_gk15(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
) -> (f64, f64) {
    let (v, e) = gk15(f, a, b);
    if e <= tol || depth == 0 || (b - a).abs() < 1e-12 {
        return (v, e);
    }
    let m = 0.5 * (a + b);
    let (v1, e1) = adaptive_gk15(f, a, m, 0.5 * tol, depth - 1);
    let (v2, e2) = adaptive_gk15(f, m, b, 0.5 * tol, depth - 1);
    (v1 + v2, e1 + e2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{ApTerm, Complex64};

    #[test]
    fn ell1_only() {
        let f = AElement::new(vec![ApTerm::new(0.8, 1.0), ApTerm::new(0.6, 0.0)], vec![]);
        let n = norm_a(&f);
        assert!((n.value - 1.4).abs() < 1e-15);
        assert_eq!(n.error, 0.0);
        assert_eq!(norm_a(&AElement::zero()).value, 0.0);
    }

    #[test]
    fn single_exponential_atom() {
        let f = AElement::from(FourierAtom::simple_pole(1.0, 1.0).unwrap());
        let n = norm_a(&f);
        assert!((n.value - 1.0).abs() < 1e-8, "{n:?}");
        assert!(n.error < 1e-7);
    }

    #[test]
    fn power_atom_and_sign_change() {
        // ∫ t^2 e^{-2t} = 2/8
        let a = FourierAtom::new(1.0, 0.5, 2.0, 2, Side::Causal).unwrap();
        let n = norm_a(&AElement::from(a));
        assert!((n.value - 0.25).abs() < 1e-8);
        // e^{-t} - 2 e^{-2t}: sign change at ln 2; ∫|.| = 2·(1/2 - 1/4)... computed below
        let f = AElement::new(
            vec![],
            vec![
                FourierAtom::simple_pole(1.0, 1.0).unwrap(),
                FourierAtom::simple_pole(-2.0, 2.0).unwrap(),
            ],
        );
        // on [0, ln2]: 2e^{-2t} - e^{-t} integrates to 1/4; on [ln2, ∞): 1/2 - 1/4
        let exact = 0.25 + 0.25;
        assert!((norm_a(&f).value - exact).abs() < 1e-8);
    }

    #[test]
    fn oscillating_complex_rate() {
        // |e^{-(1+5i)t}| = e^{-t}
        let a = FourierAtom::simple_pole(Complex64::new(0.0, 3.0), Complex64::new(1.0, 5.0)).unwrap();
        let n = norm_a(&AElement::from(a));
        assert!((n.value - 3.0).abs() < 1e-8);
    }

    #[test]
    fn anticausal_atoms_integrate_leftwards() {
        let a = FourierAtom::new(1.0, -1.0, 0.5, 0, Side::Anticausal).unwrap();
        assert!((norm_a(&AElement::from(a)).value - 2.0).abs() < 1e-8);
    }
}
