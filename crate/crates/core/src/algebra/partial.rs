//! Products of atoms expanded back into atoms by partial fractions.
//!
//! With `u = iy`, a causal atom carries `1/(u + a)^m` and an anticausal one
//! `1/(-u + b)^n = (-1)^n / (u - b)^n`, so both are poles `σ/(u + r)^k` in the
//! same variable and the product splits by the classical two-pole formula.

use super::{factorial, Complex64, FourierAtom, Side};

/// Rates closer than this are handled as a repeated pole.
const DEGENERATE_RATE: f64 = 1e-9;

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn sign(k: u32) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Pole location `r` such that the atom's kernel is `σ/(u + r)^k`.
fn pole(atom: &FourierAtom) -> (Complex64, f64) {
    let k = atom.power + 1;
    match atom.side {
        Side::Causal => (atom.rate, 1.0),
        Side::Anticausal => (-atom.rate, sign(k)),
    }
}

/// Converts `coeff/(u + r)^k` back into an atom on the given side.
fn to_atom(coeff: Complex64, r: Complex64, k: u32, side: Side, delay: f64) -> FourierAtom {
    let power = k - 1;
    let (rate, sigma) = match side {
        Side::Causal => (r, 1.0),
        Side::Anticausal => (-r, sign(k)),
    };
    FourierAtom {
        coeff: coeff * sigma / factorial(power),
        delay,
        rate,
        power,
        side,
    }
}

pub(super) fn atom_product(x: &FourierAtom, y: &FourierAtom) -> Vec<FourierAtom> {
    // fixed operand order keeps x*y and y*x bitwise identical
    let (x, y) = if x.key_cmp(y).is_gt() { (y, x) } else { (x, y) };
    let m = x.power + 1;
    let n = y.power + 1;
    let (r1, s1) = pole(x);
    let (r2, s2) = pole(y);
    let scale = x.coeff * y.coeff * factorial(x.power) * factorial(y.power) * s1 * s2;
    let delay = x.delay + y.delay;

    if (r1 - r2).norm() <= DEGENERATE_RATE * (1.0 + r1.norm()) {
        debug_assert_eq!(x.side, y.side);
        return vec![to_atom(scale, r1, m + n, x.side, delay)];
    }

    let mut out = Vec::with_capacity((m + n) as usize);
    let d12 = r2 - r1;
    let d21 = r1 - r2;
    for k in 1..=m {
        let j = m - k;
        let a_k = sign(j) * binomial(n + j - 1, j) * d12.powi(-((n + j) as i32));
        out.push(to_atom(scale * a_k, r1, k, x.side, delay));
    }
    for k in 1..=n {
        let j = n - k;
        let b_k = sign(j) * binomial(m + j - 1, j) * d21.powi(-((m + j) as i32));
        out.push(to_atom(scale * b_k, r2, k, y.side, delay));
    }
    out
}
