//! Sampling of elements along the imaginary axis: grids, tail bounds and
//! certified extrema of `|F(iy)|`.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::{factorial, AElement, ApTerm, Complex64, FourierAtom, Side};

/// Upper limit on grid points for one scan.
pub(crate) const MAX_GRID: usize = 1 << 18;
/// Samples per shortest oscillation period.
const SAMPLES_PER_PERIOD: f64 = 50.0;
/// Window length of the incommensurate AP scan, in slowest beat periods.
const BEAT_PERIODS: f64 = 200.0;
const MAX_AP_GRID: usize = 1 << 22;
const PARALLEL_THRESHOLD: usize = 4096;

fn atom_scale(a: &FourierAtom, y: f64) -> f64 {
    a.rate.re.max(y - a.rate.im.abs())
}

/// Moment orders tried in the grouped tail bound.
const TAIL_MOMENTS: i32 = 4;

/// Bound on `|f̂_a(iy)|` valid for all `|y| >= y0`.
///
/// Simple poles sharing a delay and side are bounded together through
/// `Σ c_k/(s+a_k) = Σ_{m<M} (-1)^m μ_m / s^{m+1} + (-1)^M Σ c_k a_k^M / (s^M (s+a_k))`
/// with `μ_m = Σ c_k a_k^m`, which keeps partial-fraction cancellation.
pub(crate) fn atom_tail_bound(atoms: &[FourierAtom], y0: f64) -> f64 {
    let single = |a: &FourierAtom| a.coeff.norm() * factorial(a.power) / atom_scale(a, y0).powi(a.power as i32 + 1);
    let mut groups: Vec<(f64, Side, Vec<&FourierAtom>)> = Vec::new();
    let mut total = 0.0;
    for a in atoms {
        if a.power > 0 {
            total += single(a);
            continue;
        }
        match groups.iter_mut().find(|g| g.0 == a.delay && g.1 == a.side) {
            Some(g) => g.2.push(a),
            None => groups.push((a.delay, a.side, vec![a])),
        }
    }
    for (_, _, g) in &groups {
        let mut best: f64 = g.iter().map(|a| single(a)).sum();
        if g.len() > 1 && y0 > 0.0 {
            let mut head = 0.0;
            for m in 0..TAIL_MOMENTS {
                let mu: Complex64 = g.iter().map(|a| a.coeff * a.rate.powi(m)).sum();
                head += mu.norm() / y0.powi(m + 1);
                let order = m + 1;
                let rest: f64 = g
                    .iter()
                    .map(|a| a.coeff.norm() * a.rate.norm().powi(order) / (y0.powi(order) * atom_scale(a, y0)))
                    .sum();
                best = best.min(head + rest);
            }
        }
        total += best;
    }
    total
}

/// Bound on `|d/dy F(iy)|` valid for all `|y| >= y0`.
pub(crate) fn slope_bound(f: &AElement, y0: f64) -> f64 {
    let ap: f64 = f.ap().iter().map(|t| t.coeff.norm() * t.delay.abs()).sum();
    let atoms: f64 = f
        .atoms()
        .iter()
        .map(|a| {
            let m = atom_scale(a, y0);
            let p = a.power as i32;
            a.coeff.norm() * factorial(a.power) * (a.delay.abs() / m.powi(p + 1) + (p + 1) as f64 / m.powi(p + 2))
        })
        .sum();
    ap + atoms
}

/// Smallest radius (doubling search) beyond which the atom part is below `eps`.
pub(crate) fn tail_radius(atoms: &[FourierAtom], eps: f64) -> f64 {
    if atoms.is_empty() {
        return 0.0;
    }
    let mut y = atoms
        .iter()
        .map(|a| a.rate.norm())
        .fold(1.0, f64::max);
    while atom_tail_bound(atoms, y) > eps && y < 1e15 {
        y *= 2.0;
    }
    y
}

/// Sorted sample points on the axis.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    points: Vec<f64>,
}

impl FrequencyGrid {
    pub fn from_points(mut points: Vec<f64>) -> Self {
        points.retain(|y| y.is_finite());
        points.sort_by(f64::total_cmp);
        points.dedup();
        Self { points }
    }

    /// `n` equispaced points on `[-y_max, y_max]`.
    pub fn uniform(y_max: f64, n: usize) -> Self {
        let n = n.max(2);
        let step = 2.0 * y_max / (n - 1) as f64;
        Self::from_points((0..n).map(|i| -y_max + step * i as f64).collect())
    }

    /// Dense linear core on `[-50, 50]` plus logarithmic wings to `10^4`.
    pub fn standard() -> Self {
        let mut pts: Vec<f64> = (0..=10_000).map(|i| -50.0 + 0.01 * i as f64).collect();
        for k in 0..=400 {
            let y = 10f64.powf(-3.0 + 7.0 * k as f64 / 400.0);
            pts.push(y);
            pts.push(-y);
        }
        Self::from_points(pts)
    }

    /// Scan grid adapted to the oscillation and pole scales of `f`, covering
    /// `[-y_max, y_max]` unless that exceeds [`MAX_GRID`] points.
    pub fn for_element(f: &AElement, y_max: f64) -> Self {
        let omega = f.max_abs_delay();
        let r_min = f
            .atoms()
            .iter()
            .map(|a| a.rate.re)
            .fold(f64::INFINITY, f64::min);
        let h_osc = if omega > 0.0 {
            2.0 * PI / (SAMPLES_PER_PERIOD * omega)
        } else {
            f64::INFINITY
        };
        let h0 = h_osc.min(r_min / 8.0).min(0.25);
        let mut half = vec![0.0];
        let mut y = 0.0;
        while y < y_max && half.len() < MAX_GRID / 2 {
            let step = if omega > 0.0 { h0 } else { h0.max(y / 64.0) };
            y = (y + step).min(y_max);
            half.push(y);
        }
        let mut pts: Vec<f64> = half.iter().skip(1).rev().map(|y| -y).collect();
        pts.extend(half);
        Self { points: pts }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest `|y|` covered.
    pub fn reach(&self) -> f64 {
        self.points
            .first()
            .map(|a| a.abs().max(self.points.last().unwrap().abs()))
            .unwrap_or(0.0)
    }
}

pub(crate) fn sample<T: Send>(points: &[f64], f: impl Fn(f64) -> T + Sync) -> Vec<T> {
    if points.len() >= PARALLEL_THRESHOLD {
        points.par_iter().map(|&y| f(y)).collect()
    } else {
        points.iter().map(|&y| f(y)).collect()
    }
}

/// Golden-section search for the maximum of `g` on `[a, b]`.
pub(crate) fn golden_max(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut gc = g(c);
    let mut gd = g(d);
    for _ in 0..80 {
        if (b - a).abs() <= 1e-13 * (1.0 + a.abs()) {
            break;
        }
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - INV_PHI * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + INV_PHI * (b - a);
            gd = g(d);
        }
    }
    if gc > gd {
        (c, gc)
    } else {
        (d, gd)
    }
}

/// Bound on `|d²/dy² F(iy)|` valid for all `|y| >= y0`.
pub(crate) fn curvature_bound(f: &AElement, y0: f64) -> f64 {
    let ap: f64 = f.ap().iter().map(|t| t.coeff.norm() * t.delay * t.delay).sum();
    let atoms: f64 = f
        .atoms()
        .iter()
        .map(|a| {
            let m = atom_scale(a, y0);
            let p = a.power as i32;
            let d = a.delay.abs();
            let k = (p + 1) as f64;
            a.coeff.norm()
                * factorial(a.power)
                * (d * d / m.powi(p + 1) + 2.0 * d * k / m.powi(p + 2) + k * (k + 1.0) / m.powi(p + 3))
        })
        .sum();
    ap + atoms
}

/// Simple poles sharing a delay and side, held as `e^{-iyd} P(s)/Q(s)` with
/// `s = ±iy` and `Q = Π (s + a_k)`.
struct PoleGroup {
    delay: f64,
    sign: f64,
    numer: Vec<Complex64>,
    rates: Vec<Complex64>,
    /// Radius of the Cauchy disk in the `y` variable.
    rho: f64,
}

impl PoleGroup {
    /// Bounds `(|g|, |g'|, |g''|)` over `y ∈ [a, b]` by Cauchy estimates.
    fn bounds(&self, a: f64, b: f64) -> (f64, f64, f64) {
        let r = a.abs().max(b.abs()) + self.rho;
        let p: f64 = self.numer.iter().rev().fold(0.0, |acc, c| acc * r + c.norm());
        let q: f64 = self
            .rates
            .iter()
            .map(|&k| {
                // |±iy + k| over the interval, shrunk by the disk radius
                let shift = -self.sign * k.im;
                let gap = if shift < a {
                    a - shift
                } else if shift > b {
                    shift - b
                } else {
                    0.0
                };
                (k.re * k.re + gap * gap).sqrt() - self.rho
            })
            .product();
        let m = (self.rho * self.delay.abs()).exp() * p / q;
        (m, m / self.rho, 2.0 * m / (self.rho * self.rho))
    }
}

/// Per-interval bounds on `|F|`, `|F'|` and `|F''|` along the axis.
struct DerivativeBounds<'a> {
    f: &'a AElement,
    groups: Vec<PoleGroup>,
    /// Atoms not covered by a group.
    rest: AElement,
}

/// Group size above which numerator coefficients are not formed.
const MAX_GROUP: usize = 12;

impl<'a> DerivativeBounds<'a> {
    fn new(f: &'a AElement) -> Self {
        let mut buckets: Vec<(f64, Side, Vec<&FourierAtom>)> = Vec::new();
        let mut rest = Vec::new();
        for a in f.atoms() {
            if a.power > 0 {
                rest.push(*a);
                continue;
            }
            match buckets.iter_mut().find(|g| g.0 == a.delay && g.1 == a.side) {
                Some(g) => g.2.push(a),
                None => buckets.push((a.delay, a.side, vec![a])),
            }
        }
        let mut groups = Vec::new();
        for (delay, side, atoms) in buckets {
            if atoms.len() < 2 || atoms.len() > MAX_GROUP {
                rest.extend(atoms.into_iter().copied());
                continue;
            }
            let rates: Vec<Complex64> = atoms.iter().map(|a| a.rate).collect();
            let mut numer = vec![Complex64::new(0.0, 0.0); rates.len()];
            for (k, a) in atoms.iter().enumerate() {
                let mut poly = vec![a.coeff];
                for (j, &r) in rates.iter().enumerate() {
                    if j != k {
                        poly = poly_mul_linear(&poly, r);
                    }
                }
                for (acc, c) in numer.iter_mut().zip(poly) {
                    *acc += c;
                }
            }
            let rho = 0.5 * rates.iter().map(|r| r.re).fold(f64::INFINITY, f64::min);
            let sign = match side {
                Side::Causal => 1.0,
                Side::Anticausal => -1.0,
            };
            groups.push(PoleGroup {
                delay,
                sign,
                numer,
                rates,
                rho,
            });
        }
        Self {
            f,
            groups,
            rest: AElement::new(Vec::new(), rest),
        }
    }

    /// `(|F|, |F'|, |F''|)` bounds over `[a, b]`.
    fn bounds(&self, a: f64, b: f64) -> (f64, f64, f64) {
        let y0 = near_origin(a, b);
        let plain = (modulus_bound(self.f, y0), slope_bound(self.f, y0), curvature_bound(self.f, y0));
        if self.groups.is_empty() {
            return plain;
        }
        let ap = self.f.ap();
        let mut m = (
            ap.iter().map(|t| t.coeff.norm()).sum::<f64>() + atom_tail_bound(self.rest.atoms(), y0),
            ap.iter().map(|t| t.coeff.norm() * t.delay.abs()).sum::<f64>() + slope_bound(&self.rest, y0),
            ap.iter().map(|t| t.coeff.norm() * t.delay * t.delay).sum::<f64>() + curvature_bound(&self.rest, y0),
        );
        for g in &self.groups {
            let (g0, g1, g2) = g.bounds(a, b);
            m = (m.0 + g0, m.1 + g1, m.2 + g2);
        }
        (plain.0.min(m.0), plain.1.min(m.1), plain.2.min(m.2))
    }
}

/// Coefficients (ascending) of `poly · (s + r)`.
fn poly_mul_linear(poly: &[Complex64], r: Complex64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
    for (i, &c) in poly.iter().enumerate() {
        out[i] += c * r;
        out[i + 1] += c;
    }
    out
}

/// Bound on `|F(iy)|` valid for all `|y| >= y0`.
fn modulus_bound(f: &AElement, y0: f64) -> f64 {
    f.ap().iter().map(|t| t.coeff.norm()).sum::<f64>() + atom_tail_bound(f.atoms(), y0)
}

/// Certified extremes of `|F(iy)|` over the span of a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisExtremes {
    pub min: f64,
    pub argmin: f64,
    pub max: f64,
    pub argmax: f64,
    /// The true minimum over the grid span is at least this.
    pub min_lower_bound: f64,
    /// The true maximum over the grid span is at most this.
    pub max_upper_bound: f64,
}

#[derive(Debug, Clone, Copy)]
struct Interval {
    key: f64,
    a: f64,
    b: f64,
    fa: Complex64,
    fb: Complex64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.key.total_cmp(&other.key).is_eq()
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key.total_cmp(&other.key)
    }
}

const REFINE_BUDGET: usize = 50_000;

/// Distance from the origin to the segment `[p, q]`.
fn segment_distance(p: Complex64, q: Complex64) -> f64 {
    let d = q - p;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return p.norm();
    }
    let t = (-(p.re * d.re + p.im * d.im) / len2).clamp(0.0, 1.0);
    (p + d * t).norm()
}

/// Branch-and-bound for the extremes of `|F|` on the grid span.
///
/// On `[a, b]` the chord `F_a + t(F_b − F_a)` is within `M₂h²/8` of `F`, and
/// `|F|` moves by at most `M₁h/2` from the endpoint mean; the sharper of the
/// two gives the interval bound. Returns `(best |F|, location, bound)`.
fn bound_extreme(
    f: &(impl Fn(f64) -> Complex64 + Sync),
    pts: &[f64],
    vals: &[Complex64],
    derivs: &impl Fn(f64, f64) -> (f64, f64),
    maximize: bool,
    tol: f64,
    rel: f64,
) -> (f64, f64, f64) {
    let sgn = if maximize { 1.0 } else { -1.0 };
    let key = |a: f64, b: f64, fa: Complex64, fb: Complex64| {
        let h = b - a;
        let (m1, m2) = derivs(a, b);
        let (na, nb) = (fa.norm(), fb.norm());
        let lip = 0.5 * (na + nb) + sgn * 0.5 * m1 * h;
        if maximize {
            (na.max(nb) + m2 * h * h / 8.0).min(lip)
        } else {
            -(segment_distance(fa, fb) - m2 * h * h / 8.0).max(lip)
        }
    };
    let (mut best_i, mut best) = (0usize, vals[0].norm());
    for (i, v) in vals.iter().enumerate() {
        let n = v.norm();
        if sgn * n > sgn * best {
            best = n;
            best_i = i;
        }
    }
    let mut arg = pts[best_i];
    if pts.len() == 1 {
        return (best, arg, best);
    }
    let mut heap: std::collections::BinaryHeap<Interval> = pts
        .windows(2)
        .zip(vals.windows(2))
        .map(|(p, v)| Interval {
            key: key(p[0], p[1], v[0], v[1]),
            a: p[0],
            b: p[1],
            fa: v[0],
            fb: v[1],
        })
        .collect();
    let done = |key: f64, best: f64| {
        let tol = tol.max(rel * best);
        if maximize {
            key <= best + tol
        } else {
            -key >= best - tol
        }
    };
    let mut evals = 0;
    while let Some(top) = heap.peek().copied() {
        if done(top.key, best) || evals >= REFINE_BUDGET || top.b - top.a < 1e-12 * (1.0 + top.a.abs()) {
            break;
        }
        heap.pop();
        let m = 0.5 * (top.a + top.b);
        let fm = f(m);
        evals += 1;
        if sgn * fm.norm() > sgn * best {
            best = fm.norm();
            arg = m;
        }
        heap.push(Interval {
            key: key(top.a, m, top.fa, fm),
            a: top.a,
            b: m,
            fa: top.fa,
            fb: fm,
        });
        heap.push(Interval {
            key: key(m, top.b, fm, top.fb),
            a: m,
            b: top.b,
            fa: fm,
            fb: top.fb,
        });
    }
    let bound = heap.peek().map(|t| sgn * t.key).unwrap_or(best);
    let bound = if maximize { bound.max(best) } else { bound.min(best).max(0.0) };
    (best, arg, bound)
}

fn near_origin(a: f64, b: f64) -> f64 {
    if a <= 0.0 && b >= 0.0 {
        0.0
    } else {
        a.abs().min(b.abs())
    }
}

/// Extremes of `|F(iy)|` over a grid span, each certified to within `tol`
/// when the refinement budget allows (the bounds report what was achieved).
pub fn axis_extremes(f: &AElement, grid: &FrequencyGrid, tol: f64) -> AxisExtremes {
    axis_extremes_rel(f, grid, tol, 0.0)
}

/// As [`axis_extremes`], but the minimum search also stops once its lower
/// bound is within `rel · min` of the best value found.
pub(crate) fn axis_extremes_rel(f: &AElement, grid: &FrequencyGrid, tol: f64, rel: f64) -> AxisExtremes {
    let pts = grid.points();
    assert!(!pts.is_empty(), "empty scan grid");
    let eval = |y: f64| f.eval(y);
    let vals = sample(pts, eval);
    let db = DerivativeBounds::new(f);
    let derivs = |a: f64, b: f64| {
        let (_, m1, m2) = db.bounds(a, b);
        (m1, m2)
    };
    let (max, argmax, max_b) = bound_extreme(&eval, pts, &vals, &derivs, true, tol, 0.0);
    let (min, argmin, min_b) = bound_extreme(&eval, pts, &vals, &derivs, false, tol, rel);
    AxisExtremes {
        min,
        argmin,
        max,
        argmax,
        min_lower_bound: min_b,
        max_upper_bound: max_b,
    }
}

/// Uncertified extremes of an arbitrary scalar function on a grid, refined
/// around the best few local candidates by golden-section search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ScanResult {
    pub min: f64,
    pub argmin: f64,
    pub max: f64,
    pub argmax: f64,
}

/// Local-extremum candidates (indices), best first.
fn candidates(vals: &[f64], maximize: bool, count: usize) -> Vec<usize> {
    let n = vals.len();
    let better = |a: f64, b: f64| if maximize { a >= b } else { a <= b };
    let mut idx: Vec<usize> = (0..n)
        .filter(|&i| (i == 0 || better(vals[i], vals[i - 1])) && (i + 1 == n || better(vals[i], vals[i + 1])))
        .collect();
    idx.sort_by(|&i, &j| {
        let o = vals[i].total_cmp(&vals[j]);
        if maximize {
            o.reverse()
        } else {
            o
        }
    });
    idx.truncate(count);
    idx
}

pub(crate) fn scan_function(g: impl Fn(f64) -> f64 + Sync, pts: &[f64]) -> ScanResult {
    assert!(!pts.is_empty(), "empty scan grid");
    let vals = sample(pts, &g);
    let bracket = |i: usize| (pts[i.saturating_sub(1)], pts[(i + 1).min(pts.len() - 1)]);
    let (mut argmax, mut max) = (f64::NAN, f64::NEG_INFINITY);
    for i in candidates(&vals, true, 4) {
        let (a, b) = bracket(i);
        let (mut y, mut v) = (pts[i], vals[i]);
        if a < b {
            let (yy, vv) = golden_max(&g, a, b);
            if vv > v {
                (y, v) = (yy, vv);
            }
        }
        if v > max {
            (max, argmax) = (v, y);
        }
    }
    let neg = |y: f64| -g(y);
    let (mut argmin, mut min) = (f64::NAN, f64::INFINITY);
    for i in candidates(&vals, false, 4) {
        let (a, b) = bracket(i);
        let (mut y, mut v) = (pts[i], vals[i]);
        if a < b {
            let (yy, vv) = golden_max(&neg, a, b);
            if -vv < v {
                (y, v) = (yy, -vv);
            }
        }
        if v < min {
            (min, argmin) = (v, y);
        }
    }
    ScanResult {
        min,
        argmin,
        max,
        argmax,
    }
}

/// Envelope element whose terms carry the moduli of all terms of `elems`;
/// its grid resolves every factor and nothing cancels.
pub(crate) fn envelope(elems: &[&AElement]) -> AElement {
    let ap = elems
        .iter()
        .flat_map(|e| e.ap().iter())
        .map(|t| ApTerm::new(t.coeff.norm(), t.delay))
        .collect();
    let atoms = elems
        .iter()
        .flat_map(|e| e.atoms().iter())
        .map(|a| FourierAtom {
            coeff: a.coeff.norm().into(),
            ..*a
        })
        .collect();
    AElement::new(ap, atoms)
}

/// Scan points for a function built pointwise from `elems`: the element grid
/// out to where the atoms fall below `eps`, then one recurrence window of the
/// AP parts on each side, where the function is within `eps` of its AP limit.
pub(crate) fn limit_scan_points(elems: &[&AElement], eps: f64) -> Vec<f64> {
    let env = envelope(elems);
    let radius = tail_radius(env.atoms(), eps).max(1.0);
    let mut pts = FrequencyGrid::for_element(&env, radius).points;
    let omega = env.ap().iter().map(|t| t.delay.abs()).fold(0.0, f64::max);
    if omega > 0.0 {
        let delays = env.spectrum();
        let window = match commensurate_base(&delays) {
            Some(g) => 2.0 * PI / g,
            None => {
                let mut sorted = delays.clone();
                sorted.sort_by(f64::total_cmp);
                let delta_min = sorted
                    .windows(2)
                    .map(|w| w[1] - w[0])
                    .fold(f64::INFINITY, f64::min);
                BEAT_PERIODS * 2.0 * PI / delta_min
            }
        };
        let step = 2.0 * PI / (SAMPLES_PER_PERIOD * omega);
        let n = ((window / step).ceil() as usize).clamp(16, MAX_GRID);
        let start = pts.last().copied().unwrap_or(0.0);
        for i in 1..=n {
            let y = start + window * i as f64 / n as f64;
            pts.push(y);
            pts.push(-y);
        }
        pts.sort_by(f64::total_cmp);
    }
    pts
}

/// Infimum and supremum of `|F_AP(iy)|` over the real line.
#[derive(Debug, Clone, PartialEq)]
pub struct ApExtremes {
    pub inf: f64,
    pub argmin: f64,
    pub sup: f64,
    pub error: f64,
    /// Common period when all delays are commensurate.
    pub period: Option<f64>,
    /// Length of the scanned window.
    pub window: f64,
}

impl ApExtremes {
    /// True when the extremes come from an exact periodic reduction.
    pub fn is_exact(&self) -> bool {
        self.period.is_some()
    }
}

/// Best rational approximation `p/q` with `q <= max_den`, if within `tol`.
fn rational_approx(x: f64, max_den: i64, tol: f64) -> Option<(i64, i64)> {
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e12 {
            break;
        }
        let a_i = a as i64;
        let p2 = a_i.checked_mul(p1)?.checked_add(p0)?;
        let q2 = a_i.checked_mul(q1)?.checked_add(q0)?;
        if q2 > max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        if (x - p1 as f64 / q1 as f64).abs() <= tol {
            return Some((p1, q1));
        }
        let frac = r - a;
        if frac.abs() < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    if q1 > 0 && (x - p1 as f64 / q1 as f64).abs() <= tol {
        Some((p1, q1))
    } else {
        None
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Common base `g` with every delay an integer multiple of `g`, if the
/// delays are commensurate (ratios rational within 1e-9).
pub(crate) fn commensurate_base(delays: &[f64]) -> Option<f64> {
    let nonzero: Vec<f64> = delays.iter().copied().filter(|d| *d != 0.0).collect();
    let reference = nonzero.iter().copied().map(f64::abs).fold(f64::INFINITY, f64::min);
    if !reference.is_finite() {
        return None;
    }
    let mut fracs = Vec::with_capacity(nonzero.len());
    let mut lcm: i64 = 1;
    for d in &nonzero {
        let ratio = d / reference;
        let (p, q) = rational_approx(ratio, 10_000, 1e-9 * ratio.abs().max(1.0))?;
        lcm = lcm.checked_mul(q / gcd(lcm, q))?;
        if lcm > 1_000_000 {
            return None;
        }
        fracs.push((p, q));
    }
    let ints: Vec<i64> = fracs.iter().map(|&(p, q)| p * (lcm / q)).collect();
    let g = ints.iter().fold(0, |acc, &n| gcd(acc, n));
    let largest = ints.iter().map(|n| (n / g).abs()).max().unwrap_or(1);
    if largest > 40_000 {
        return None;
    }
    Some(reference * g as f64 / lcm as f64)
}

pub fn ap_extremes(ap: &[ApTerm]) -> ApExtremes {
    match ap {
        [] => {
            return ApExtremes {
                inf: 0.0,
                argmin: 0.0,
                sup: 0.0,
                error: 0.0,
                period: Some(f64::INFINITY),
                window: 0.0,
            }
        }
        [t] => {
            return ApExtremes {
                inf: t.coeff.norm(),
                argmin: 0.0,
                sup: t.coeff.norm(),
                error: 0.0,
                period: Some(f64::INFINITY),
                window: 0.0,
            }
        }
        _ => {}
    }
    let f = AElement {
        ap: ap.to_vec(),
        atoms: Vec::new(),
    };
    let delays = f.spectrum();
    let omega = f.max_abs_delay();
    let mut step = 2.0 * PI / (SAMPLES_PER_PERIOD * omega);
    let (period, window) = match commensurate_base(&delays) {
        Some(g) => {
            let t = 2.0 * PI / g;
            (Some(t), t)
        }
        None => {
            let mut sorted = delays.clone();
            sorted.sort_by(f64::total_cmp);
            let delta_min = sorted
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::INFINITY, f64::min);
            (None, BEAT_PERIODS * 2.0 * PI / delta_min)
        }
    };
    let n = ((window / step).ceil() as usize).max(64);
    let n = if n > MAX_AP_GRID {
        step = window / MAX_AP_GRID as f64;
        MAX_AP_GRID
    } else {
        step = window / n as f64;
        n
    };
    let grid = FrequencyGrid {
        points: (0..=n).map(|i| i as f64 * step).collect(),
    };
    let ext = axis_extremes(&f, &grid, 1e-12);
    ApExtremes {
        inf: ext.min,
        argmin: ext.argmin,
        sup: ext.max,
        error: (ext.max_upper_bound - ext.max).max(ext.min - ext.min_lower_bound),
        period,
        window,
    }
}

/// Supremum of `|F(iy)|` over the axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SupEstimate {
    pub value: f64,
    pub error: f64,
    pub argmax: f64,
    /// Radius of the scanned interval; beyond it the AP bound is used.
    pub radius: f64,
    /// True when the AP part has incommensurate delays (window estimate).
    pub approximate: bool,
}

pub fn sup_norm_axis(f: &AElement, tol: f64) -> SupEstimate {
    let ap = ap_extremes(f.ap());
    if f.atoms().is_empty() {
        return SupEstimate {
            value: ap.sup,
            error: ap.error,
            argmax: f64::INFINITY,
            radius: f64::INFINITY,
            approximate: !ap.is_exact(),
        };
    }
    let radius = tail_radius(f.atoms(), 0.5 * tol);
    let grid = FrequencyGrid::for_element(f, radius);
    let reach = grid.reach();
    let tail = atom_tail_bound(f.atoms(), reach);
    let ext = axis_extremes(f, &grid, 0.25 * tol);

    let upper = ext.max_upper_bound.max(ap.sup + ap.error + tail);
    let lower = ext.max.max(ap.sup - ap.error - tail);
    let (value, argmax) = if ext.max >= ap.sup {
        (ext.max, ext.argmax)
    } else {
        (ap.sup, f64::INFINITY)
    };
    SupEstimate {
        value,
        error: (upper - value).max(value - lower).max(0.0),
        argmax,
        radius: reach,
        approximate: !ap.is_exact(),
    }
}
