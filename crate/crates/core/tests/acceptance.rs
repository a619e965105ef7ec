//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use nugap::algebra::{index_w, AElement, ApTerm, FourierAtom};
use nugap::metrics::{
    annulus_eval, annulus_eval_with, annulus_index, d_aplus, d_hinf, d_hinf_rho,
    mismatch_gtilde2_g1, pairing_g1star_g2, stabilization_step, AnnulusProbe, Branch, Flag,
    MetricResult, StepScale, DEFAULT_TOL,
};
use nugap::plants::{mirrored_gain_delay, Plant};
use nugap::stability::{equivalence_report, mu};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn hinf(p1: &Plant, p2: &Plant) -> Result<MetricResult, String> {
    d_hinf(p1, p2, DEFAULT_TOL).map_err(|e| format!("d_hinf({}, {}): {e}", p1.label, p2.label))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let rhos = [0.75, 0.8, 0.9, 0.95, 0.99];
    for r in [0.75, 0.8, 0.9] {
        let (p1, p2) = mirrored_gain_delay(r, 1.0).map_err(|e| e.to_string())?;
        let expected = 2.0 * r * (1.0 - r * r).sqrt();
        let a = d_aplus(&p1, &p2, DEFAULT_TOL);
        check(a.branch == Branch::Finite && (a.value - expected).abs() < 1e-6, || {
            format!("r={r}: d_aplus {} ({}) vs {expected}", a.value, a.branch)
        })?;
        let h = hinf(&p1, &p2)?;
        check(h.value == 1.0 && h.branch == Branch::Unity && h.has_flag(Flag::AnnulusZero), || {
            format!("r={r}: d_hinf {} ({}) flags {:?}", h.value, h.branch, h.diagnostics.flags)
        })?;
        for rho in rhos {
            let hr = d_hinf_rho(&p1, &p2, rho, DEFAULT_TOL).map_err(|e| e.to_string())?;
            check(hr.value == 1.0 && hr.branch == Branch::Unity, || {
                format!("r={r}, rho={rho}: d_hinf_rho {} ({})", hr.value, hr.branch)
            })?;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 10.0, || format!("took {secs:.2}s"))?;
    Ok(format!("d_aplus = 2r*sqrt(1-r^2), d_hinf = 1 for r in {{0.75, 0.8, 0.9}} in {secs:.2}s"))
}

fn criterion_2() -> Outcome {
    let (p1, p2) = mirrored_gain_delay(0.8, 1.0).map_err(|e| e.to_string())?;
    let pairing = pairing_g1star_g2(&p1, &p2);
    let c = pairing
        .as_constant()
        .ok_or_else(|| format!("pairing is not a constant: {pairing:?}"))?;
    check(pairing.atoms().is_empty() && pairing.ap().len() == 1, || format!("{pairing:?}"))?;
    check((c - Complex64::new(0.28, 0.0)).norm() < 1e-15, || format!("pairing constant {c}"))?;
    let m = mismatch_gtilde2_g1(&p1, &p2);
    check(
        m.atoms().is_empty()
            && m.ap().len() == 1
            && m.ap()[0].delay == 1.0
            && (m.ap()[0].coeff.norm() - 0.96).abs() < 1e-15,
        || format!("mismatch {m:?}"),
    )?;
    Ok(format!("G1*G2 = {} exactly, mismatch {}e^(-s)", c.re, m.ap()[0].coeff.re))
}

/// Classical chordal-distance metric of `b/(s+a)` plants, sampled densely on
/// the unit circle through `s = (1+z)/(1-z)` with the winding read off by
/// phase unwrapping.
fn classical_oracle(a1: f64, b1: f64, a2: f64, b2: f64) -> f64 {
    const N: usize = 400_000;
    let p = |a: f64, b: f64, s: Complex64| b / (s + a);
    let mut sup = 0.0f64;
    let mut min_mod = f64::INFINITY;
    let mut total = 0.0;
    let mut prev: Option<Complex64> = None;
    for k in 1..N {
        let z = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / N as f64);
        let s = (1.0 + z) / (1.0 - z);
        let (x1, x2) = (p(a1, b1, s), p(a2, b2, s));
        let f = 1.0 + x2.conj() * x1;
        min_mod = min_mod.min(f.norm());
        if let Some(q) = prev {
            total += (f / q).arg();
        }
        prev = Some(f);
        let chord = (x1 - x2).norm() / ((1.0 + x1.norm_sqr()) * (1.0 + x2.norm_sqr())).sqrt();
        sup = sup.max(chord);
    }
    if min_mod < 1e-9 {
        return 1.0;
    }
    let wno = (total / (2.0 * PI)).round() as i64;
    let eta = |a: f64| (a < 0.0) as i64;
    if wno + eta(a1) - eta(a2) == 0 {
        sup
    } else {
        1.0
    }
}

fn criterion_3() -> Outcome {
    let pairs = [
        (1.0, 1.0, 1.0, 2.0),
        (1.0, 1.0, -1.0, 2.0),
        (2.0, 1.0, 0.5, 1.0),
        (-1.0, 1.0, -2.0, 1.0),
        (1.0, 3.0, 1.0, -3.0),
    ];
    let rows: Vec<Result<String, String>> = pairs
        .par_iter()
        .map(|&(a1, b1, a2, b2)| {
            let p1 = Plant::first_order(a1, b1).map_err(|e| e.to_string())?;
            let p2 = Plant::first_order(a2, b2).map_err(|e| e.to_string())?;
            let da = d_aplus(&p1, &p2, DEFAULT_TOL).value;
            let dh = hinf(&p1, &p2)?.value;
            let oracle = classical_oracle(a1, b1, a2, b2);
            let worst = (da - dh).abs().max((da - oracle).abs()).max((dh - oracle).abs());
            check(worst < 2e-3, || {
                format!("({a1},{b1}) vs ({a2},{b2}): aplus {da} hinf {dh} oracle {oracle}")
            })?;
            Ok(format!("{oracle:.4}"))
        })
        .collect();
    let values = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(format!("5 first-order pairs agree with the classical oracle: [{}]", values.join(", ")))
}

fn metric_suite() -> Vec<Plant> {
    let gd = [(0.5, 0.0), (1.0, 0.5), (2.0, 1.0), (-1.0, 0.5), (1.5, 1.0)];
    let fo = [(1.0, 1.0), (2.0, 1.0), (-1.0, 2.0), (0.5, -1.0), (3.0, 2.0)];
    gd.iter()
        .map(|&(k, t)| Plant::gain_delay(k, t).unwrap().with_label(format!("gd({k},{t})")))
        .chain(
            fo.iter()
                .map(|&(a, b)| Plant::first_order(a, b).unwrap().with_label(format!("fo({a},{b})"))),
        )
        .collect()
}

fn metric_matrix(plants: &[Plant], f: impl Fn(&Plant, &Plant) -> Result<f64, String> + Sync) -> Result<Vec<Vec<f64>>, String> {
    let n = plants.len();
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let vals = cells
        .par_iter()
        .map(|&(i, j)| f(&plants[i], &plants[j]))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(vals.chunks(n).map(|c| c.to_vec()).collect())
}

fn axioms(name: &str, plants: &[Plant], d: &[Vec<f64>]) -> Result<usize, String> {
    let n = plants.len();
    let mut triangles = 0;
    for i in 0..n {
        check(d[i][i] < 1e-9, || format!("{name}: d({0},{0}) = {1}", plants[i].label, d[i][i]))?;
        for j in 0..n {
            check((0.0..=1.0).contains(&d[i][j]), || format!("{name}: value {} out of range", d[i][j]))?;
            check((d[i][j] - d[j][i]).abs() < 1e-6, || {
                format!("{name}: asymmetric {} vs {} for {} / {}", d[i][j], d[j][i], plants[i].label, plants[j].label)
            })?;
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                for (x, m, y) in [(i, j, k), (j, i, k), (i, k, j)] {
                    check(d[x][y] <= d[x][m] + d[m][y] + 1e-6, || {
                        format!(
                            "{name}: triangle d({},{})={} > {} + {}",
                            plants[x].label, plants[y].label, d[x][y], d[x][m], d[m][y]
                        )
                    })?;
                }
                triangles += 1;
            }
        }
    }
    Ok(triangles)
}

fn criterion_4() -> Outcome {
    let plants = metric_suite();
    let da = metric_matrix(&plants, |a, b| Ok(d_aplus(a, b, DEFAULT_TOL).value))?;
    let dh = metric_matrix(&plants, |a, b| hinf(a, b).map(|r| r.value))?;
    let t1 = axioms("d_aplus", &plants, &da)?;
    let t2 = axioms("d_hinf", &plants, &dh)?;
    Ok(format!("{} plants, {t1}+{t2} triangle triples, symmetry and identity hold", plants.len()))
}

struct RandomElement {
    element: AElement,
    ap: Vec<(Complex64, f64)>,
    factors: Vec<(Complex64, f64)>,
}

/// `(Σ c_k e^{-s d_k}) · Π (s - z_j)/(s + a_j)` with a dominant first term.
fn random_element(rng: &mut ChaCha8Rng, lhp_only: bool) -> RandomElement {
    let polar = |rng: &mut ChaCha8Rng, m: f64| Complex64::from_polar(m, rng.random_range(-PI..PI));
    // a unit of A+ needs its dominant term undelayed
    let d0 = if lhp_only { 0.0 } else { rng.random_range(0.0..2.0) };
    let m0 = rng.random_range(0.5..2.0);
    let c0 = polar(rng, m0);
    let mut ap = vec![(c0, d0)];
    let extra = rng.random_range(0..=2usize);
    let mut budget = 0.5 * c0.norm();
    for _ in 0..extra {
        let m = rng.random_range(0.0..budget);
        budget -= m;
        ap.push((polar(rng, m), rng.random_range(0.0..3.0)));
    }
    let nf = rng.random_range(1..=3usize);
    let factors: Vec<(Complex64, f64)> = (0..nf)
        .map(|_| {
            let x = rng.random_range(0.2..2.0);
            let sign = if lhp_only || rng.random_bool(0.5) { -1.0 } else { 1.0 };
            let z = Complex64::new(sign * x, rng.random_range(-3.0..3.0));
            (z, rng.random_range(0.3..3.0))
        })
        .collect();
    let mut element = AElement::new(ap.iter().map(|&(c, d)| ApTerm::new(c, d)).collect(), vec![]);
    for &(z, a) in &factors {
        let pole = FourierAtom::simple_pole(-(z + a), a).unwrap();
        element = &element * &(&AElement::one() + &AElement::from_atom(pole));
    }
    RandomElement { element, ap, factors }
}

fn unwrapped_total(f: impl Fn(f64) -> Complex64, ys: impl Iterator<Item = f64>) -> f64 {
    let mut total = 0.0;
    let mut prev: Option<Complex64> = None;
    for y in ys {
        let v = f(y);
        if let Some(p) = prev {
            total += (v / p).arg();
        }
        prev = Some(v);
    }
    total
}

/// Independent `(w_av, w)`: phase slope of the almost periodic factor over a
/// long window, winding of the rational factor over a sinh-spaced grid.
fn index_oracle(e: &RandomElement) -> (f64, i64) {
    let ap = |y: f64| {
        e.ap.iter()
            .map(|&(c, d)| c * Complex64::from_polar(1.0, -y * d))
            .sum::<Complex64>()
    };
    let half = 10_000.0;
    let n = 400_000;
    let total = unwrapped_total(ap, (0..=n).map(|k| -half + 2.0 * half * k as f64 / n as f64));
    let w_av = total / (2.0 * half);
    let rational = |y: f64| {
        let iy = Complex64::new(0.0, y);
        e.factors.iter().map(|&(z, a)| (iy - z) / (iy + a)).product::<Complex64>()
    };
    let umax = 1e6f64.asinh();
    let m = 200_000;
    let total = unwrapped_total(rational, (0..=m).map(|k| (-umax + 2.0 * umax * k as f64 / m as f64).sinh()));
    (w_av, (total / (2.0 * PI)).round() as i64)
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let elements: Vec<RandomElement> = (0..50).map(|_| random_element(&mut rng, false)).collect();
    let worst = elements
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let got = index_w(&e.element, DEFAULT_TOL).map_err(|err| format!("element {i}: {err} ap {:?} factors {:?}", e.ap, e.factors))?;
            let (w_av, w) = index_oracle(e);
            check(got.w == w && (got.w_av - w_av).abs() < 1e-4, || {
                format!("element {i}: index ({}, {}) vs oracle ({w_av}, {w})", got.w_av, got.w)
            })?;
            Ok((got.w_av - w_av).abs())
        })
        .collect::<Result<Vec<f64>, String>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let probe = AnnulusProbe::master(AnnulusProbe::DEFAULT_REFINEMENT);
    let mut fields = 0;
    let stable: Vec<RandomElement> = (0..10).map(|_| random_element(&mut rng, true)).collect();
    for (i, e) in stable.iter().enumerate() {
        let scale = StepScale {
            omega: e.element.max_abs_delay(),
            r_min: e.factors.iter().map(|f| f.1).fold(f64::INFINITY, f64::min),
        };
        let field = annulus_eval_with(&probe, scale, |s| {
            (e.element.eval_rhp(s).expect("causal element"), Complex64::new(0.0, 0.0))
        });
        let idx = annulus_index(&field);
        check(idx.nonvanishing && idx.constancy_ok && idx.winding == 0, || {
            format!("stable element {i}: annulus {idx:?}")
        })?;
        fields += 1;
    }
    let first_order: Vec<(f64, f64)> = vec![(1.0, 1.0), (1.0, 2.0), (-1.0, 2.0), (2.0, 1.0), (0.5, 1.0), (-2.0, 1.0), (3.0, 2.0)];
    for &(a1, b1) in &first_order {
        for &(a2, b2) in &first_order {
            if classical_oracle(a1, b1, a2, b2) >= 1.0 {
                continue;
            }
            let p1 = Plant::first_order(a1, b1).unwrap();
            let p2 = Plant::first_order(a2, b2).unwrap();
            let idx = annulus_index(&annulus_eval(&p1, &p2, &probe));
            check(idx.nonvanishing && idx.constancy_ok, || {
                format!("({a1},{b1}) / ({a2},{b2}): annulus {idx:?}")
            })?;
            fields += 1;
        }
    }
    Ok(format!(
        "50 random elements match the phase-unwrap oracle (max w_av error {worst:.1e}); {fields} invertible annulus fields radius-constant"
    ))
}

fn gains() -> Vec<Plant> {
    (0..=40)
        .map(|k| {
            let c = -5.0 + 0.25 * k as f64;
            Plant::gain_controller(c).unwrap().with_label(format!("c={c}"))
        })
        .collect()
}

fn criterion_6() -> Outcome {
    let (p1, p2) = mirrored_gain_delay(0.8, 1.0).map_err(|e| e.to_string())?;
    let rep = equivalence_report(&p1, &p2, &[Plant::zero_controller()], DEFAULT_TOL).map_err(|e| e.to_string())?;
    let lower = rep.mu_lb * rep.d_aplus.value;
    let upper = rep.d_aplus.value / rep.mu_lb;
    let h = rep.d_hinf.value;
    check((rep.mu_lb - 0.6).abs() < 1e-6, || format!("mu {}", rep.mu_lb))?;
    check((lower - 0.576).abs() < 1e-6 && h == 1.0 && (upper - 1.6).abs() < 1e-6, || {
        format!("chain {lower} <= {h} <= {upper}")
    })?;
    check(lower <= h && h <= upper && rep.passed, || "chain does not hold".into())?;

    let pairs = [(1.0, 1.0, 1.0, 2.0), (1.0, 1.0, -1.0, 2.0), (2.0, 1.0, 0.5, 1.0), (-1.0, 1.0, -2.0, 1.0)];
    let controllers = gains();
    let mut tested = 0;
    let mut worst = f64::INFINITY;
    for (a1, b1, a2, b2) in pairs {
        let q1 = Plant::first_order(a1, b1).unwrap();
        let q2 = Plant::first_order(a2, b2).unwrap();
        let da = d_aplus(&q1, &q2, DEFAULT_TOL).value;
        let dh = hinf(&q1, &q2)?.value;
        let mut stabilizing = 0;
        for c in &controllers {
            let m = mu(&q1, c, DEFAULT_TOL);
            if !m.stabilizing() {
                continue;
            }
            stabilizing += 1;
            let s1 = dh - m.mu * da;
            let s2 = da / m.mu - dh;
            worst = worst.min(s1).min(s2);
            check(s1 >= -1e-4 && s2 >= -1e-4, || {
                format!("({a1},{b1}) vs ({a2},{b2}), {}: slacks {s1}, {s2}", c.label)
            })?;
        }
        check(stabilizing > 0, || format!("no stabilizing gain for ({a1},{b1})"))?;
        tested += stabilizing;
    }
    Ok(format!(
        "0.576 <= 1 <= 1.6 with mu = {}; {tested} stabilizing first-order instances, min slack {worst:.2e}",
        rep.mu_lb
    ))
}

fn criterion_7() -> Outcome {
    let (p1, _) = mirrored_gain_delay(0.8, 1.0).map_err(|e| e.to_string())?;
    let mut controllers = gains();
    for k in [-2.0, -1.0, -0.5, 0.5, 1.0] {
        for tau in [0.5, 1.0] {
            controllers.push(Plant::gain_delay(k, tau).unwrap().with_label(format!("{k}e^(-{tau}s)")));
        }
    }
    for (a, b) in [(1.0, -0.5), (2.0, -1.0), (0.5, 0.3), (1.0, 1.0)] {
        controllers.push(Plant::first_order(a, b).unwrap().with_label(format!("{b}/(s+{a})")));
    }
    let mut plants = metric_suite();
    plants.push(p1.clone());
    let mut count = 0;
    let mut best: f64 = 0.0;
    for p in &plants {
        for c in &controllers {
            let m = mu(p, c, DEFAULT_TOL).mu;
            check((0.0..=1.0).contains(&m), || format!("mu({}, {}) = {m}", p.label, c.label))?;
            count += 1;
        }
    }
    for c in &controllers {
        let m = mu(&p1, c, DEFAULT_TOL).mu;
        best = best.max(m);
        check(m <= 0.96 + 1e-4, || format!("mu(P1, {}) = {m} exceeds 0.96", c.label))?;
    }
    Ok(format!("{count} margins in [0,1]; best mu(P1, C) over {} controllers = {best:.4}", controllers.len()))
}

fn criterion_8() -> Outcome {
    let mut pairs: Vec<(Plant, Plant)> = [0.75, 0.8, 0.9]
        .iter()
        .map(|&r| mirrored_gain_delay(r, 1.0).unwrap())
        .collect();
    let plants = metric_suite();
    for i in 0..plants.len() {
        for j in i + 1..plants.len() {
            pairs.push((plants[i].clone(), plants[j].clone()));
        }
    }
    let steps = pairs
        .par_iter()
        .map(|(a, b)| {
            let r = hinf(a, b)?;
            let t = &r.diagnostics.rho_trace;
            for w in t.windows(2) {
                check(w[0].0 < w[1].0 && w[1].1 <= w[0].1 + 1e-8, || {
                    format!("{} / {}: trace increases {:?} -> {:?}", a.label, b.label, w[0], w[1])
                })?;
            }
            let k = stabilization_step(t).ok_or_else(|| format!("{} / {}: trace did not stabilize", a.label, b.label))?;
            check(k <= 12, || format!("{} / {}: stabilized at step {k}", a.label, b.label))?;
            Ok(k)
        })
        .collect::<Result<Vec<usize>, String>>()?;
    Ok(format!(
        "{} pairs monotone, stabilized by step {}",
        pairs.len(),
        steps.iter().max().copied().unwrap_or(0)
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("noncoincidence on the mirrored delay pair", criterion_1),
        ("axis pairing is the constant 0.28", criterion_2),
        ("rational coincidence with the classical metric", criterion_3),
        ("metric axioms", criterion_4),
        ("winding oracles", criterion_5),
        ("equivalence sandwich", criterion_6),
        ("margin bounds", criterion_7),
        ("monotone rho-trace", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} PASS  {name}: {detail} [{secs:.2}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {detail} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
