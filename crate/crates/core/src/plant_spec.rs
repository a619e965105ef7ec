//! One-line key-value plant descriptions.
//!
//! ```text
//! kind=gain_delay k=1.333333 tau=1.0 label=P1
//! kind=first_order a=0 b=1
//! kind=explicit n.ap=[(0.8,1)] d.ap=[(-0.6,0)] y.ap=[(-1.6666666666666667,0)]
//! ```
//!
//! Explicit factors take `<f>.ap=[(c,delay),...]` and
//! `<f>.atoms=[(c,delay,rate,power,side),...]` for `f` in `n, d, x, y`;
//! coefficients and rates may be complex (`1.5-2i`), `side` is `causal` or
//! `anticausal`.

use std::fmt::Write as _;

use crate::algebra::{AElement, ApTerm, Complex64, FourierAtom, Side};
use crate::plants::{ncf_first_order, ncf_gain_delay, CoprimePair, Plant};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum PlantKind {
    GainDelay { k: f64, tau: f64 },
    FirstOrder { a: f64, b: f64 },
    Explicit {
        n: AElement,
        d: AElement,
        bezout: Option<(AElement, AElement)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantSpec {
    pub label: String,
    pub kind: PlantKind,
}

impl PlantSpec {
    pub fn pair(&self) -> Result<CoprimePair> {
        match &self.kind {
            PlantKind::GainDelay { k, tau } => ncf_gain_delay(*k, *tau),
            PlantKind::FirstOrder { a, b } => ncf_first_order(*a, *b),
            PlantKind::Explicit { n, d, bezout } => CoprimePair::new(n.clone(), d.clone(), bezout.clone()),
        }
    }

    /// Validated plant; the label defaults to the rendered spec.
    pub fn build(&self) -> Result<Plant> {
        let label = if self.label.is_empty() {
            render(self)
        } else {
            self.label.clone()
        };
        Plant::new(self.pair()?, label)
    }
}

/// A `key=value` token and the 1-based column where it starts.
#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    key: &'a str,
    value: &'a str,
    column: usize,
    value_column: usize,
}

fn err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn tokenize<'a>(text: &'a str, line: usize) -> Result<Vec<Token<'a>>> {
    let mut tokens = Vec::new();
    let mut depth = 0i32;
    let mut start: Option<usize> = None;
    let bytes = text.as_bytes();
    let push = |s: usize, e: usize, tokens: &mut Vec<Token<'a>>| -> Result<()> {
        let raw = &text[s..e];
        let column = text[..s].chars().count() + 1;
        let Some(eq) = raw.find('=') else {
            return Err(err(line, column, format!("expected key=value, found '{raw}'")));
        };
        tokens.push(Token {
            key: &raw[..eq],
            value: &raw[eq + 1..],
            column,
            value_column: column + raw[..=eq].chars().count(),
        });
        Ok(())
    };
    for (i, &b) in bytes.iter().enumerate() {
        match b {
            b'[' | b'(' => depth += 1,
            b']' | b')' => depth -= 1,
            _ => {}
        }
        if b.is_ascii_whitespace() && depth <= 0 {
            if let Some(s) = start.take() {
                push(s, i, &mut tokens)?;
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        push(s, text.len(), &mut tokens)?;
    }
    if depth != 0 {
        return Err(err(line, text.chars().count() + 1, "unbalanced brackets"));
    }
    Ok(tokens)
}

fn real(tok: &str, line: usize, column: usize) -> Result<f64> {
    match tok.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(err(line, column, format!("malformed number '{tok}'"))),
    }
}

/// Parses `3`, `-2.5e-1`, `1.5-2i`, `2i`, `-i`.
pub fn parse_complex(tok: &str) -> Option<Complex64> {
    let t = tok.trim();
    let finite = |z: Complex64| (z.re.is_finite() && z.im.is_finite()).then_some(z);
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().ok().map(|re| Complex64::new(re, 0.0)).and_then(finite);
    };
    // split at the last sign that is not an exponent sign or the leading sign
    let split = body
        .char_indices()
        .filter(|&(i, c)| (c == '+' || c == '-') && i > 0 && !matches!(body.as_bytes()[i - 1], b'e' | b'E'))
        .map(|(i, _)| i)
        .next_back();
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        s => s.parse::<f64>().ok()?,
    };
    finite(Complex64::new(re.parse::<f64>().ok()?, im))
}

/// Splits `[(..),(..)]` into the comma-separated fields of each tuple, with
/// the column of each field.
fn tuples(value: &str, line: usize, column: usize) -> Result<Vec<Vec<(String, usize)>>> {
    let v = value.trim();
    if !(v.starts_with('[') && v.ends_with(']')) {
        return Err(err(line, column, format!("expected a bracketed list, found '{value}'")));
    }
    let mut out = Vec::new();
    let mut current: Option<Vec<(String, usize)>> = None;
    let mut field = String::new();
    let mut field_col = column;
    for (i, ch) in v.char_indices().skip(1).take(v.len().saturating_sub(2)) {
        let col = column + v[..i].chars().count();
        match (ch, current.as_mut()) {
            ('(', None) => {
                current = Some(Vec::new());
                field.clear();
                field_col = col + 1;
            }
            (')', Some(cur)) => {
                cur.push((std::mem::take(&mut field), field_col));
                out.push(current.take().unwrap());
            }
            (',', Some(cur)) => {
                cur.push((std::mem::take(&mut field), field_col));
                field_col = col + 1;
            }
            (',', None) | (' ', None) => {}
            (c, Some(_)) => {
                if field.trim().is_empty() && c == ' ' {
                    field_col = col + 1;
                } else {
                    field.push(c);
                }
            }
            (c, None) => return Err(err(line, col, format!("unexpected '{c}' in list"))),
        }
    }
    if current.is_some() {
        return Err(err(line, column, "unterminated tuple"));
    }
    Ok(out)
}

fn ap_list(value: &str, line: usize, column: usize) -> Result<Vec<ApTerm>> {
    tuples(value, line, column)?
        .into_iter()
        .map(|t| {
            if t.len() != 2 {
                return Err(err(line, t.first().map_or(column, |f| f.1), "AP term needs (coeff,delay)"));
            }
            let c = parse_complex(&t[0].0).ok_or_else(|| err(line, t[0].1, format!("malformed number '{}'", t[0].0)))?;
            let d = real(&t[1].0, line, t[1].1)?;
            Ok(ApTerm::new(c, d))
        })
        .collect()
}

fn atom_list(value: &str, line: usize, column: usize) -> Result<Vec<FourierAtom>> {
    tuples(value, line, column)?
        .into_iter()
        .map(|t| {
            if t.len() != 5 {
                return Err(err(
                    line,
                    t.first().map_or(column, |f| f.1),
                    "atom needs (coeff,delay,rate,power,side)",
                ));
            }
            let num = |k: usize| {
                parse_complex(&t[k].0).ok_or_else(|| err(line, t[k].1, format!("malformed number '{}'", t[k].0)))
            };
            let c = num(0)?;
            let delay = real(&t[1].0, line, t[1].1)?;
            let rate = num(2)?;
            let power = t[3]
                .0
                .trim()
                .parse::<u32>()
                .map_err(|_| err(line, t[3].1, format!("malformed power '{}'", t[3].0)))?;
            let side = match t[4].0.trim() {
                "causal" => Side::Causal,
                "anticausal" => Side::Anticausal,
                s => return Err(err(line, t[4].1, format!("unknown side '{s}'"))),
            };
            FourierAtom::new(c, delay, rate, power, side).map_err(|e| err(line, t[2].1, e.to_string()))
        })
        .collect()
}

/// Parses an element written as `ap=[...] atoms=[...]` (either part optional).
pub fn parse_element(text: &str) -> Result<AElement> {
    let mut ap = Vec::new();
    let mut atoms = Vec::new();
    for tok in tokenize(text.trim(), 1)? {
        match tok.key {
            "ap" => ap = ap_list(tok.value, 1, tok.value_column)?,
            "atoms" => atoms = atom_list(tok.value, 1, tok.value_column)?,
            k => return Err(err(1, tok.column, format!("unknown key '{k}'"))),
        }
    }
    Ok(AElement::new(ap, atoms))
}

/// Syntax-only parse of one line; see [`parse_spec`] for the validated form.
pub fn parse_line(text: &str, line: usize) -> Result<PlantSpec> {
    let tokens = tokenize(text, line)?;
    let find = |key: &str| tokens.iter().find(|t| t.key == key);
    let kind_tok = find("kind").ok_or_else(|| err(line, 1, "missing kind="))?;
    let label = find("label").map_or(String::new(), |t| t.value.to_string());
    let allowed: &[&str] = match kind_tok.value {
        "gain_delay" => &["kind", "label", "k", "tau"],
        "first_order" => &["kind", "label", "a", "b"],
        "explicit" => &[
            "kind", "label", "n.ap", "n.atoms", "d.ap", "d.atoms", "x.ap", "x.atoms", "y.ap", "y.atoms",
        ],
        other => {
            return Err(err(line, kind_tok.value_column, format!("unknown kind '{other}'")));
        }
    };
    for t in &tokens {
        if !allowed.contains(&t.key) {
            return Err(err(line, t.column, format!("unknown key '{}'", t.key)));
        }
    }
    let number = |key: &str, default: Option<f64>| -> Result<f64> {
        match find(key) {
            Some(t) => real(t.value, line, t.value_column),
            None => default.ok_or_else(|| err(line, text.chars().count() + 1, format!("missing {key}="))),
        }
    };
    let kind = match kind_tok.value {
        "gain_delay" => PlantKind::GainDelay {
            k: number("k", None)?,
            tau: number("tau", Some(0.0))?,
        },
        "first_order" => PlantKind::FirstOrder {
            a: number("a", None)?,
            b: number("b", None)?,
        },
        _ => {
            let factor = |f: &str| -> Result<Option<AElement>> {
                let ap_key = format!("{f}.ap");
                let atoms_key = format!("{f}.atoms");
                let ap = find(&ap_key);
                let atoms = find(&atoms_key);
                if ap.is_none() && atoms.is_none() {
                    return Ok(None);
                }
                let ap = match ap {
                    Some(t) => ap_list(t.value, line, t.value_column)?,
                    None => Vec::new(),
                };
                let atoms = match atoms {
                    Some(t) => atom_list(t.value, line, t.value_column)?,
                    None => Vec::new(),
                };
                Ok(Some(AElement::new(ap, atoms)))
            };
            let n = factor("n")?.unwrap_or_else(AElement::zero);
            let d = factor("d")?.ok_or_else(|| err(line, kind_tok.column, "explicit plant needs d.ap or d.atoms"))?;
            let bezout = match (factor("x")?, factor("y")?) {
                (None, None) => None,
                (x, y) => Some((x.unwrap_or_else(AElement::zero), y.unwrap_or_else(AElement::zero))),
            };
            PlantKind::Explicit { n, d, bezout }
        }
    };
    Ok(PlantSpec { label, kind })
}

fn is_content(line: &str) -> bool {
    let t = line.trim();
    !t.is_empty() && !t.starts_with('#')
}

/// All plant lines of a text (blank lines and `#` comments skipped), syntax only.
pub fn parse_lines(text: &str) -> Result<Vec<PlantSpec>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| is_content(l))
        .map(|(i, l)| parse_line(l, i + 1))
        .collect()
}

/// Parses and validates a single plant description.
pub fn parse_spec(text: &str) -> Result<PlantSpec> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| is_content(l));
    let Some((i, l)) = lines.next() else {
        return Err(err(1, 1, "empty plant description"));
    };
    if let Some((j, _)) = lines.next() {
        return Err(err(j + 1, 1, "expected a single plant description"));
    }
    let spec = parse_line(l, i + 1)?;
    validate(&spec, i + 1)?;
    Ok(spec)
}

/// Maps construction and normalization failures to located diagnostics.
pub(crate) fn validate(spec: &PlantSpec, line: usize) -> Result<Plant> {
    spec.build().map_err(|e| match e {
        Error::Normalization { deviation } => err(
            line,
            1,
            format!("factorization is not normalized: max deviation {deviation:.3e}"),
        ),
        other => err(line, 1, other.to_string()),
    })
}

fn render_complex(z: Complex64) -> String {
    if z.im == 0.0 && !z.im.is_sign_negative() {
        format!("{}", z.re)
    } else if z.im.is_sign_negative() {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

pub fn render_element_lists(e: &AElement) -> (String, String) {
    let ap: Vec<String> = e
        .ap()
        .iter()
        .map(|t| format!("({},{})", render_complex(t.coeff), t.delay))
        .collect();
    let atoms: Vec<String> = e
        .atoms()
        .iter()
        .map(|a| {
            format!(
                "({},{},{},{},{})",
                render_complex(a.coeff),
                a.delay,
                render_complex(a.rate),
                a.power,
                a.side
            )
        })
        .collect();
    (format!("[{}]", ap.join(",")), format!("[{}]", atoms.join(",")))
}

pub fn render_element(e: &AElement) -> String {
    let (ap, atoms) = render_element_lists(e);
    format!("ap={ap} atoms={atoms}")
}

/// Inverse of [`parse_line`].
pub fn render(spec: &PlantSpec) -> String {
    let mut out = match &spec.kind {
        PlantKind::GainDelay { k, tau } => format!("kind=gain_delay k={k} tau={tau}"),
        PlantKind::FirstOrder { a, b } => format!("kind=first_order a={a} b={b}"),
        PlantKind::Explicit { n, d, bezout } => {
            let mut s = String::from("kind=explicit");
            let mut factor = |name: &str, e: &AElement| {
                let (ap, atoms) = render_element_lists(e);
                let _ = write!(s, " {name}.ap={ap} {name}.atoms={atoms}");
            };
            factor("n", n);
            factor("d", d);
            if let Some((x, y)) = bezout {
                factor("x", x);
                factor("y", y);
            }
            s
        }
    };
    if !spec.label.is_empty() {
        let _ = write!(out, " label={}", spec.label);
    }
    out
}
