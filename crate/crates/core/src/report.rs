//! CSV formatting with a fixed header and 12 significant digits.

use crate::metrics::MetricResult;

pub const METRIC_HEADER: &str = "metric,value,branch,margin,index_wav,index_w,error_bound";

/// `x` with 12 significant digits, trailing zeros trimmed; scientific
/// notation outside `[1e-5, 1e12)`.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim(&format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim(mantissa), exp)
    }
}

fn trim(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn metric_row(metric: &str, r: &MetricResult) -> String {
    let d = &r.diagnostics;
    let index_w = d
        .index
        .map(|w| w.w)
        .or(d.annulus_winding)
        .map(|w| w.to_string())
        .unwrap_or_default();
    format!(
        "{metric},{},{},{},{},{},{}",
        num(r.value),
        r.branch,
        opt(d.margin),
        opt(d.index.map(|w| w.w_av)),
        index_w,
        num(d.error_bound)
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(num(0.96), "0.96");
        assert_eq!(num(1.0), "1");
        assert_eq!(num(2.0 * 0.9 * 0.19f64.sqrt()), "0.784601809837");
        assert_eq!(num(-1.0 / 3.0), "-0.333333333333");
        assert_eq!(num(1.5e-9), "1.5e-9");
        assert_eq!(num(123456.0), "123456");
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(num(0.27999999999999997), "0.28");
    }
}
