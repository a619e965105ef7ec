//! Command-line front end. Exit codes: 0 success, 1 input error,
//! 2 inconclusive certificate, 3 assertion failure.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::algebra::{index_w, is_invertible, FrequencyGrid, Invertibility};
use crate::metrics::{d_aplus, d_hinf, d_hinf_rho, gap_bounds, MetricResult, DEFAULT_TOL};
use crate::plant_spec::{parse_element, parse_lines, validate};
use crate::plants::{mirrored_gain_delay, verify_ncf, Plant};
use crate::report::{metric_row, num, METRIC_HEADER};
use crate::stability::{equivalence_report, mu, UnitStatus};
use crate::Error;

#[derive(Debug, Parser)]
#[command(name = "nugap", version, about = "Distances and stability margins for delay systems")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Distance between two plants, as one CSV row
    Dist {
        /// Plant description (inline `kind=...` line or a file path)
        plant1: String,
        plant2: String,
        /// aplus | hinf | hinf_rho:<rho> | gap
        #[arg(long, default_value = "aplus")]
        metric: String,
        /// Annulus radius for `--metric hinf_rho`
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Controllers for the gap bound (file or `;`-separated lines); default C = 0
        #[arg(long)]
        controllers: Option<String>,
    },
    /// Stability margin of a plant for each controller
    Margin {
        plant: String,
        #[arg(long)]
        controllers: Option<String>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Metrics over a one-parameter family of plant pairs, written as CSV
    Sweep {
        /// `r`: N = r·e^{-s}, D = ±√(1-r²); `b`: b/(s+1) against 1/(s+1)
        #[arg(long)]
        param: String,
        #[arg(long)]
        start: f64,
        #[arg(long)]
        stop: f64,
        #[arg(long)]
        count: usize,
        /// Comma-separated metrics
        #[arg(long, default_value = "aplus,hinf")]
        metric: String,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        controllers: Option<String>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Invertibility and index pair of an element `ap=[...] atoms=[...]`
    Winding {
        element: String,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Reproduces the mirrored gain-delay example at r = 0.8 and r = 0.9
    VerifyExample {
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Checks the normalization and Bezout identities of a factorization
    VerifyNcf { plant: String },
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Inconclusive(String),
    Assertion(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => 1,
            Failure::Inconclusive(_) => 2,
            Failure::Assertion(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Inconclusive(m) | Failure::Assertion(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Inconclusive { .. } | Error::IndexResolution { .. } => Failure::Inconclusive(e.to_string()),
            Error::Numerical(_) => Failure::Assertion(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "nugap: {}", f.message());
            f.code()
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Outcome {
    match cmd {
        Command::Dist {
            plant1,
            plant2,
            metric,
            rho,
            tol,
            controllers,
        } => cmd_dist(&plant1, &plant2, &metric, rho, tol, controllers.as_deref(), out),
        Command::Margin { plant, controllers, tol } => cmd_margin(&plant, controllers.as_deref(), tol, out),
        Command::Sweep {
            param,
            start,
            stop,
            count,
            metric,
            rho,
            out: path,
            controllers,
            tol,
        } => {
            let controllers = load_controllers(controllers.as_deref())?;
            let metrics = metric
                .split(',')
                .map(|m| parse_metric(m.trim(), rho))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let config = SweepConfig::new(&param, start, stop, count, metrics, path, controllers)?;
            cmd_sweep(&config, tol)
        }
        Command::Winding { element, tol } => cmd_winding(&element, tol, out),
        Command::VerifyExample { tol } => cmd_verify_example(tol, out),
        Command::VerifyNcf { plant } => cmd_verify_ncf(&plant, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Outcome {
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::Input(format!("cannot write output: {e}")))
}

/// Inline descriptions contain `=`; anything else is read as a file path.
fn load_text(arg: &str) -> std::result::Result<String, Failure> {
    if arg.contains('=') {
        Ok(arg.replace(';', "\n"))
    } else {
        std::fs::read_to_string(arg).map_err(|e| Failure::Input(format!("cannot read {arg}: {e}")))
    }
}

fn load_plants(arg: &str) -> std::result::Result<Vec<Plant>, Failure> {
    let text = load_text(arg)?;
    let specs = parse_lines(&text)?;
    let lines: Vec<usize> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim().starts_with('#'))
        .map(|(i, _)| i + 1)
        .collect();
    let plants = specs
        .iter()
        .zip(lines)
        .map(|(s, line)| validate(s, line))
        .collect::<crate::Result<Vec<_>>>()?;
    if plants.is_empty() {
        return Err(Failure::Input(format!("no plant description in {arg}")));
    }
    Ok(plants)
}

fn load_plant(arg: &str) -> std::result::Result<Plant, Failure> {
    let mut plants = load_plants(arg)?;
    if plants.len() != 1 {
        return Err(Failure::Input(format!("expected one plant in {arg}, found {}", plants.len())));
    }
    Ok(plants.remove(0))
}

fn load_controllers(arg: Option<&str>) -> std::result::Result<Vec<Plant>, Failure> {
    match arg {
        Some(a) => load_plants(a),
        None => Ok(vec![Plant::zero_controller()]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricKind {
    Aplus,
    Hinf,
    HinfRho(f64),
    Gap,
}

fn parse_metric(s: &str, rho: Option<f64>) -> std::result::Result<MetricKind, Failure> {
    let bad = || Failure::Input(format!("unknown metric '{s}' (aplus, hinf, hinf_rho:<rho>, gap)"));
    match s {
        "aplus" => Ok(MetricKind::Aplus),
        "hinf" => Ok(MetricKind::Hinf),
        "gap" => Ok(MetricKind::Gap),
        "hinf_rho" => rho
            .map(MetricKind::HinfRho)
            .ok_or_else(|| Failure::Input("hinf_rho needs --rho or hinf_rho:<rho>".into())),
        _ => {
            let r = s.strip_prefix("hinf_rho:").ok_or_else(bad)?;
            let r: f64 = r.parse().map_err(|_| bad())?;
            Ok(MetricKind::HinfRho(r))
        }
    }
}

fn check_conclusive(r: &MetricResult) -> Outcome {
    if r.is_inconclusive() {
        let flags: Vec<String> = r.diagnostics.flags.iter().map(|f| f.to_string()).collect();
        Err(Failure::Inconclusive(format!("certificate inconclusive ({})", flags.join(" "))))
    } else {
        Ok(())
    }
}

fn cmd_dist(
    a: &str,
    b: &str,
    metric: &str,
    rho: Option<f64>,
    tol: f64,
    controllers: Option<&str>,
    out: &mut dyn Write,
) -> Outcome {
    let p1 = load_plant(a)?;
    let p2 = load_plant(b)?;
    let kind = parse_metric(metric, rho)?;
    let mut text = format!("{METRIC_HEADER}\n");
    match kind {
        MetricKind::Aplus | MetricKind::Hinf | MetricKind::HinfRho(_) => {
            let (name, r) = match kind {
                MetricKind::Aplus => ("aplus".to_string(), d_aplus(&p1, &p2, tol)),
                MetricKind::Hinf => ("hinf".to_string(), d_hinf(&p1, &p2, tol)?),
                MetricKind::HinfRho(rho) => (format!("hinf_rho:{rho}"), d_hinf_rho(&p1, &p2, rho, tol)?),
                MetricKind::Gap => unreachable!(),
            };
            writeln!(text, "{}", metric_row(&name, &r)).unwrap();
            emit(out, &text)?;
            check_conclusive(&r)
        }
        MetricKind::Gap => {
            let cs = load_controllers(controllers)?;
            let iv = gap_bounds(&p1, &p2, &cs, tol);
            writeln!(text, "{}", metric_row("gap_lo", &iv.lower)).unwrap();
            writeln!(text, "gap_hi,{},bound,,,,0", num(iv.hi)).unwrap();
            emit(out, &text)?;
            if !iv.consistent(tol) {
                return Err(Failure::Assertion(format!("gap interval inverted: {} > {}", iv.lo, iv.hi)));
            }
            check_conclusive(&iv.lower)
        }
    }
}

fn cmd_margin(plant: &str, controllers: Option<&str>, tol: f64, out: &mut dyn Write) -> Outcome {
    let p = load_plant(plant)?;
    let cs = load_controllers(controllers)?;
    let mut text = String::from("controller,mu,stabilizing,sigma_sup,margin,index_wav,index_w\n");
    let mut inconclusive = false;
    for c in &cs {
        let m = mu(&p, c, tol);
        inconclusive |= m.certificate.status == UnitStatus::Inconclusive;
        let idx = m.certificate.index;
        writeln!(
            text,
            "{},{},{},{},{},{},{}",
            c.label,
            num(m.mu),
            m.stabilizing(),
            num(m.sigma_sup),
            num(m.certificate.margin),
            idx.map(|w| num(w.w_av)).unwrap_or_default(),
            idx.map(|w| w.w.to_string()).unwrap_or_default()
        )
        .unwrap();
    }
    emit(out, &text)?;
    if inconclusive {
        return Err(Failure::Inconclusive("a closed-loop certificate is inconclusive".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// Mirrored gain-delay pair `N = r·e^{-s}`, `D = ±√(1−r²)`.
    R,
    /// `b/(s+1)` against `1/(s+1)`.
    B,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub param: SweepParam,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub metrics: Vec<MetricKind>,
    pub out: PathBuf,
    pub controllers: Vec<Plant>,
}

impl SweepConfig {
    fn new(
        param: &str,
        start: f64,
        stop: f64,
        count: usize,
        metrics: Vec<MetricKind>,
        out: PathBuf,
        controllers: Vec<Plant>,
    ) -> std::result::Result<Self, Failure> {
        let param = match param {
            "r" => SweepParam::R,
            "b" => SweepParam::B,
            p => return Err(Failure::Input(format!("unknown sweep parameter '{p}' (r or b)"))),
        };
        if count < 2 {
            return Err(Failure::Input(format!("sweep needs count >= 2, got {count}")));
        }
        if !(start < stop) {
            return Err(Failure::Input(format!("sweep needs start < stop, got {start} and {stop}")));
        }
        Ok(Self {
            param,
            start,
            stop,
            count,
            metrics,
            out,
            controllers,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count)
            .map(|i| self.start + (self.stop - self.start) * i as f64 / (self.count - 1) as f64)
            .collect()
    }

    fn pair(&self, v: f64) -> crate::Result<(Plant, Plant)> {
        match self.param {
            SweepParam::R => mirrored_gain_delay(v, 1.0),
            SweepParam::B => Ok((Plant::first_order(1.0, 1.0)?, Plant::first_order(1.0, v)?)),
        }
    }

    fn header(&self) -> String {
        let mut cols = vec![match self.param {
            SweepParam::R => "r".to_string(),
            SweepParam::B => "b".to_string(),
        }];
        for m in &self.metrics {
            match m {
                MetricKind::Aplus => cols.push("d_aplus".into()),
                MetricKind::Hinf => cols.push("d_hinf".into()),
                MetricKind::HinfRho(r) => cols.push(format!("d_hinf_rho_{r}")),
                MetricKind::Gap => cols.extend(["gap_lo".to_string(), "gap_hi".to_string()]),
            }
        }
        cols.extend(["mu_lb", "chain_lower_slack", "chain_upper_slack"].map(String::from));
        cols.join(",")
    }
}

fn sweep_row(config: &SweepConfig, v: f64, tol: f64) -> crate::Result<String> {
    let (p1, p2) = config.pair(v)?;
    let rep = equivalence_report(&p1, &p2, &config.controllers, tol)?;
    let mut cols = vec![num(v)];
    for m in &config.metrics {
        match *m {
            MetricKind::Aplus => cols.push(num(rep.d_aplus.value)),
            MetricKind::Hinf => cols.push(num(rep.d_hinf.value)),
            MetricKind::HinfRho(r) => cols.push(num(d_hinf_rho(&p1, &p2, r, tol)?.value)),
            MetricKind::Gap => {
                cols.push(num(rep.gap.lo));
                cols.push(num(rep.gap.hi));
            }
        }
    }
    cols.push(num(rep.mu_lb));
    cols.push(num(rep.lower_slack));
    cols.push(rep.upper_slack.map(num).unwrap_or_default());
    Ok(cols.join(","))
}

fn write_file(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}

fn cmd_sweep(config: &SweepConfig, tol: f64) -> Outcome {
    let rows: Vec<crate::Result<String>> = config.values().par_iter().map(|&v| sweep_row(config, v, tol)).collect();
    let mut text = format!("{}\n", config.header());
    for row in rows {
        text.push_str(&row?);
        text.push('\n');
    }
    write_file(&config.out, &text)
}

fn cmd_winding(element: &str, tol: f64, out: &mut dyn Write) -> Outcome {
    let f = parse_element(element)?;
    let mut text = String::from("invertible,margin,index_wav,index_w,w_distance,witness\n");
    match is_invertible(&f, tol) {
        Invertibility::NotInvertible { witness, modulus } => {
            writeln!(text, "false,{},,,,{}", num(modulus), num(witness)).unwrap();
            emit(out, &text)
        }
        Invertibility::Inconclusive { margin, band } => {
            writeln!(text, "inconclusive,{},,,,", num(margin)).unwrap();
            emit(out, &text)?;
            Err(Error::Inconclusive { margin, band }.into())
        }
        Invertibility::Invertible { margin, .. } => {
            let w = index_w(&f, tol)?;
            writeln!(
                text,
                "true,{},{},{},{},",
                num(margin),
                num(w.w_av),
                w.w,
                num(w.w_distance)
            )
            .unwrap();
            emit(out, &text)
        }
    }
}

fn cmd_verify_example(tol: f64, out: &mut dyn Write) -> Outcome {
    let mut text = String::from("r,d_aplus,expected,d_hinf,mu_p1_c0,status\n");
    let mut failures = Vec::new();
    for r in [0.8, 0.9] {
        let (p1, p2) = mirrored_gain_delay(r, 1.0)?;
        let da = d_aplus(&p1, &p2, tol);
        let dh = d_hinf(&p1, &p2, tol)?;
        let m = mu(&p1, &Plant::zero_controller(), tol).mu;
        let expected = 2.0 * r * (1.0 - r * r).sqrt();
        let mut ok = true;
        if (da.value - expected).abs() > 1e-6 {
            failures.push(format!("d_aplus(r={r}) = {} differs from {}", da.value, expected));
            ok = false;
        }
        if dh.value != 1.0 {
            failures.push(format!("d_hinf(r={r}) = {} is not 1", dh.value));
            ok = false;
        }
        writeln!(
            text,
            "{},{},{},{},{},{}",
            num(r),
            num(da.value),
            num(expected),
            num(dh.value),
            num(m),
            if ok { "ok" } else { "FAIL" }
        )
        .unwrap();
    }
    emit(out, &text)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Assertion(failures.join("; ")))
    }
}

fn cmd_verify_ncf(plant: &str, out: &mut dyn Write) -> Outcome {
    let text = load_text(plant)?;
    let specs = parse_lines(&text)?;
    let [spec] = specs.as_slice() else {
        return Err(Failure::Input(format!("expected one plant, found {}", specs.len())));
    };
    let rep = verify_ncf(&spec.pair()?, &FrequencyGrid::standard());
    emit(
        out,
        &format!(
            "normalization_deviation,bezout_deviation,passed\n{},{},{}\n",
            num(rep.normalization),
            rep.bezout.map(num).unwrap_or_default(),
            rep.passed
        ),
    )?;
    if rep.passed {
        Ok(())
    } else {
        Err(Failure::Assertion(format!(
            "factorization identities fail: max deviation {}",
            num(rep.max_deviation())
        )))
    }
}
