use std::process::{Command, Output};

const P1: &str = "kind=explicit n.ap=[(0.8,1)] d.ap=[(0.6,0)] x.ap=[] y.ap=[(1.6666666666666667,0)] label=P1";
const P2: &str = "kind=explicit n.ap=[(0.8,1)] d.ap=[(-0.6,0)] x.ap=[] y.ap=[(-1.6666666666666667,0)] label=P2";

fn nugap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nugap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn row(o: &Output) -> Vec<String> {
    stdout(o).lines().nth(1).unwrap().split(',').map(String::from).collect()
}

#[test]
fn dist_on_the_mirrored_pair() {
    let o = nugap(&["dist", P1, P2]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().next().unwrap(), "metric,value,branch,margin,index_wav,index_w,error_bound");
    let r = row(&o);
    assert_eq!(&r[..3], ["aplus", "0.96", "finite"]);

    let o = nugap(&["dist", P1, P2, "--metric", "hinf"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(&row(&o)[..3], ["hinf", "1", "unity"]);

    let o = nugap(&["dist", P1, P2, "--metric", "hinf_rho:0.9"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(row(&o)[1], "1");
}

#[test]
fn dist_reads_spec_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("p1.spec");
    let b = dir.path().join("p2.spec");
    std::fs::write(&a, format!("# first plant\n{P1}\n")).unwrap();
    std::fs::write(&b, format!("\n{P2}\n")).unwrap();
    let o = nugap(&["dist", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(row(&o)[1], "0.96");
}

#[test]
fn gap_of_identical_plants_is_zero() {
    let p = "kind=first_order a=1 b=2";
    let o = nugap(&["dist", p, p, "--metric", "gap", "--controllers", "kind=gain_delay k=-0.5 tau=0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let lo = out.lines().find(|l| l.starts_with("gap_lo,")).unwrap();
    let hi = out.lines().find(|l| l.starts_with("gap_hi,")).unwrap();
    assert!(lo.starts_with("gap_lo,0,"), "{lo}");
    assert!(hi.starts_with("gap_hi,0,"), "{hi}");
}

#[test]
fn exit_codes() {
    let o = nugap(&["dist", "kind=gain_delay k=abc", "kind=gain_delay k=1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 1, column 19"), "{}", stderr(&o));

    let o = nugap(&["dist", "/nonexistent/plant.spec", "kind=gain_delay k=1"]);
    assert_eq!(o.status.code(), Some(1));

    let o = nugap(&["dist", "kind=explicit n.ap=[(1,0)] d.ap=[(1,0)]", "kind=gain_delay k=1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("not normalized"), "{}", stderr(&o));

    let o = nugap(&["winding", "ap=[(1,0)] atoms=[(-0.999999,0,1,0,causal)]"]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));

    let o = nugap(&["verify-ncf", "kind=explicit n.ap=[(1,0)] d.ap=[(1,0)]"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("false"));

    assert_eq!(nugap(&["verify-ncf", "kind=first_order a=0 b=1"]).status.code(), Some(0));
    assert_eq!(nugap(&["--help"]).status.code(), Some(0));
    assert_eq!(nugap(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn winding_reports_the_index() {
    let o = nugap(&["winding", "ap=[(1,0)] atoms=[(-1.5,0,1,0,causal)]"]);
    assert_eq!(o.status.code(), Some(0));
    let r = row(&o);
    assert_eq!(&r[..4], ["true", "0.5", "0", "-1"]);
    let o = nugap(&["winding", "ap=[(1,2)]"]);
    assert_eq!(&row(&o)[2..4], ["-2", "0"]);
}

#[test]
fn margin_lists_each_controller() {
    let o = nugap(&["margin", "kind=first_order a=-1 b=2", "--controllers", "kind=gain_delay k=-1 tau=0;kind=gain_delay k=0 tau=0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "controller,mu,stabilizing,sigma_sup,margin,index_wav,index_w");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].contains(",true,"), "{}", lines[1]);
    assert!(lines[2].contains(",0,false,"), "{}", lines[2]);
}

#[test]
fn verify_example_passes() {
    let o = nugap(&["verify-example"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("0.8,0.96,"), "{out}");
    assert!(out.contains("0.9,0.784601809837,"), "{out}");
}

#[test]
fn r_sweep_matches_the_closed_form_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let o = nugap(&["sweep", "--param", "r", "--start", "0.75", "--stop", "0.9", "--count", "4", "--out", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.as_bytes(), std::fs::read(&b).unwrap().as_slice());
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "d_aplus").unwrap();
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 4);
    for (row, r) in rows.iter().zip([0.75, 0.8, 0.85, 0.9]) {
        assert!((row[0] - r).abs() < 1e-12);
        assert!((row[col] - 2.0 * r * (1.0 - r * r).sqrt()).abs() < 1e-6, "{row:?}");
    }
}

#[test]
fn b_sweep_metrics_agree() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.csv");
    let o = nugap(&["sweep", "--param", "b", "--start", "0.5", "--stop", "3", "--count", "6", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let ca = header.iter().position(|h| *h == "d_aplus").unwrap();
    let ch = header.iter().position(|h| *h == "d_hinf").unwrap();
    for l in lines {
        let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[ca] - v[ch]).abs() < 2e-3, "{l}");
    }
}

#[test]
fn degenerate_sweeps_are_rejected() {
    let o = nugap(&["sweep", "--param", "r", "--start", "0.8", "--stop", "0.8", "--count", "2", "--out", "unused.csv"]);
    assert_eq!(o.status.code(), Some(1));
    let o = nugap(&["sweep", "--param", "r", "--start", "0.7", "--stop", "0.8", "--count", "1", "--out", "unused.csv"]);
    assert_eq!(o.status.code(), Some(1));
}
