use std::io::Write as _;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rollsphere"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_file(path: &Path, content: &str) {
    let mut f = std::fs::File::create(path).unwrap();
    f.write_all(content.as_bytes()).unwrap();
}

const REFERENCE_CFG: &str = "r = 1\nrho = 0.3\nh = 0.75\nw = 0.8\nj_ratio = 5\n";

#[test]
fn simulate_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.cfg");
    write_file(&cfg, REFERENCE_CFG);
    let out1 = dir.path().join("a.csv");
    let out2 = dir.path().join("b.csv");
    for out in [&out1, &out2] {
        let res = run(&[
            "simulate",
            "--params",
            cfg.to_str().unwrap(),
            "--u1",
            "1",
            "--u2",
            "1",
            "--T",
            "5",
            "--dt",
            "0.001",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
        assert!(stdout(&res).contains("c = 0.031249999999999993"));
    }
    let a = std::fs::read(&out1).unwrap();
    assert_eq!(a, std::fs::read(&out2).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("t,phi1,phi2,R00"));
    assert_eq!(text.lines().count(), 5002);
}

#[test]
fn holonomy_rect_xy_prints_closed_form() {
    // At (7pi, 6pi) the area rule gives (-5.00101966, -0.24568434); the
    // numeric cross-check agrees.
    let res = run(&[
        "holonomy", "rect-xy", "--alpha", "7pi", "--beta", "6pi", "--numeric", "1e-3",
    ]);
    assert!(res.status.success());
    let text = stdout(&res);
    assert!(text.contains("(-5.00101966, -0.24568434)"), "stdout: {text}");
    assert!(text.contains("closed vs numeric"));
    // The worked-example angles reproduce the reported displacement.
    let res = run(&["holonomy", "rect-xy", "--alpha", "2pi", "--beta", "1.5pi"]);
    assert!(res.status.success());
    assert!(stdout(&res).contains("(-0.36907092, -0.00906018)"));
}

#[test]
fn holonomy_rect_diag_reports_rotation() {
    let res = run(&[
        "holonomy", "rect-diag", "--alpha", "pi", "--beta", "1.5pi", "--numeric", "1e-3",
    ]);
    assert!(res.status.success());
    let text = stdout(&res);
    assert!(text.contains("rotational holonomy (closed form)"));
    assert!(text.contains("axis-angle"));
    assert!(text.contains("closed vs numeric (rotation, Frobenius)"));
}

#[test]
fn controllability_summary() {
    let res = run(&["controllability", "--grid", "40"]);
    assert!(res.status.success());
    let text = stdout(&res);
    assert!(text.contains("fiber controllable everywhere: true"));
    assert!(text.contains("grid: 40 x 40"));
}

#[test]
fn ocp_trivial_and_exact_bypass() {
    let res = run(&[
        "ocp", "--xt", "0,0", "--phit", "0,0", "--T", "2", "--dt", "1e-2", "--restarts", "2",
        "--exact",
    ]);
    assert!(res.status.success());
    let text = stdout(&res);
    assert!(text.contains("boundary residual"));
    assert!(text.contains("cost: 0"));
    // H = 0 on the resting extremal: theta is undefined, the closed form
    // is bypassed with an explanation instead of failing the command.
    assert!(text.contains("exact route: not applicable"), "stdout: {text}");
}

#[test]
fn ocp_exact_route_on_branch_valid_instance() {
    // Boundary data forward-generated from costates (0.3, -0.1, 20, -15)
    // at T = 2, dt = 2e-3; the solved extremal satisfies A < E.
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sol.csv");
    let res = run(&[
        "ocp",
        "--xt",
        "-3.86194267496770272e-2,-2.26190984600614131e0",
        "--phit",
        "-6.69995223816975383e0,-4.61345556727335193e0",
        "--T",
        "2",
        "--dt",
        "2e-3",
        "--restarts",
        "0",
        "--guess",
        "0.5,0.2,18,-13",
        "--exact",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    let text = stdout(&res);
    assert!(text.contains("exact closed form applicable: true"), "stdout: {text}");
    assert!(text.contains("exact route: max deviation"));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("t,phi1,phi2,R00"));
    assert!(csv.lines().next().unwrap().ends_with("gamma1,gamma2,p1,p2"));
    assert_eq!(csv.lines().count(), 1002);
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let res = run(&["frobnicate"]);
    assert_eq!(res.status.code(), Some(2));
    let res = run(&["simulate", "--no-such-flag"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn domain_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    write_file(&cfg, "r = 1\nrho = 0.3\nw = 0.8\nj_ratio = 5\n");
    let res = run(&[
        "simulate", "--params", cfg.to_str().unwrap(), "--u1", "1", "--u2", "1", "--T", "1",
    ]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains('h'), "stderr: {err}");
    // Invalid step is a domain error, not a panic.
    let res = run(&["simulate", "--u1", "1", "--u2", "1", "--T", "1", "--dt", "0"]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn seed_changes_restart_stream_deterministically() {
    // Identical seeds give byte-identical reports; the solved extremal is
    // the same across seeds here (same deduped minimum), so determinism is
    // checked on the full stdout.
    let args = [
        "ocp", "--xt", "0,0", "--phit", "0,0", "--T", "2", "--dt", "1e-2", "--restarts", "3",
        "--seed", "7",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
}
