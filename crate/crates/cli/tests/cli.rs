use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entropy-order"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

/// Data rows of a CSV written by the tool (metadata and header stripped).
fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn ideal_gas_axioms_pass() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&["check-axioms"], &data("ideal_gas.toml"), out.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report = rows(&out.path().join("report.csv"));
    assert!(report.iter().all(|r| r[1] == "pass"), "{report:?}");
}

#[test]
fn planted_transitivity_hole_fails_with_witness() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&["check-axioms", "--raw"], &data("hole.rel"), out.path());
    assert_eq!(code(&o), 1);
    let report = rows(&out.path().join("report.csv"));
    let a2 = report.iter().find(|r| r[0] == "A2").unwrap();
    assert_eq!(a2[1], "fail");
    assert!(a2[2].contains("1*A ≺ 1*B ≺ 1*C"), "{a2:?}");
}

#[test]
fn closed_two_state_chain_passes() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["check-axioms"], &data("chain.rel"), out.path())), 0);
}

#[test]
fn usage_errors_exit_two() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["check-axioms"], Path::new("/no/such/file.rel"), out.path())), 2);
    let bad = out.path().join("bad.rel");
    fs::write(&bad, "1*A -> 1*B\n1*A 1*B\n").unwrap();
    let o = run(&["check-axioms"], &bad, out.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    let bad = out.path().join("bad.toml");
    fs::write(&bad, "[system.g]\nkind = \n").unwrap();
    assert_eq!(code(&run(&["adiabat"], &bad, out.path())), 2);
    assert_eq!(code(&run(&["check-axioms", "--tol", "-1"], &data("chain.rel"), out.path())), 2);
    assert_eq!(code(&run(&["split"], &data("chain.rel"), out.path())), 2);
}

#[test]
fn metadata_header() {
    let out = tempfile::tempdir().unwrap();
    let cfg = data("ideal_gas.toml");
    assert_eq!(code(&run(&["adiabat", "--seed", "42"], &cfg, out.path())), 0);
    let text = fs::read_to_string(out.path().join("adiabat.csv")).unwrap();
    let hash = hex::encode(Sha256::digest(fs::read(&cfg).unwrap()));
    let head: Vec<&str> = text.lines().take_while(|l| l.starts_with('#')).collect();
    assert!(head[0].contains(env!("CARGO_PKG_VERSION")));
    assert!(head.contains(&format!("# config-sha256 {hash}").as_str()));
    assert!(head.contains(&"# seed 42"));
}

#[test]
fn report_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = data("ideal_gas.toml");
    assert_eq!(code(&run(&["report", "--seed", "7"], &cfg, a.path())), 0);
    assert_eq!(code(&run(&["report", "--seed", "7"], &cfg, b.path())), 0);
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 10);
    for n in names {
        assert_eq!(fs::read(a.path().join(&n)).unwrap(), fs::read(b.path().join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn adiabat_reaches_closed_form() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["adiabat"], &data("ideal_gas.toml"), out.path())), 0);
    let r = rows(&out.path().join("adiabat.csv"));
    let last = r.last().unwrap();
    assert_eq!(num(&last[0]), 8.0);
    // u = V^(-2/3) through (1, 1)
    assert!((num(&last[1]) - 0.25).abs() <= 1e-6, "{last:?}");
    assert_eq!(last[1].split_once('e').unwrap().0.replace(['.', '-'], "").len(), 17);
}

#[test]
fn carnot_boundary_cycle() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["carnot"], &data("ideal_gas.toml"), out.path())), 0);
    let r = rows(&out.path().join("carnot.csv"));
    assert_eq!(r[0][0], "config");
    assert_eq!(r[0][5], "true");
    assert_eq!(num(&r[0][6]), 0.5);
    assert_eq!(num(&r[0][7]), 0.5);
    assert_eq!(r.len(), 101);
    let audit = rows(&out.path().join("carnot_audit.csv"));
    assert_eq!(audit.len(), 3);
}

#[test]
fn rejected_cycle_exits_one() {
    let out = tempfile::tempdir().unwrap();
    let cfg = out.path().join("c.toml");
    fs::write(&cfg, "[carnot]\nq1 = 100.0\nt1 = 600.0\nq0 = -40.0\nt0 = 300.0\n").unwrap();
    assert_eq!(code(&run(&["carnot"], &cfg, out.path())), 1);
}

#[test]
fn entropy_grid_and_fit() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["build-entropy"], &data("ideal_gas.toml"), out.path())), 0);
    assert_eq!(rows(&out.path().join("entropy.csv")).len(), 100);
    let fit = rows(&out.path().join("entropy_fit.csv"));
    assert!(num(&fit[0][2]) <= 1e-6, "{fit:?}");
}

#[test]
fn single_point_grid_is_the_reference() {
    let out = tempfile::tempdir().unwrap();
    let cfg = out.path().join("one.toml");
    fs::write(
        &cfg,
        "[system.g]\nkind = \"ideal-gas\"\n[build_entropy]\nsystem = \"g\"\nu = [1.0, 4.0]\nv = [1.0, 4.0]\npoints = 1\n",
    )
    .unwrap();
    assert_eq!(code(&run(&["build-entropy"], &cfg, out.path())), 0);
    let r = rows(&out.path().join("entropy.csv"));
    assert_eq!(r.len(), 1);
    assert!(num(&r[0][2]).abs() <= 1e-8, "{r:?}");
}

#[test]
fn grid_outside_domain_exits_one() {
    let out = tempfile::tempdir().unwrap();
    let cfg = out.path().join("far.toml");
    fs::write(
        &cfg,
        "[system.g]\nkind = \"ideal-gas\"\n[build_entropy]\nsystem = \"g\"\nu = [1.0, 400.0]\nv = [1.0, 4.0]\npoints = 3\n",
    )
    .unwrap();
    let o = run(&["build-entropy"], &cfg, out.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid point (U="));
}

#[test]
fn split_equalizes_temperature() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["split"], &data("ideal_gas.toml"), out.path())), 0);
    let r = rows(&out.path().join("split.csv"));
    // n = 2 and n = 1 sharing U = 3 equilibrate at U = 2 and 1
    assert!((num(&r[0][2]) - 2.0).abs() <= 1e-6);
    assert!((num(&r[1][2]) - 1.0).abs() <= 1e-6);
    assert!((num(&r[0][4]) - num(&r[1][4])).abs() <= 1e-4);
}

#[test]
fn water_network_constants() {
    let out = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["calibrate"], &data("ideal_gas.toml"), out.path())), 0);
    let r = rows(&out.path().join("calibration.csv"));
    let b = |id: &str| r.iter().find(|x| x[0] == id).unwrap().clone();
    assert_eq!(num(&b("H2O")[1]), 3.0);
    assert_eq!(b("H2O")[4], "Unique");
    let peroxide = b("H2O2");
    assert!((num(&peroxide[1]) - 1.8).abs() < 1e-12);
    assert!((num(&peroxide[2]) - 1.6).abs() < 1e-12 && (num(&peroxide[3]) - 2.0).abs() < 1e-12);
    assert_eq!(peroxide[4], "Gap");
    assert_eq!(num(&b("O3")[1]), -0.5);
    assert_eq!(num(&b("H2")[1]), 0.0);
}

#[test]
fn negative_cycle_exits_one() {
    let out = tempfile::tempdir().unwrap();
    fs::write(
        out.path().join("net.toml"),
        "[node.A]\ncomposition = [1.0]\n[node.B]\ncomposition = [1.0]\n[edge.A.B]\nD = -1.0\n[edge.B.A]\nD = -1.0\n",
    )
    .unwrap();
    let cfg = out.path().join("c.toml");
    fs::write(&cfg, "[calibrate]\nnetwork = \"net.toml\"\n").unwrap();
    let o = run(&["calibrate"], &cfg, out.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("negative cycle"));
}
