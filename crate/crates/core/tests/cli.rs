//! End-to-end runs of the `thermal-langevin` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_thermal-langevin");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn data_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(2)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn simulate_free_ensemble_spreads_like_brownian_motion() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "free.cfg",
        "gamma = 0.5\nw = 1\nintegrator.dt = 0.001\nintegrator.t_end = 1\nensemble.n_traj = 1000\nensemble.record_every = 250\n",
    );
    let out = dir.path().join("m.csv");
    let r = run(&["simulate", "--config", s(&cfg), "--seed", "2", "--out", s(&out)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# meta: seed=2 dt=0.001 n_traj=1000 scheme=split"));
    assert!(!text.lines().next().unwrap().contains("workers"));
    let rows = data_rows(&text);
    let last = rows.last().unwrap();
    // t, mean_x, mean_p, var_x, var_p, cov_xp, se_var_x
    assert!((last[3] - 1.0).abs() < 4.0 * last[6], "var x {} ± {}", last[3], last[6]);
    let summary = String::from_utf8_lossy(&r.stderr);
    assert!(summary.contains("trajectories/s"));
}

#[test]
fn silent_bath_is_deterministic_regardless_of_n_traj() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "h.cfg",
        "potential.kind = harmonic\npotential.omega = 1\ninitial.x = 1\nintegrator.dt = 0.01\nintegrator.t_end = 2\nensemble.n_traj = 50\nensemble.record_every = 200\n",
    );
    let out = dir.path().join("m.csv");
    assert!(run(&["simulate", "--config", s(&cfg), "--out", s(&out)]).status.success());
    let last = data_rows(&std::fs::read_to_string(&out).unwrap()).pop().unwrap();
    assert!((last[1] - 2f64.cos()).abs() < 1e-3, "{}", last[1]);
    assert_eq!(last[3], 0.0);
}

#[test]
fn every_subcommand_is_worker_invariant() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let sim = write(
        d,
        "sim.cfg",
        "gamma = 0.1\nw = 0.5\npotential.kind = quartic\npotential.a = 1\npotential.b = 0.2\nintegrator.dt = 0.01\nintegrator.t_end = 1\nensemble.n_traj = 700\nensemble.record_every = 10\n",
    );
    let wig = write(
        d,
        "wig.cfg",
        "gamma = 0.1\nw = 0.25\npacket.sigma = 1\npacket.k = 0.3\nintegrator.dt = 0.02\n",
    );
    let semi = write(
        d,
        "semi.cfg",
        "gamma = 0.01\nw = 0.001\npotential.kind = harmonic\npotential.omega = 1\ninitial.x = 1\nintegrator.dt = 0.01\nintegrator.t_end = 10\nsemiclassical.scale = 0.03\n",
    );
    let width = write(d, "width.cfg", "gamma = 0.1\nw = 0.1\npotential.kind = harmonic\npotential.omega = 1\nintegrator.dt = 0.01\nensemble.n_traj = 300\n");
    let noise = write(d, "noise.cfg", "temperature = 1\ngamma = 0.5\nintegrator.dt = 0.05\n");

    let outputs = |w: &str| -> Vec<Vec<u8>> {
        let o = d.join(format!("w{w}"));
        std::fs::create_dir_all(&o).unwrap();
        let cases: Vec<Vec<String>> = vec![
            vec!["simulate".into(), "--config".into(), s(&sim).into(), "--out".into(), s(&o.join("sim.csv")).into()],
            vec![
                "wigner".into(),
                "--config".into(),
                s(&wig).into(),
                "--grid".into(),
                "-3:3:7,-2:2:5".into(),
                "--time".into(),
                "0.5".into(),
                "--samples".into(),
                "600".into(),
                "--out".into(),
                s(&o.join("wig.csv")).into(),
            ],
            vec![
                "width".into(),
                "--config".into(),
                s(&width).into(),
                "--gammas".into(),
                "0,0.1".into(),
                "--tmax".into(),
                "5".into(),
                "--points".into(),
                "10".into(),
                "--mc".into(),
                "--out".into(),
                s(&o.join("width.csv")).into(),
            ],
            vec![
                "noise".into(),
                "--config".into(),
                s(&noise).into(),
                "--spec".into(),
                "coth".into(),
                "--n".into(),
                "1024".into(),
                "--out".into(),
                s(&o.join("noise.csv")).into(),
            ],
            vec!["semiclassical".into(), "--config".into(), s(&semi).into(), "--out".into(), s(&o.join("semi")).into()],
        ];
        for mut c in cases {
            c.extend(["--workers".into(), w.into(), "--seed".into(), "9".into()]);
            let args: Vec<&str> = c.iter().map(String::as_str).collect();
            let r = run(&args);
            assert!(r.status.success(), "{args:?}: {}", String::from_utf8_lossy(&r.stderr));
        }
        [
            "sim.csv",
            "wig.csv",
            "width.csv",
            "noise.csv",
            "noise.csv.spectrum.csv",
            "semi/orbit.csv",
            "semi/green.csv",
            "semi/series.csv",
            "semi/comparison.csv",
        ]
        .iter()
        .map(|f| std::fs::read(o.join(f)).unwrap())
        .collect()
    };
    let one = outputs("1");
    assert_eq!(one, outputs("4"));
    assert_eq!(one, outputs("16"));
}

#[test]
fn config_errors_exit_2_with_the_field_name() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.cfg", "mass = 1\nintegrator.dtt = 0.1\n");
    let r = run(&["simulate", "--config", s(&bad)]);
    assert_eq!(r.status.code(), Some(2));
    assert_eq!(String::from_utf8_lossy(&r.stderr).trim(), "error: integrator.dtt: unknown key (line 2)");

    let neg = write(dir.path(), "neg.cfg", "temperature = -3\n");
    let r = run(&["simulate", "--config", s(&neg)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).starts_with("error: temperature: "));

    let r = run(&["noise", "--spec", "coth", "--n", "64"]);
    assert_eq!(r.status.code(), Some(2));

    let r = run(&["simulate", "--config", s(&dir.path().join("missing.cfg"))]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).starts_with("error: config: "));
}

#[test]
fn runtime_failures_exit_3() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "run.cfg",
        "gamma = 0.05\npotential.kind = harmonic\npotential.omega = 1\ninitial.x = 1\nintegrator.scheme = third-order\nintegrator.dt = 0.001\nintegrator.t_end = 20\n",
    );
    let r = run(&["simulate", "--config", s(&cfg), "--out", s(&dir.path().join("o.csv"))]);
    assert_eq!(r.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&r.stderr).starts_with("error: runaway: "));
}

#[test]
fn wigner_at_start_time_is_the_initial_packet() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "w.cfg", "gamma = 0.1\nw = 0.3\npacket.sigma = 0.8\npacket.xbar = 0.2\npacket.k = -0.4\n");
    let out = dir.path().join("w.csv");
    let r = run(&["wigner", "--config", s(&cfg), "--time", "0", "--grid", "-2:2:5,-1:1:3", "--out", s(&out)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().next().unwrap().contains("convention=backward-argument"));
    for row in data_rows(&text) {
        let (x, p) = (row[0], row[1]);
        let exact = (-(p + 0.4f64).powi(2) * 0.8 - (x - 0.2f64).powi(2) / 0.8).exp() / std::f64::consts::PI;
        assert!((row[2] - exact).abs() < 1e-15);
        assert_eq!(row[3], 0.0);
    }
}

#[test]
fn width_without_mc_tabulates_the_closed_form() {
    let r = run(&["width", "--gammas", "0,0.02,0.05", "--tmax", "30", "--points", "300"]);
    assert!(r.status.success());
    let text = String::from_utf8(r.stdout).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "omega_t,f_gamma_0,f_gamma_0.02,f_gamma_0.05");
    let rows = data_rows(&text);
    let last = rows.last().unwrap();
    assert_eq!(last[0], 30.0);
    assert!(last[1] > last[2] && last[2] > last[3]);
}

#[test]
fn semiclassical_free_particle_has_zero_b() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "f.cfg", "gamma = 0.1\ninitial.x = 0.5\ninitial.p = 1\nintegrator.dt = 0.01\nintegrator.t_end = 3\n");
    let out = dir.path().join("semi");
    let r = run(&["semiclassical", "--config", s(&cfg), "--out", s(&out)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    for row in data_rows(&std::fs::read_to_string(out.join("series.csv")).unwrap()) {
        assert_eq!(row[2], 0.0);
    }
}
