use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn pharmonic(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pharmonic"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| l.split(',').nth(idx).unwrap().parse().unwrap())
        .collect()
}

fn manifest_value(path: &Path, key: &str) -> Option<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")).map(str::to_string))
}

const SMALL: [&str; 6] = ["--set", "nx=6", "--set", "ny=6", "--set", "t_final=0.05"];

#[test]
fn constant_preset_has_zero_dissipation() {
    let dir = TempDir::new().unwrap();
    let mut args = vec!["run", "--out", "o", "--set", "preset=constant"];
    args.extend(SMALL);
    let o = pharmonic(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("o/trace.csv")).unwrap();
    let diss = column(&csv, "cum_dissipation");
    assert_eq!(diss.len(), 6);
    assert!(diss.iter().all(|&d| d == 0.0));
}

#[test]
fn random_unit_p2_energy_is_nonincreasing() {
    let dir = TempDir::new().unwrap();
    let args = [
        "run",
        "--out",
        "o",
        "--set",
        "preset=random-unit",
        "--set",
        "p=2",
        "--set",
        "nx=8",
        "--set",
        "ny=8",
        "--set",
        "t_final=0.1",
        "--set",
        "delta=0.01",
    ];
    let o = pharmonic(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("o/trace.csv")).unwrap();
    let e = column(&csv, "e_total");
    assert_eq!(e.len(), 11);
    for w in e.windows(2) {
        assert!(w[1] <= w[0], "{w:?}");
    }
}

#[test]
fn unknown_key_is_a_config_error_naming_the_key() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("bad.conf"), "p = 2\nlamda = 1\n").unwrap();
    let o = pharmonic(&["run", "--config", "bad.conf", "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("lamda") && err.contains("bad.conf:2"), "{err}");
    assert!(!dir.path().join("o/trace.csv").exists());
}

#[test]
fn bad_override_and_bad_value_exit_2() {
    let dir = TempDir::new().unwrap();
    for set in ["p", "p=zero", "preset=spiral", "lamda=1"] {
        let o = pharmonic(&["run", "--set", set], dir.path());
        assert_eq!(o.status.code(), Some(2), "{set}: {}", stderr(&o));
    }
}

#[test]
fn missing_config_file_is_io_error() {
    let dir = TempDir::new().unwrap();
    let o = pharmonic(&["run", "--config", "nope.conf"], dir.path());
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn overrides_beat_file_and_manifest_is_complete() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("c.conf"), "# test\np = 2\ndelta = 0.01\n").unwrap();
    let mut args = vec!["run", "--config", "c.conf", "--set", "p=3", "--out", "o"];
    args.extend(SMALL);
    let o = pharmonic(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let m = dir.path().join("o/manifest.txt");
    assert_eq!(manifest_value(&m, "config.p").as_deref(), Some("3.0"));
    assert_eq!(manifest_value(&m, "config.delta").as_deref(), Some("0.01"));
    assert_eq!(manifest_value(&m, "config.lambda").as_deref(), Some("1.0"));
    assert_eq!(manifest_value(&m, "input.config.sha256").unwrap().len(), 64);
    assert!(manifest_value(&m, "version").unwrap().starts_with('v'));
    assert!(manifest_value(&m, "timing.flow_s").is_some());
    let text = std::fs::read_to_string(&m).unwrap();
    let outputs: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("output."))
        .map(|l| l.split_once(" = ").unwrap().1)
        .collect();
    assert!(outputs.len() >= 4);
    for p in outputs {
        assert!(dir.path().join(p).exists(), "{p}");
    }
}

#[test]
fn resolved_config_reproduces_the_trace() {
    let dir = TempDir::new().unwrap();
    let mut args = vec![
        "run",
        "--out",
        "a",
        "--set",
        "preset=random-unit",
        "--set",
        "seed=9",
    ];
    args.extend(SMALL);
    assert!(pharmonic(&args, dir.path()).status.success());
    let o = pharmonic(
        &["run", "--config", "a/resolved.conf", "--out", "b"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let a = std::fs::read(dir.path().join("a/trace.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/trace.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sequential_and_parallel_traces_match_bitwise() {
    let dir = TempDir::new().unwrap();
    let mut traces = Vec::new();
    for exec in ["sequential", "parallel"] {
        let set = format!("execution={exec}");
        let mut args = vec!["run", "--out", exec, "--set", &set, "--set", "p=1.5"];
        args.extend(SMALL);
        assert!(pharmonic(&args, dir.path()).status.success());
        traces.push(std::fs::read(dir.path().join(exec).join("trace.csv")).unwrap());
    }
    assert_eq!(traces[0], traces[1]);
}

#[test]
fn nonconvergence_exits_3() {
    let dir = TempDir::new().unwrap();
    let mut args = vec![
        "run",
        "--set",
        "preset=random-unit",
        "--set",
        "newton_max_iter=1",
    ];
    args.extend(SMALL);
    let o = pharmonic(&args, dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("step 1"));
}

fn write_ppm(path: &Path, w: usize, h: usize, px: [u8; 3]) {
    let mut data = format!("P6\n{w} {h}\n255\n").into_bytes();
    for _ in 0..w * h {
        data.extend(px);
    }
    std::fs::write(path, data).unwrap();
}

#[test]
fn constant_image_denoises_to_itself() {
    let dir = TempDir::new().unwrap();
    write_ppm(&dir.path().join("in.ppm"), 5, 4, [200, 40, 90]);
    let o = pharmonic(
        &[
            "denoise",
            "in.ppm",
            "out.ppm",
            "--out",
            "o",
            "--set",
            "t_final=0.05",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let a = std::fs::read(dir.path().join("in.ppm")).unwrap();
    let b = std::fs::read(dir.path().join("out.ppm")).unwrap();
    assert_eq!(a, b);
    let m = dir.path().join("o/manifest.txt");
    assert_eq!(manifest_value(&m, "input.image.sha256").unwrap().len(), 64);
    assert!(manifest_value(&m, "j_initial").is_some());
}

#[test]
fn tiny_or_missing_image_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    write_ppm(&dir.path().join("thin.ppm"), 2, 1, [10, 10, 10]);
    let o = pharmonic(&["denoise", "thin.ppm", "out.ppm"], dir.path());
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("2x1"));
    let o = pharmonic(&["denoise", "absent.ppm", "out.ppm"], dir.path());
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn single_value_sweep_matches_run() {
    let dir = TempDir::new().unwrap();
    let mut run = vec!["run", "--out", "r", "--set", "delta=0.01"];
    run.extend(SMALL);
    assert!(pharmonic(&run, dir.path()).status.success());
    let mut sweep = vec!["sweep", "--axis", "delta", "--values", "0.01", "--out", "s"];
    sweep.extend(SMALL);
    let o = pharmonic(&sweep, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let a = std::fs::read(dir.path().join("r/trace.csv")).unwrap();
    let b = std::fs::read(dir.path().join("s/delta_0.01/trace.csv")).unwrap();
    assert_eq!(a, b);
    let summary = std::fs::read_to_string(dir.path().join("s/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
}

#[test]
fn sweep_values_must_descend() {
    let dir = TempDir::new().unwrap();
    let o = pharmonic(
        &["sweep", "--axis", "delta", "--values", "0.001,0.01"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let o = pharmonic(&["sweep", "--axis", "mu", "--values", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eps_sweep_p_term_bounds_unregularized_energy() {
    let dir = TempDir::new().unwrap();
    let mut args = vec![
        "sweep",
        "--axis",
        "eps",
        "--values",
        "0.3,0.1,0.03",
        "--out",
        "s",
    ];
    args.extend(SMALL);
    let o = pharmonic(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("s/summary.csv")).unwrap();
    let (pt, fid, j) = (
        column(&csv, "e_pterm"),
        column(&csv, "e_fidelity"),
        column(&csv, "j_unregularized"),
    );
    let gaps: Vec<f64> = (0..pt.len()).map(|i| pt[i] + fid[i] - j[i]).collect();
    assert!(gaps.iter().all(|&g| g >= 0.0), "{gaps:?}");
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn h_sweep_refines_the_mesh() {
    let dir = TempDir::new().unwrap();
    let args = [
        "sweep",
        "--axis",
        "h",
        "--values",
        "0.25,0.125",
        "--out",
        "s",
        "--set",
        "t_final=0.02",
    ];
    assert!(pharmonic(&args, dir.path()).status.success());
    let m = dir.path().join("s/h_0.125/manifest.txt");
    assert_eq!(manifest_value(&m, "mesh.nodes").as_deref(), Some("81"));
}

#[test]
fn check_passes_and_perturbed_gradient_fails() {
    let dir = TempDir::new().unwrap();
    let o = pharmonic(&["check"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8_lossy(&o.stdout).into_owned();
    assert!(out.lines().all(|l| l.starts_with("PASS ")), "{out}");
    let o = pharmonic(&["check", "--perturb-gradient"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("gradient suite"), "{}", stderr(&o));
}
