use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn hydrostat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hydrostat"))
        .args(args)
        .env_remove("HYDROSTAT_THREADS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

const SMALL: &str = "\
[grid]
nx = 8
ny = 8
nz = 5
[time]
dt = 1e-3
n_steps = 20
diag_cadence = 5
";

fn constant_noise(dir: &Path, amp: f64) -> PathBuf {
    let body = format!("{SMALL}[noise]\nkind = constant\nphi = {amp}, 0, 0\npsi = 0, 0, 0\n[output]\ndir = out\n");
    write_config(dir, "c.toml", &body)
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|c| c == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn check_noise_reports_nu() {
    let tmp = tempfile::tempdir().unwrap();
    let zero = write_config(tmp.path(), "z.toml", SMALL);
    let out = hydrostat(&["check-noise", zero.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("nu_phi      = 0.000000000000"), "{text}");

    let sqrt2 = constant_noise(tmp.path(), 2f64.sqrt());
    let out = hydrostat(&["check-noise", sqrt2.to_str().unwrap()]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("nu_phi      = 2.000000000000"), "{text}");
    assert!(text.contains("parabolicity (nu < 2): FAIL"), "{text}");
}

#[test]
fn nonparabolic_noise_is_refused_without_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = constant_noise(tmp.path(), 2.5f64.sqrt());
    let out = hydrostat(&["simulate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("out").exists());

    let out = hydrostat(&["--allow-nonparabolic", "simulate", cfg.to_str().unwrap()]);
    assert_ne!(out.status.code(), Some(2));
    assert!(tmp.path().join("out/diagnostics.csv").exists());
}

#[test]
fn config_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", "[grid]\nnx = 8\nwidth = 3\n");
    assert_eq!(hydrostat(&["simulate", cfg.to_str().unwrap()]).status.code(), Some(1));
    let missing = tmp.path().join("missing.toml");
    assert_eq!(hydrostat(&["simulate", missing.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(hydrostat(&["verify", "nonsense"]).status.code(), Some(1));
    assert_eq!(hydrostat(&["verify", "projection", "--grids", "8x8"]).status.code(), Some(1));
}

#[test]
fn verify_projection_prints_report() {
    let tmp = tempfile::tempdir().unwrap();
    let report = tmp.path().join("r.json");
    let out = hydrostat(&["verify", "projection", "--grids", "8x8x5", "--report", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(fs::read_to_string(&report).unwrap(), stdout);
    assert!(stdout.contains("\"suite\": \"projection\""), "{stdout}");
}

#[test]
fn decay_run_has_monotone_energy() {
    let tmp = tempfile::tempdir().unwrap();
    let body = format!(
        "{SMALL}[physics]\nforcing = zero\n[initial]\nv = eigenmode\ntheta = eigenmode\n[output]\ndir = decay\n"
    );
    let cfg = write_config(tmp.path(), "decay.toml", &body);
    let out = hydrostat(&["simulate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = fs::read_to_string(tmp.path().join("decay/diagnostics.csv")).unwrap();
    let e = column(&csv, "robin_energy");
    assert_eq!(e.len(), 5);
    assert!(e.windows(2).all(|w| w[1] <= w[0]), "{e:?}");
}

#[test]
fn thread_count_does_not_change_output() {
    let tmp = tempfile::tempdir().unwrap();
    let body = format!(
        "{SMALL}[noise]\nkind = kraichnan\nN = 3\nsigma = 1\nseed = 5\ntarget_nu = 0.5\n[ensemble]\nn_traj = 3\n\
         [output]\ndir = run\nsnapshots_every = 10\nformats = csv, snapshot\n"
    );
    let cfg = write_config(tmp.path(), "k.toml", &body);
    let read_all = |root: &Path| -> Vec<(String, Vec<u8>)> {
        let mut files = Vec::new();
        let mut stack = vec![root.to_path_buf()];
        while let Some(d) = stack.pop() {
            for e in fs::read_dir(&d).unwrap() {
                let p = e.unwrap().path();
                if p.is_dir() {
                    stack.push(p);
                } else {
                    files.push((p.strip_prefix(root).unwrap().display().to_string(), fs::read(&p).unwrap()));
                }
            }
        }
        files.sort();
        files
    };
    let mut runs = Vec::new();
    for threads in ["1", "3"] {
        let out = hydrostat(&["--threads", threads, "--seed", "17", "simulate", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        runs.push(read_all(&tmp.path().join("run")));
        fs::remove_dir_all(tmp.path().join("run")).unwrap();
    }
    assert!(runs[0].len() >= 4);
    assert_eq!(runs[0], runs[1]);

    let out = hydrostat(&["--seed", "18", "simulate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let other = fs::read(tmp.path().join("run/diagnostics.csv")).unwrap();
    let first = &runs[0].iter().find(|(n, _)| n == "diagnostics.csv").unwrap().1;
    assert_ne!(&other, first);
}
