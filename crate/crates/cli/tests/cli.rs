use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono_duhamel::multilinear::dump::write_functional_text;
use chrono_duhamel::multilinear::SymFunctional;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_chrono-duhamel"));
    c.env_remove("CHRONO_DUHAMEL_OUT");
    c
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(command: &str, config: &Path, out: &Path) -> Output {
    bin()
        .args([command, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

/// Data rows of a CSV, skipping comment lines and the column header.
fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    let idx = header.split(',').position(|h| h == name).expect("column exists");
    rows(path).iter().map(|r| r[idx].parse().unwrap()).collect()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn identical_runs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[initial]\nkind = \"random\"\namplitude = 0.05\n[times]\nt2 = 0.2\nsteps = 10\n[caps]\ndegree = 3\n",
    );
    let out = dir.path().join("out");
    let files = ["invariance.csv", "invariance_summary.csv"];
    assert_eq!(code(&run("invariance", &cfg, &out)), 0);
    let first: Vec<Vec<u8>> = files.iter().map(|f| fs::read(out.join(f)).unwrap()).collect();
    assert_eq!(code(&run("invariance", &cfg, &out)), 0);
    for (f, bytes) in files.iter().zip(&first) {
        assert_eq!(&fs::read(out.join(f)).unwrap(), bytes, "{f}");
    }
}

#[test]
fn seed_changes_random_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[initial]\nkind = \"random\"\n");
    let out = dir.path().join("out");
    let snapshot = |seed: &str| {
        let o = bin()
            .args(["propagate", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .args(["--seed", seed])
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        rows(&out.join("snapshot_t1.csv"))
    };
    assert_ne!(snapshot("1"), snapshot("2"));
    assert_eq!(snapshot("3"), snapshot("3"));
}

#[test]
fn every_csv_starts_with_the_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "seed = 17\n[grid]\npoints = 16\n");
    let out = dir.path().join("out");
    assert_eq!(code(&run("evolve", &cfg, &out)), 0);
    assert_eq!(code(&run("propagate", &cfg, &out)), 0);
    let mut files = vec![out.join("trajectory.csv"), out.join("snapshot_t1.csv"), out.join("snapshot_t2.csv")];
    for e in fs::read_dir(out.join("fields")).unwrap() {
        files.push(e.unwrap().path());
    }
    assert!(files.len() >= 5);
    for f in files {
        let text = fs::read_to_string(&f).unwrap();
        assert!(text.starts_with("# resolved configuration\n"), "{}", f.display());
        assert!(text.contains("# seed = 17\n"));
        assert!(text.contains("# points = 16\n"));
        // defaults are spelled out too
        assert!(text.contains("# [certify]\n"));
    }
}

#[test]
fn malformed_config_exits_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), "[grid]\npoints = 8\nlength = \n");
    let o = run("evolve", &cfg, &out);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");

    let cfg = write_config(dir.path(), "[grid]\nsize = 8\n");
    let o = run("evolve", &cfg, &out);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("size"));

    let cfg = write_config(dir.path(), "[grid]\npoints = 12\n");
    let o = run("evolve", &cfg, &out);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid"));

    let o = run("evolve", &dir.path().join("missing.toml"), &out);
    assert_eq!(code(&o), 2);
}

#[test]
fn missing_tensor_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[functional]\nkind = \"tensor_file\"\npath = \"nope.txt\"\n");
    let o = run("invariance", &cfg, &dir.path().join("out"));
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("functional.path"));
}

#[test]
fn unsupported_dispersion_for_transport_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[dispersion]\nkind = \"schrodinger\"\n");
    let out = dir.path().join("out");
    assert_eq!(code(&run("invariance", &cfg, &out)), 2);
    assert_eq!(code(&run("evolve", &cfg, &out)), 0);
    let cfg = write_config(
        dir.path(),
        "[dispersion]\nkind = \"schrodinger\"\n[nonlinearity]\ncoefficients = {}\n[initial]\nkind = \"random\"\n",
    );
    assert_eq!(code(&run("evolve", &cfg, &out)), 0);
    let mass = column(&out.join("trajectory.csv"), "energy");
    let drift = mass.iter().fold(0.0f64, |m, e| m.max((e - mass[0]).abs()));
    assert!(drift < 1e-12 * mass[0], "mass drift {drift}");
}

#[test]
fn numerical_failure_exits_one_and_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[initial]\namplitude = 50.0\n[times]\nt2 = 2.0\nsteps = 4\n");
    let o = run("evolve", &cfg, &dir.path().join("out"));
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("evolve"));

    let cfg = write_config(dir.path(), "[caps]\ndegree = 1\n[tolerances]\ndrift = 1e-30\n");
    let o = run("invariance", &cfg, &dir.path().join("out"));
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("invariance"));
}

#[test]
fn free_evolution_keeps_chart_norms_constant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[nonlinearity]\ncoefficients = {}\n[initial]\nkind = \"random\"\namplitude = 1.0\n");
    let out = dir.path().join("out");
    assert_eq!(code(&run("evolve", &cfg, &out)), 0);
    let norms = column(&out.join("trajectory.csv"), "cau_norm");
    assert_eq!(norms.len(), 51);
    assert!(norms.iter().all(|n| *n == norms[0]), "{norms:?}");
    let residual = column(&out.join("trajectory.csv"), "duhamel_residual_running");
    assert!(residual.iter().all(|r| *r == 0.0));
}

#[test]
fn benchmark_invariance_stays_below_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run("invariance", &repo_config("cubic_kg_invariance.toml"), &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let drift = column(&out.join("invariance_summary.csv"), "drift")[0];
    let threshold = column(&out.join("invariance_summary.csv"), "threshold")[0];
    assert!(drift < threshold, "{drift} vs {threshold}");
    let running = column(&out.join("invariance.csv"), "running_drift");
    assert_eq!(running.len(), 51);
    assert!(running.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn benchmark_evolve_config_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(code(&run("evolve", &repo_config("cubic_kg.toml"), &out)), 0);
    assert_eq!(column(&out.join("trajectory.csv"), "t").len(), 41);
    assert_eq!(fs::read_dir(out.join("fields")).unwrap().count(), 5);
}

#[test]
fn preset_cubic_majorant_gives_closed_form_radius() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[certify]\nradius = 1.0\nfloor = 0.5\nmajorant = [0.0, 0.0, 0.0, 2.0]\n[times]\nsteps = 20\n",
    );
    let out = dir.path().join("out");
    let o = run("certify", &cfg, &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let spans = column(&out.join("certify.csv"), "span");
    let radii = column(&out.join("certify.csv"), "certified_radius");
    assert_eq!(spans.len(), 21);
    // e^{-T 2z^3}(1) = (1 + 4T)^{-1/2}; guaranteed time (1/floor^2 - 1) / 4 = 0.75
    assert!((spans[20] - 0.375).abs() < 1e-9);
    for (t, r) in spans.iter().zip(&radii) {
        let exact = (1.0 + 4.0 * t).powf(-0.5);
        assert!((r - exact).abs() < 1e-9 * exact, "T = {t}: {r} vs {exact}");
    }
    let gt = column(&out.join("certify.csv"), "guaranteed_time");
    assert!((gt[0] - 0.75).abs() < 1e-9);
}

#[test]
fn measured_certificate_checks_the_transported_functional() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run("certify", &repo_config("cubic_kg_invariance.toml"), &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let file = out.join("certify.csv");
    let last = rows(&file).pop().unwrap();
    let f_at_radius: f64 = last[4].parse().unwrap();
    let transported: f64 = last[5].parse().unwrap();
    assert!(transported <= f_at_radius);
    assert!(column(&file, "certified_radius").iter().all(|r| *r > 0.0));
}

#[test]
fn trees_agree_with_dense_transport() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run("trees", &repo_config("cubic_kg_invariance.toml"), &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let gaps = column(&out.join("trees_summary.csv"), "gap");
    assert_eq!(gaps.len(), 3);
    assert!(gaps.iter().all(|g| *g < 1e-8));
    let mult = column(&out.join("trees.csv"), "multiplicity");
    assert_eq!(mult, vec![1.0, 1.0, 3.0]);
}

#[test]
fn tensor_file_functional_matches_linear_weights() {
    let dir = tempfile::tempdir().unwrap();
    let weights: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin()).collect();
    let mut buf = Vec::new();
    write_functional_text(&SymFunctional::linear(&weights), &mut buf).unwrap();
    fs::write(dir.path().join("f.txt"), buf).unwrap();
    let base = "[times]\nt2 = 0.2\nsteps = 10\n";
    let cfg_file = write_config(dir.path(), &format!("{base}[functional]\nkind = \"tensor_file\"\npath = \"f.txt\"\n"));
    let out_file = dir.path().join("a");
    assert_eq!(code(&run("invariance", &cfg_file, &out_file)), 0);
    let list = weights.iter().map(|w| format!("{w:e}")).collect::<Vec<_>>().join(", ");
    let cfg_weights = write_config(dir.path(), &format!("{base}[functional]\nkind = \"linear_weights\"\nweights = [{list}]\n"));
    let out_weights = dir.path().join("b");
    assert_eq!(code(&run("invariance", &cfg_weights, &out_weights)), 0);
    let a = column(&out_file.join("invariance.csv"), "functional_value");
    let b = column(&out_weights.join("invariance.csv"), "functional_value");
    assert_eq!(a, b);
}

#[test]
fn env_var_overrides_output_directory_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[output]\ndir = \"unused\"\n");
    let env_out = dir.path().join("from_env");
    let o = bin()
        .args(["propagate", "--config"])
        .arg(&cfg)
        .env("CHRONO_DUHAMEL_OUT", &env_out)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(env_out.join("snapshot_t1.csv").is_file());
    assert!(!dir.path().join("unused").exists());
    // --out wins over the environment
    let flag_out = dir.path().join("from_flag");
    let o = bin()
        .args(["propagate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&flag_out)
        .env("CHRONO_DUHAMEL_OUT", &env_out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(flag_out.join("snapshot_t1.csv").is_file());
}

#[test]
fn selftest_prints_a_passing_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "seed = 5\n");
    let o = run("selftest", &cfg, &dir.path().join("out"));
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().count() >= 12);
    assert!(stdout.lines().all(|l| l.starts_with("PASS ")));
    assert!(stdout.contains("chrono.invariance"));
}

#[test]
fn unknown_command_is_rejected() {
    let o = bin().args(["explode", "--config", "x.toml"]).output().unwrap();
    assert_eq!(code(&o), 2);
}
