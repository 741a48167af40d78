use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const FLAT: &str = "[physics]\nwavenumber = 20.0\nincidence_angle = 0.3\n";

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn grating(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grating")).args(args).arg("--out").arg(dir).output().unwrap()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect()
}

fn efficiencies(path: &Path) -> Vec<(i64, f64)> {
    rows(path).iter().map(|r| (r[0].parse().unwrap(), r[5].parse().unwrap())).collect()
}

#[test]
fn solve_flat_mirror() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "flat.toml", FLAT);
    let out = grating(dir.path(), &["solve", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("solve.csv")).unwrap();
    assert!(text.starts_with("# grating solve v1 config-sha256="));
    for (n, e) in efficiencies(&dir.path().join("solve.csv")) {
        let expected = if n == 0 { 1.0 } else { 0.0 };
        assert!((e - expected).abs() < 1e-4, "n={n} e={e}");
    }
}

#[test]
fn solve_lists_propagating_orders() {
    let dir = TempDir::new().unwrap();
    let text = "[physics]\nwavenumber = 30.0\nincidence_angle = 0.7853981633974483\n\
                [profile]\nsin = [0.03, 0.01]\ncos = [-0.02, 0.0]\n";
    let cfg = write_config(dir.path(), "k30.toml", text);
    assert!(grating(dir.path(), &["solve", cfg.to_str().unwrap()]).status.success());
    let modes: Vec<i64> = efficiencies(&dir.path().join("solve.csv")).iter().map(|r| r.0).collect();
    assert_eq!(modes, (-8..=1).collect::<Vec<_>>());
}

#[test]
fn malformed_config_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let both = "[physics]\nwavenumber = 20.0\nwavelength = 300.0\nperiod = 1667.0\nincidence_angle = 0.0\n";
    let unknown = "[physics]\nwavenumber = 20.0\nincidence_angle = 0.0\nspeed = 1\n";
    for (name, text) in [("both.toml", both), ("unknown.toml", unknown)] {
        let cfg = write_config(dir.path(), name, text);
        let out = grating(dir.path(), &["solve", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    }
}

#[test]
fn physical_units_match_nondimensional_input() {
    let dir = TempDir::new().unwrap();
    let profile = "[profile]\nsin = [0.02, -0.01]\ncos = [0.03, 0.005]\n";
    let physical = format!("[physics]\nwavelength = 300.0\nperiod = 1667.0\nincidence_angle = 0.2\n{profile}");
    let scaled = format!("[physics]\nwavenumber = {:?}\nincidence_angle = 0.2\n{profile}", 2.0 * std::f64::consts::PI * 1667.0 / 300.0);
    let mut results = Vec::new();
    for (name, text) in [("physical.toml", physical), ("scaled.toml", scaled)] {
        let sub = dir.path().join(name.trim_end_matches(".toml"));
        std::fs::create_dir(&sub).unwrap();
        let cfg = write_config(dir.path(), name, &text);
        assert!(grating(&sub, &["solve", cfg.to_str().unwrap()]).status.success());
        results.push(efficiencies(&sub.join("solve.csv")));
    }
    assert_eq!(results[0].len(), results[1].len());
    for (a, b) in results[0].iter().zip(&results[1]) {
        assert_eq!(a.0, b.0);
        assert!((a.1 - b.1).abs() <= 1e-12, "{a:?} vs {b:?}");
    }
}

#[test]
fn optimize_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let text = "[physics]\nwavenumber = 20.0\nincidence_angle = 0.4363323129985824\n\
                [objective]\nkind = \"maximize\"\nmode = 1\n[parametrization]\nmodes = 2\n\
                [method]\nname = \"bfgs_id\"\nseed = 3\n[tolerances]\nmax_iterations = 3\n";
    let cfg = write_config(dir.path(), "opt.toml", text);
    let mut traces = Vec::new();
    for run in ["a", "b"] {
        let sub = dir.path().join(run);
        std::fs::create_dir(&sub).unwrap();
        let out = grating(&sub, &["optimize", cfg.to_str().unwrap(), "--no-timing"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        traces.push(std::fs::read(sub.join("trace.csv")).unwrap());
        assert!(sub.join("profile.toml").exists());
    }
    assert_eq!(traces[0], traces[1]);
    let trace = rows(&dir.path().join("a/trace.csv"));
    assert_eq!(trace.len(), 4);
}

#[test]
fn stationary_start_takes_no_iterations() {
    let dir = TempDir::new().unwrap();
    let text = "[physics]\nwavenumber = 20.0\nincidence_angle = 0.3\n\
                [objective]\nkind = \"maximize\"\nmode = 0\n[parametrization]\nmodes = 2\n\
                [profile]\nsin = [0.0, 0.0]\ncos = [0.0, 0.0]\n";
    let cfg = write_config(dir.path(), "flat_opt.toml", text);
    assert!(grating(dir.path(), &["optimize", cfg.to_str().unwrap()]).status.success());
    assert_eq!(rows(&dir.path().join("trace.csv")).len(), 1);
}

#[test]
fn zero_perturbation_changes_nothing() {
    let dir = TempDir::new().unwrap();
    let text = "[physics]\nwavenumber = 20.0\nincidence_angle = 0.3\n\
                [objective]\nkind = \"maximize\"\nmode = 1\n\
                [profile]\nsin = [0.04, 0.01]\ncos = [-0.02, 0.01]\n";
    let cfg = write_config(dir.path(), "p.toml", text);
    let out = grating(dir.path(), &["perturb", cfg.to_str().unwrap(), "--delta", "0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("perturb.csv")).unwrap();
    let base: f64 = text.lines().find_map(|l| l.split("base=").nth(1)).unwrap().trim().parse().unwrap();
    let effs: Vec<f64> = rows(&dir.path().join("perturb.csv")).iter().map(|r| r[3].parse().unwrap()).collect();
    assert_eq!(effs.len(), 8);
    assert!(effs.iter().all(|e| *e == base));
}

#[test]
fn sweep_writes_rows_and_plot() {
    let dir = TempDir::new().unwrap();
    let text = "[physics]\nwavelength = 300.0\nperiod = 1667.0\nlittrow_order = 1\n\
                [objective]\nkind = \"maximize\"\nmode = 1\n\
                [profile]\nsin = [0.03]\ncos = [0.01]\n\
                [sweep]\nwavelength_min = 290.0\nwavelength_max = 310.0\nsamples = 3\nlittrow = true\n";
    let cfg = write_config(dir.path(), "s.toml", text);
    let out = grating(dir.path(), &["sweep", cfg.to_str().unwrap(), "--plot"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(rows(&dir.path().join("sweep.csv")).len(), 3);
    let svg = std::fs::read_to_string(dir.path().join("sweep.svg")).unwrap();
    assert!(svg.contains("<svg"));
}

#[test]
fn invalid_thread_count_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "flat.toml", FLAT);
    let out = Command::new(env!("CARGO_BIN_EXE_grating"))
        .args(["solve", cfg.to_str().unwrap(), "--out"])
        .arg(dir.path())
        .env("GRATING_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
