use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn critnorm(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_critnorm"))
        .args(args)
        .current_dir(dir)
        .env_remove("CRITNORM_OUT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn zero_data_gives_zero_norms() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "z.cfg", "data = zero\nn = 16\n");
    let o = critnorm(&["norms-suite", "--config", &cfg, "--out", "z"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&tmp.path().join("z/norms.csv"));
    assert!(!r.is_empty());
    for row in r {
        assert_eq!(row[1].parse::<f64>().unwrap(), 0.0, "{row:?}");
    }
}

#[test]
fn default_ledger_has_one_finite_row_per_scale() {
    let tmp = TempDir::new().unwrap();
    let o = critnorm(&["ckn-ledger", "--out", "l"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&tmp.path().join("l/ledger.csv"));
    assert_eq!(r.iter().map(|row| row[0].as_str()).collect::<Vec<_>>(), ["2", "3", "4", "5"]);
    for row in &r {
        for cell in &row[1..row.len() - 1] {
            assert!(cell.parse::<f64>().unwrap().is_finite());
        }
    }
    let manifest = fs::read_to_string(tmp.path().join("l/manifest.txt")).unwrap();
    assert!(manifest.starts_with("experiment=ckn-ledger\n"));
    assert!(manifest.contains("file.ledger.csv.sha256="));
    assert!(manifest.contains("check.ledger_targets=pass"));
}

#[test]
fn bad_configs_exit_2_without_output() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        ("malformed.cfg", "n 16\n"),
        ("unknown.cfg", "n = 16\nwobble = 1\n"),
        ("odd.cfg", "n = 15\n"),
        ("mismatch.cfg", "experiment = smallness\n"),
    ];
    for (name, text) in cases {
        let cfg = write(tmp.path(), name, text);
        let o = critnorm(&["norms-suite", "--config", &cfg, "--out", "bad"], tmp.path());
        assert_eq!(code(&o), 2, "{name}");
        assert!(!tmp.path().join("bad").exists(), "{name}");
    }
    assert_eq!(code(&critnorm(&["run", "--out", "bad"], tmp.path())), 2);
    assert_eq!(code(&critnorm(&["norms-suite", "--workers", "0"], tmp.path())), 2);
    assert!(!tmp.path().join("bad").exists());
}

#[test]
fn runs_are_deterministic() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "r.cfg", "experiment = norms-suite\ndata = random\nn = 16\n");
    for out in ["a", "b"] {
        assert_eq!(code(&critnorm(&["run", "--config", &cfg, "--out", out, "--seed", "7"], tmp.path())), 0);
    }
    for f in ["norms.csv", "manifest.txt"] {
        let a = fs::read(tmp.path().join("a").join(f)).unwrap();
        assert_eq!(a, fs::read(tmp.path().join("b").join(f)).unwrap(), "{f}");
    }
    assert_eq!(code(&critnorm(&["run", "--config", &cfg, "--out", "c", "--seed", "8"], tmp.path())), 0);
    assert_ne!(fs::read(tmp.path().join("a/norms.csv")).unwrap(), fs::read(tmp.path().join("c/norms.csv")).unwrap());
}

#[test]
fn compare_flags_perturbations_and_missing_files() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "c.cfg", "n = 16\n");
    assert_eq!(code(&critnorm(&["norms-suite", "--config", &cfg, "--out", "gold"], tmp.path())), 0);
    assert_eq!(code(&critnorm(&["norms-suite", "--config", &cfg, "--out", "art"], tmp.path())), 0);
    let same = critnorm(&["compare", "art", "gold"], tmp.path());
    assert_eq!(code(&same), 0);
    assert!(same.stdout.is_empty());

    let path = tmp.path().join("art/norms.csv");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let mut cells: Vec<String> = lines[1].split(',').map(str::to_string).collect();
    let v: f64 = cells[1].parse().unwrap();
    cells[1] = format!("{:e}", v * (1.0 + 1e-6));
    lines[1] = cells.join(",");
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let diff = critnorm(&["compare", "art", "gold"], tmp.path());
    assert_eq!(code(&diff), 1);
    assert_eq!(String::from_utf8_lossy(&diff.stdout).lines().count(), 1);
    assert_eq!(code(&critnorm(&["compare", "art", "gold", "--rtol", "1e-5"], tmp.path())), 0);

    fs::remove_file(&path).unwrap();
    let missing = critnorm(&["compare", "art", "gold"], tmp.path());
    assert_eq!(code(&missing), 1);
    assert!(String::from_utf8_lossy(&missing.stdout).contains("missing"));
    assert_eq!(code(&critnorm(&["compare", "art", "nowhere"], tmp.path())), 2);
}

#[test]
fn environment_overrides_output_flag() {
    let tmp = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_critnorm"))
        .args(["norms-suite", "--out", "flag"])
        .current_dir(tmp.path())
        .env("CRITNORM_OUT", tmp.path().join("env"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(tmp.path().join("env/norms.csv").exists());
    assert!(!tmp.path().join("flag").exists());
}
