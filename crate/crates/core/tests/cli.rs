use std::fs;
use std::path::Path;
use std::process::Command;

fn kp2lab(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_kp2lab"))
        .args(args)
        .output()
        .expect("binary runs")
        .status
        .code()
        .expect("exit code")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

const SHORT_KERNELS: &str = "[kernels]\nt_min = 10.0\nt_max = 40.0\nsamples = 4\n";

#[test]
fn verify_eigen_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "eigen.toml", "[eigen]\npoints = 1024\n");
    let out = dir.path().join("out");
    assert_eq!(kp2lab(&["verify-eigen", "--config", &cfg, "--out", out.to_str().unwrap()]), 0);
    let csv = fs::read_to_string(out.join("modes.csv")).unwrap();
    assert!(csv.lines().count() > 3);
}

#[test]
fn kernels_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "k.toml", SHORT_KERNELS);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        kp2lab(&["kernels", "--config", &cfg, "--out", out.to_str().unwrap()]);
    }
    for name in ["kernels.csv", "slopes.csv"] {
        let (x, y) = (fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap());
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name} differs between runs");
    }
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "k.toml", &format!("{SHORT_KERNELS}slope_band = 0.0\n"));
    let out = dir.path().join("out");
    assert_eq!(kp2lab(&["kernels", "--config", &cfg, "--out", out.to_str().unwrap()]), 1);
}

#[test]
fn bad_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let missing = dir.path().join("missing.toml");
    assert_eq!(kp2lab(&["kernels", "--config", missing.to_str().unwrap(), "--out", out]), 2);
    let big = write_config(dir.path(), "big.toml", "[perturbation]\nepsilon = 0.5\n");
    assert_eq!(kp2lab(&["simulate", "--config", &big, "--out", out]), 2);
    let unknown = write_config(dir.path(), "unknown.toml", "[grid]\nnz = 4\n");
    assert_eq!(kp2lab(&["simulate", "--config", &unknown, "--out", out]), 2);
}
