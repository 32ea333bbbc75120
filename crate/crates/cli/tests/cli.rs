//! End-to-end checks of the command-line interface and its exit codes.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_parocp"))
}

fn temp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("parocp_cli_{}_{}", std::process::id(), name));
    p
}

#[test]
fn gen_rank1_cpd_roundtrip() {
    let ten = temp_path("m222.ten");
    let trace = temp_path("trace.csv");

    let out = bin()
        .args(["gen", "mult", "2", "2", "2", "-o"])
        .arg(&ten)
        .output()
        .unwrap();
    assert!(out.status.success(), "{:?}", out);

    // a .ten file round-trips through the library loader
    let t = parocp::tensor::DenseTensor::load(&ten).unwrap();
    assert_eq!(t.shape(), &[4, 4, 4]);
    assert_eq!(t.data().iter().filter(|&&v| v == 1.0).count(), 8);

    // the multiplication tensor is far from rank 1: budget exhausted
    let out = bin()
        .args(["rank1", "-i"])
        .arg(&ten)
        .args([
            "--algo",
            "roro",
            "--init",
            "ttsvd-best",
            "--max-iters",
            "50",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{:?}", out);

    // full rank-7 fit converges and writes a trace
    let out = bin()
        .args(["cpd", "-i"])
        .arg(&ten)
        .args([
            "--rank",
            "7",
            "--algo",
            "paro",
            "--epc",
            "--seed",
            "3",
            "--tol",
            "1e-6",
            "--max-iters",
            "3000",
            "--trace",
        ])
        .arg(&trace)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
    let csv = std::fs::read_to_string(&trace).unwrap();
    assert!(csv.starts_with("iter,relative_error,mu,gamma_r,elapsed_ms"));
    assert!(csv.lines().count() > 2);

    // too-small iteration budget exits 2
    let out = bin()
        .args(["cpd", "-i"])
        .arg(&ten)
        .args([
            "--rank",
            "7",
            "--algo",
            "als",
            "--seed",
            "3",
            "--max-iters",
            "5",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{:?}", out);

    // missing input exits 1
    let out = bin()
        .args(["rank1", "-i", "/nonexistent/input.ten"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{:?}", out);

    std::fs::remove_file(&ten).ok();
    std::fs::remove_file(&trace).ok();
}

#[test]
fn gen_random_collinear_and_experiment() {
    let ten = temp_path("coll.ten");
    let spec = temp_path("study.spec");
    let csv = temp_path("study.csv");

    let out = bin()
        .args(["gen", "random", "--dims", "4,4,4", "--rank", "4"])
        .args([
            "--collinear",
            "0.95,0.999",
            "--blocks",
            "2,2",
            "--seed",
            "11",
            "-o",
        ])
        .arg(&ten)
        .output()
        .unwrap();
    assert!(out.status.success(), "{:?}", out);
    let t = parocp::tensor::DenseTensor::load(&ten).unwrap();
    assert_eq!(t.shape(), &[4, 4, 4]);

    std::fs::write(
        &spec,
        format!(
            "kind success-ratio\n\
             mode rank1\n\
             tensor random 4,4,4\n\
             rank 4\n\
             runs 8\n\
             variants als+svd roro+svd\n\
             success-threshold 1e-6\n\
             failure-threshold 1e-2\n\
             seed 5\n\
             max-iters 300\n\
             delta-tol 1e-12\n\
             out {}\n",
            csv.display()
        ),
    )
    .unwrap();

    let out = bin()
        .args(["experiment", "success-ratio", "--spec"])
        .arg(&spec)
        .output()
        .unwrap();
    assert!(out.status.success(), "{:?}", out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("variant,success_ratio,failure_ratio"));
    let raw = std::fs::read_to_string(&csv).unwrap();
    assert!(raw.starts_with("run,als+svd,roro+svd"));
    assert_eq!(raw.lines().count(), 9);

    // kind mismatch errors out
    let out = bin()
        .args(["experiment", "convergence", "--spec"])
        .arg(&spec)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    std::fs::remove_file(&ten).ok();
    std::fs::remove_file(&spec).ok();
    std::fs::remove_file(&csv).ok();
}
