use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use schnak_core::io::NodalDump;

fn schnak(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_schnak")).args(args).output().expect("run schnak")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn forward(dir: &Path, extra: &[&str]) -> Output {
    let out = dir.join("snap.csv");
    let mut args = vec![
        "forward", "--a", "0.126779", "--b", "0.792366", "--gamma", "150", "--n", "6", "--T", "0.2", "--dt", "5e-4",
        "--out",
    ];
    let out = out.to_str().unwrap().to_owned();
    args.push(&out);
    args.extend_from_slice(extra);
    schnak(&args)
}

#[test]
fn forward_writes_a_dump_and_a_vtk_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = forward(dir.path(), &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let dump = NodalDump::read(&dir.path().join("snap.csv")).unwrap();
    assert_eq!(dump.n, 6);
    assert_eq!(dump.names, ["u", "v"]);
    assert!(dir.path().join("snap.vtk").exists());
}

#[test]
fn invalid_configuration_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    // Missing required value.
    let out = schnak(&["forward", "--a", "0.1", "--b", "0.9", "--out", "x.csv"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));
    // Unstable explicit reaction step.
    let out = forward(dir.path(), &["--dt", "2e-3"]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    // Unknown scheme and malformed levels.
    let out = schnak(&["converge", "--scheme", "rk4", "--beta", "1e-2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let out = schnak(&["converge", "--beta", "1e-2", "--levels", "0..1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    // Malformed config file.
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "gamma 150\n").unwrap();
    let out = schnak(&["--config", cfg.to_str().unwrap(), "forward", "--a", "0.1", "--b", "0.9", "--out", "x.csv"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn missing_target_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = schnak(&[
        "identify", "--target", "/nonexistent/t.csv", "--beta", "1e-2", "--gamma", "150", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn identify_merges_config_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&forward(dir.path(), &[])), 0);
    let cfg = dir.path().join("run.conf");
    let target = dir.path().join("snap.csv");
    let out_dir = dir.path().join("id");
    fs::write(
        &cfg,
        format!(
            "# identification\ntarget = {}\nbeta = 1e-2\ngamma = 150\nT = 0.2\nnt = 40\nout = {}\n",
            target.display(),
            out_dir.display()
        ),
    )
    .unwrap();
    // The flag overrides the file's step count.
    let out = schnak(&["--config", cfg.to_str().unwrap(), "identify", "--nt", "10", "--snapshots", "0.1,0.2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let means = fs::read_to_string(out_dir.join("control_means.csv")).unwrap();
    assert_eq!(means.lines().count(), 1 + 10);
    let costs = fs::read_to_string(out_dir.join("costs.csv")).unwrap();
    assert!(costs.starts_with("beta,u_misfit,v_misfit,a_norm,b_norm,minres_mean,sqp_iters,cpu_s\n"));
    let log = fs::read_to_string(out_dir.join("run.jsonl")).unwrap();
    for line in log.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["minres_iterations"].is_u64());
    }
    let vtks = fs::read_dir(&out_dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "vtk"))
        .count();
    assert_eq!(vtks, 2);
}
