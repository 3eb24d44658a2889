use std::fs;
use std::path::Path;
use std::process::Command;

use pcgl::cli::run;
use pcgl::config::RunConfig;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["pcgl"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn trace_column(path: &Path, col: usize) -> Vec<f64> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

#[test]
fn zero_field_gives_zero_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[grid]\nnodes = 15\n[scheme]\ndt = 0.01\nt_end = 0.1\n");
    let (code, _, err) = call(&["simulate", &cfg]);
    assert_eq!(code, 0, "{err}");
    let l2 = trace_column(&dir.path().join("out/trace.csv"), 2);
    assert_eq!(l2.len(), 11);
    assert!(l2.iter().all(|&x| x == 0.0));
    assert!(dir.path().join("out/snapshots/snap_000000.bin").exists());
}

#[test]
fn linear_mode_decays_like_discrete_exponential() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[grid]\nnodes = 63\n[scheme]\nkind = 'implicit'\ndt = 1e-3\nt_end = 0.2\nprox_tol = 1e-13\n\
         [initial]\nkind = 'mode'\nmodes = 1\n",
    );
    let (code, _, err) = call(&["simulate", &cfg]);
    assert_eq!(code, 0, "{err}");
    let l2 = trace_column(&dir.path().join("out/trace.csv"), 2);
    let h = 1.0 / 64.0;
    let eig = 4.0 / (h * h) * (std::f64::consts::PI * h / 2.0).sin().powi(2);
    let factor = 1.0 / (1.0 + 1e-3 * (eig + 1.0));
    for (n, &v) in l2.iter().enumerate() {
        let want = l2[0] * factor.powi(2 * n as i32);
        assert!((v - want).abs() <= 1e-9 * l2[0], "step {n}: {v} vs {want}");
    }
}

#[test]
fn malformed_key_exits_one_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[params]\nlambda = 1\nlamda = 2\n");
    let (code, _, err) = call(&["simulate", &cfg]);
    assert_eq!(code, 1);
    assert!(err.contains("lamda") && err.contains("line 3"), "{err}");
}

#[test]
fn check_region_verdicts() {
    let (code, out, _) =
        call(&["check-region", "--lambda", "1", "--kappa", "1", "--alpha", "1", "--beta", "1", "--q", "4"]);
    assert_eq!(code, 0);
    assert!(out.contains("inside") && out.contains("S3") && out.contains("delta"), "{out}");

    let (code, out, _) = call(&["check-region", "--alpha", "0", "--beta", "0", "--q", "4"]);
    assert_eq!(code, 0);
    assert!(out.contains("S1") && out.contains("S2"), "{out}");

    let (code, out, _) = call(&["check-region", "--alpha", "10", "--beta", "-10", "--q", "6"]);
    assert_eq!(code, 3);
    assert!(out.contains("outside") && out.contains("witness: none"), "{out}");

    let (code, _, _) = call(&["check-region", "--alpha", "ten"]);
    assert_eq!(code, 1);
}

#[test]
fn check_region_writes_raster() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("raster.csv");
    let (code, _, _) =
        call(&["check-region", "--q", "4", "--raster", path.to_str().unwrap(), "--extent", "3", "--steps", "5"]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(path).unwrap();
    assert_eq!(text.lines().next(), Some("x,y,inside,discriminant"));
    assert_eq!(text.lines().count(), 26);
}

#[test]
fn verify_identities_and_clarkson_pass() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[params]\nalpha = 0.5\nbeta = -0.5\nq = 3\n[grid]\nnodes = 31\n[verify]\nseed = 42\nsamples = 20\nsweep_samples = 2000\n",
    );
    let (code, out, err) = call(&["verify", &cfg, "--suite", "identities"]);
    assert_eq!(code, 0, "{out}{err}");
    assert!(dir.path().join("out/reports.csv").exists());
    let (code, out, err) = call(&["verify", &cfg, "--suite", "clarkson"]);
    assert_eq!(code, 0, "{out}{err}");
    let sweeps = fs::read_to_string(dir.path().join("out/sweeps.csv")).unwrap();
    assert!(sweeps.starts_with("check,p,q,samples,failures,min_margin"));
}

#[test]
fn energies_outside_region_is_not_claimed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[params]\nalpha = 10\nbeta = -10\nq = 6\n[grid]\nnodes = 15\n[scheme]\ndt = 1e-5\nt_end = 2e-4\n\
         [initial]\nkind = 'bump'\nwidth = 0.3\namplitude = 0.5\n",
    );
    let (code, out, err) = call(&["verify", &cfg, "--suite", "energies"]);
    assert_eq!(code, 0, "{out}{err}");
    assert!(out.contains("not claimed"), "{out}");
}

#[test]
fn unknown_suite_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let (code, _, err) = call(&["verify", &cfg, "--suite", "everything"]);
    assert_eq!(code, 1);
    assert!(err.contains("everything"));
}

#[test]
fn exhaustion_command_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[params]\nalpha = 0.5\nbeta = 0.5\nq = 4\n[grid]\nextent = 16\nnodes = 127\n\
         [scheme]\ndt = 0.01\nt_end = 0.2\n[initial]\nkind = 'bump'\nwidth = 1\n[exhaustion]\nwidths = [4, 8, 16]\n",
    );
    let (code, out, err) = call(&["exhaustion", &cfg]);
    assert_eq!(code, 0, "{out}{err}");
    let table = fs::read_to_string(dir.path().join("out/exhaustion.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    let (code, out, err) = call(&["verify", &cfg, "--suite", "exhaustion"]);
    assert_eq!(code, 0, "{out}{err}");
}

#[test]
fn effective_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("u0.csv"), "ix,u1,u2\n0,1,0\n1,0.5,0.25\n").unwrap();
    let cfg = write_config(
        dir.path(),
        "[params]\nalpha = 0.1\nq = 3\n[grid]\nnodes = 3\n[scheme]\ndt = 0.1\nt_end = 0.2\n\
         [initial]\nkind = 'file'\npath = 'u0.csv'\n[forcing]\nkind = 'noise'\nseed = 4\ncells = 2\n",
    );
    let (code, _, err) = call(&["simulate", &cfg]);
    assert_eq!(code, 0, "{err}");
    let original = RunConfig::load(Path::new(&cfg)).unwrap();
    let echoed = RunConfig::load(&dir.path().join("out/effective.toml")).unwrap();
    assert_eq!(original, echoed);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[params]\nalpha = 0.5\nbeta = 0.5\nq = 4\n[grid]\ndim = 2\nnodes = 9\n[verify]\nsamples = 16\n\
         [initial]\nkind = 'noise'\nseed = 3\n[scheme]\ndt = 1e-3\nt_end = 0.01\n",
    );
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("t{threads}"));
        for args in [vec!["simulate"], vec!["verify", "--suite", "identities"]] {
            let status = Command::new(env!("CARGO_BIN_EXE_pcgl"))
                .args(&args)
                .arg(&cfg)
                .arg("--out")
                .arg(&out)
                .env("PCGL_THREADS", threads)
                .output()
                .unwrap();
            assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        }
        outputs.push((fs::read(out.join("trace.csv")).unwrap(), fs::read(out.join("reports.csv")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}
