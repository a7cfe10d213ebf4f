use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn g2flow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_g2flow")).args(args).env_remove("G2FLOW_TOL").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("UTF-8 stdout")
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("UTF-8 path")
}

#[test]
fn verify_orbit_models() {
    for m in ["g2-su3", "su3-t2", "su3-t123", "sp2"] {
        let o = g2flow(&["verify-orbit", m]);
        assert_eq!(code(&o), 0, "{m}: {}", stdout(&o));
        assert!(stdout(&o).ends_with("result: PASS\n"));
    }
    let sp2 = stdout(&g2flow(&["verify-orbit", "sp2"]));
    assert!(sp2.contains("PASS dβ=−2ω1ω2−ω2²"));
    assert!(sp2.contains("PASS dω1=½α"));
    assert!(sp2.contains("PASS dω2=α"));
    let g2 = stdout(&g2flow(&["verify-orbit", "g2-su3"]));
    for rel in ["dω=3α", "⋆₀α=β", "dβ=−2ω²"] {
        assert!(g2.contains(&format!("PASS {rel}")), "{rel}");
    }
    assert_eq!(code(&g2flow(&["verify-orbit", "bogus"])), 1);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&g2flow(&[])), 1);
    assert_eq!(code(&g2flow(&["solve", "flat", "--bogus"])), 1);
    assert_eq!(code(&g2flow(&["solve", "weak-g2", "--r-max", "3"])), 1);
    assert_eq!(code(&g2flow(&["solve", "nonesuch"])), 1);
    assert_eq!(code(&g2flow(&["solve", "cosymplectic", "--theta", "sin(t"])), 1);
    assert_eq!(code(&g2flow(&["table", "e8"])), 1);
    assert_eq!(code(&g2flow(&["--help"])), 0);
}

#[test]
fn solve_examples() {
    let dir = TempDir::new().unwrap();
    let bs = dir.path().join("bs.json");
    let o = g2flow(&["solve", "bryant-salamon-cp2", "--nu", "1", "--r-max", "10", "-o", path_str(&bs)]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    // The saved file has no derivatives and starts on the collapsed orbit.
    let o = g2flow(&["check", path_str(&bs), "--class", "holonomy"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));

    let o = g2flow(&["solve", "weak-g2", "--lambda", "4", "--t-max", "3.14159"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));

    let o = g2flow(&["solve", "cosymplectic", "--mu", "0", "--nu", "1", "--theta", "t", "--t-max", "2"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("first-integral drift"));
}

#[test]
fn branch_halt_exits_three() {
    let o = g2flow(&["solve", "cosymplectic", "--mu", "0.5", "--nu", "1", "--theta", "pi", "--t-max", "2"]);
    assert_eq!(code(&o), 3);
    let text = stdout(&o);
    assert!(text.contains("status: halted"));
    assert!(text.contains("halted at f1^2=mu t=3.94"));
}

#[test]
fn check_flat_file() {
    let dir = TempDir::new().unwrap();
    let flat = dir.path().join("flat.json");
    assert_eq!(code(&g2flow(&["solve", "flat", "-o", path_str(&flat)])), 0);
    let o = g2flow(&["check", path_str(&flat), "--class", "symplectic"]);
    assert_eq!(code(&o), 0);
    let o = g2flow(&["check", path_str(&flat), "--class", "weak", "--lambda", "1"]);
    assert_eq!(code(&o), 2);
    // The Inv⁴ relation −2f³ sin θ = λf⁴ dominates.
    assert!(stdout(&o).contains("dominant: dphi-λ*phi[ω2ω3]"), "{}", stdout(&o));

    let text = std::fs::read_to_string(&flat).unwrap();
    let truncated = dir.path().join("truncated.json");
    std::fs::write(&truncated, &text[..text.len() / 2]).unwrap();
    let o = g2flow(&["check", path_str(&truncated), "--class", "symplectic"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("malformed JSON"));
    assert_eq!(code(&g2flow(&["check", "/nonexistent/p.json", "--class", "symplectic"])), 1);
}

#[test]
fn csv_profiles_check_like_json() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("ws.csv");
    assert_eq!(code(&g2flow(&["solve", "weak-su3", "-o", path_str(&csv)])), 0);
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("# model: su3-t2\nt,f1,f2,f3,theta\n"));
    let o = g2flow(&["check", path_str(&csv), "--class", "weak", "--lambda", "-2"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn tables_match_golden_files() {
    for s in ["g2", "su3", "sp2"] {
        for fmt in ["csv", "json"] {
            let o = g2flow(&["table", s, "--format", fmt]);
            assert_eq!(code(&o), 0);
            let want = std::fs::read(golden(&format!("table_{s}.{fmt}"))).unwrap();
            assert_eq!(o.stdout, want, "table {s} {fmt}");
        }
    }
    let rows = stdout(&g2flow(&["table", "g2", "--format", "csv"])).lines().count() - 1;
    assert_eq!(rows, 8);
}

#[test]
fn classify_examples() {
    let dir = TempDir::new().unwrap();
    let bs = dir.path().join("bs-cp2.json");
    assert_eq!(code(&g2flow(&["solve", "bs-cp2", "--samples", "2001", "-o", path_str(&bs)])), 0);
    let o = g2flow(&["classify", path_str(&bs), "--class", "holonomy"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).starts_with("⟨CP(2)₁ | F₁,₂\n"));
    assert!(stdout(&o).contains("candidate: ⟨CP(2)₁ | F₁,₂ (half-open, Complete)"));

    let ws = dir.path().join("weak-su3.json");
    assert_eq!(code(&g2flow(&["solve", "weak-su3", "-o", path_str(&ws)])), 0);
    let o = g2flow(&["classify", path_str(&ws), "--class", "weak"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).starts_with("no catalog match (incomplete)\n"));

    // A weak profile is not symplectic, so classification is refused.
    let o = g2flow(&["classify", path_str(&ws), "--class", "holonomy"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let args = |p: &Path| {
        vec!["solve".to_string(), "holonomy-triaxial".into(), "--mu".into(), "0.5".into(), "-o".into(), p.display().to_string()]
    };
    let oa = Command::new(env!("CARGO_BIN_EXE_g2flow")).args(args(&a)).output().unwrap();
    let ob = Command::new(env!("CARGO_BIN_EXE_g2flow")).args(args(&b)).output().unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(stdout(&oa).replace(path_str(&a), ""), stdout(&ob).replace(path_str(&b), ""));
}

#[test]
fn tolerance_from_environment() {
    let run = |tol: &str| {
        Command::new(env!("CARGO_BIN_EXE_g2flow")).args(["solve", "flat"]).env("G2FLOW_TOL", tol).output().unwrap()
    };
    assert_eq!(code(&run("1e-30")), 2);
    assert_eq!(code(&run("1e-6")), 0);
    assert_eq!(code(&run("loose")), 1);
    let flag = Command::new(env!("CARGO_BIN_EXE_g2flow"))
        .args(["--tol", "1e-6", "solve", "flat"])
        .env("G2FLOW_TOL", "1e-30")
        .output()
        .unwrap();
    assert_eq!(code(&flag), 0);
}

#[test]
fn sweep_is_ordered() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sweep.json");
    let o = g2flow(&[
        "solve",
        "cosymplectic",
        "--sweep",
        "mu=0:0.5:0.25",
        "--nu",
        "1",
        "--theta",
        "sin(t)",
        "-o",
        path_str(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let lines: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 3);
    for (k, mu) in ["0.0000000000000000e0", "2.5000000000000000e-1", "5.0000000000000000e-1"].iter().enumerate() {
        assert!(lines[k].starts_with(&format!("[{k}] mu={mu}: completed")), "{}", lines[k]);
        assert!(dir.path().join(format!("sweep.{k:03}.json")).exists());
    }
    assert_eq!(code(&g2flow(&["solve", "flat", "--sweep", "mu=0:1:0.5"])), 1);
}

#[test]
fn json_reports_parse() {
    let o = g2flow(&["--json", "solve", "weak-g2"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["family"], "weak-g2");
    assert_eq!(v["passes"], true);
}

#[test]
fn hypersurface_profiles_are_cosymplectic() {
    let o = g2flow(&["hypersurface", "--r", "1 + 0.3*sin(s)", "--s-min", "0", "--s-max", "2"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_eq!(code(&g2flow(&["hypersurface", "--r", "s - 1"])), 1);
}
