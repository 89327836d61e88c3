use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use efx_cli::formats::{parse_instance, render_allocation, render_instance};
use efx_core::fixtures::*;
use efx_core::model::Allocation;
use serde_json::Value;
use tempfile::TempDir;

fn efx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_efx"))
        .args(args)
        .env_remove("EFX_ORACLE_CAP")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p: PathBuf = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

struct Setup {
    dir: TempDir,
    instance: String,
}

fn inheritance_files() -> Setup {
    let dir = TempDir::new().unwrap();
    let instance = write(dir.path(), "inst.toml", &render_instance(&inheritance()));
    Setup { dir, instance }
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stderr));
    })
}

#[test]
fn solve_with_the_oracle_seed() {
    let s = inheritance_files();
    let out = efx(&["solve", &s.instance, "--trace"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    // the oracle's own argmax is ({car,ring},{painting},{necklace})
    assert_eq!(r["output"]["donated"], serde_json::json!([RING]));
    assert_eq!(r["welfare"]["oracle"], "1539/1");
    assert_eq!(r["welfare"]["output"], "810/1");
    assert_eq!(r["efficiency"]["ratio_vs_oracle"], "19/10");
    assert_eq!(r["fairness"]["efx"]["holds"], true);
    assert_eq!(r["subset_of_input"], true);
    assert_eq!(r["rounds"], 2);
    assert_eq!(r["trace_text"].as_array().unwrap().len(), 2);
}

#[test]
fn solve_with_the_listed_optimum_as_seed() {
    let s = inheritance_files();
    let seed = write(
        s.dir.path(),
        "x.toml",
        &render_allocation(&inheritance_max_nash()),
    );
    let r = json(&efx(&[
        "solve",
        &s.instance,
        "--seed-method",
        "file",
        "--seed-file",
        &seed,
    ]));
    assert_eq!(r["output"]["donated"], serde_json::json!([PAINTING]));
    assert_eq!(r["efficiency"]["ratio_vs_oracle"], "19/10");
    assert_eq!(r["efficiency"]["guaranteed"], true);
}

#[test]
fn alg2_matches_alg1_on_the_optimum() {
    let s = inheritance_files();
    let a1 = json(&efx(&["solve", &s.instance]));
    let a2 = json(&efx(&["solve", &s.instance, "--algorithm", "alg2"]));
    assert_eq!(a1["output"], a2["output"]);
    assert_eq!(a2["restarts"], 0);
    assert_eq!(a2["efficiency"]["bound_holds"], true);
}

#[test]
fn non_optimal_seed_file_is_flagged() {
    let s = inheritance_files();
    let x = Allocation::from_lists(&[vec![NECKLACE], vec![RING], vec![CAR, PAINTING]], 4).unwrap();
    let seed = write(s.dir.path(), "seed.toml", &render_allocation(&x));
    let out = efx(&[
        "solve",
        &s.instance,
        "--seed-method",
        "file",
        "--seed-file",
        &seed,
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["efficiency"]["guaranteed"], false);
    assert!(r["efficiency"]["note"]
        .as_str()
        .unwrap()
        .contains("efficiency bound not guaranteed"));
}

#[test]
fn verify_exit_codes_and_witness() {
    let s = inheritance_files();
    let good = write(
        s.dir.path(),
        "good.toml",
        &render_allocation(&inheritance_efx()),
    );
    let bad = write(
        s.dir.path(),
        "bad.toml",
        &render_allocation(&inheritance_max_nash()),
    );
    assert_eq!(
        efx(&["verify", &s.instance, &good, "--checks", "efx"])
            .status
            .code(),
        Some(0)
    );
    let out = efx(&["verify", &s.instance, &bad, "--checks", "efx,ef1"]);
    assert_eq!(out.status.code(), Some(1));
    let r = json(&out);
    let w = &r["checks"][0]["witness"];
    assert_eq!(
        (w["envier"].clone(), w["envied"].clone(), w["item"].clone()),
        (ALICE.into(), BOB.into(), PAINTING.into())
    );
    assert_eq!(r["checks"][1]["pass"], true);
}

#[test]
fn ratio_check_on_an_alg1_output() {
    let s = inheritance_files();
    let out_path = s.dir.path().join("report.json");
    let out_path = out_path.to_str().unwrap();
    assert_eq!(
        efx(&["solve", &s.instance, "--out", out_path])
            .status
            .code(),
        Some(0)
    );
    let r: Value = serde_json::from_str(&std::fs::read_to_string(out_path).unwrap()).unwrap();
    let y: efx_cli::formats::AllocationDoc = serde_json::from_value(r["output"].clone()).unwrap();
    let y = y.to_allocation(&inheritance()).unwrap();
    let y_path = write(s.dir.path(), "y.toml", &render_allocation(&y));
    let out = efx(&[
        "verify",
        &s.instance,
        &y_path,
        "--checks",
        "ratio,efx,pareto",
    ]);
    let r = json(&out);
    assert_eq!(out.status.code(), Some(0), "{r}");
}

#[test]
fn replay_reproduces_reports() {
    let s = inheritance_files();
    let good = write(
        s.dir.path(),
        "good.toml",
        &render_allocation(&inheritance_efx()),
    );
    let report = s.dir.path().join("r.json");
    let report = report.to_str().unwrap();
    for args in [
        vec!["solve", s.instance.as_str(), "--trace"],
        vec![
            "solve",
            s.instance.as_str(),
            "--algorithm",
            "alg2",
            "--seed-method",
            "local-search",
        ],
        vec![
            "verify",
            s.instance.as_str(),
            good.as_str(),
            "--checks",
            "ef1,efx,pareto",
        ],
    ] {
        let mut args = args.clone();
        args.extend(["--out", report]);
        let first = efx(&args);
        assert_eq!(
            first.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&first.stderr)
        );
        let out = efx(&["replay", report]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert_eq!(out.stdout, std::fs::read(report).unwrap());
    }
    let text = std::fs::read_to_string(report)
        .unwrap()
        .replace("\"ef1\"", "\"ef\"");
    std::fs::write(report, text).unwrap();
    assert_eq!(efx(&["replay", report]).status.code(), Some(1));
}

#[test]
fn generate_is_deterministic() {
    let a = efx(&["generate", "random", "--n", "3", "--m", "5", "--seed", "7"]);
    let b = efx(&[
        "generate",
        "random",
        "--n",
        "3",
        "--m",
        "5",
        "--rng-seed",
        "7",
    ]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let inst = parse_instance("-", std::str::from_utf8(&a.stdout).unwrap()).unwrap();
    assert_eq!((inst.agents(), inst.items()), (3, 5));

    let lb = efx(&["generate", "lower-bound", "--n", "2", "--eps", "1/10"]);
    let text = String::from_utf8(lb.stdout).unwrap();
    assert!(text.contains("\"1/40\""), "{text}");

    let dir = TempDir::new().unwrap();
    let path = dir.path().join("lm.toml");
    let out = efx(&[
        "generate",
        "large-market",
        "--n",
        "3",
        "--m",
        "30",
        "--eps",
        "1/4",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .starts_with("sha256:"));
}

#[test]
fn error_exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = write(
        dir.path(),
        "bad.toml",
        "agents = 1\nitems = 1\nvaluations = [[\"0\"]]\n",
    );
    let out = efx(&["solve", &bad]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    assert_eq!(efx(&["solve"]).status.code(), Some(2));
    assert_eq!(
        efx(&["solve", "/nonexistent/x.toml"]).status.code(),
        Some(3)
    );

    let s = inheritance_files();
    let out = efx(&["--oracle-cap", "10", "solve", &s.instance]);
    assert_eq!(out.status.code(), Some(4));
    let out = Command::new(env!("CARGO_BIN_EXE_efx"))
        .args(["solve", &s.instance])
        .env("EFX_ORACLE_CAP", "10")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(
        efx(&["generate", "lower-bound", "--n", "2", "--eps", "3/2"])
            .status
            .code(),
        Some(3)
    );
}
