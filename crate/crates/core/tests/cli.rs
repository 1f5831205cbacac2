use std::path::Path;
use std::process::{Command, Output};

use lapdiff::output::read_table;
use tempfile::TempDir;

fn lapdiff(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lapdiff"))
        .args(args)
        .current_dir(dir)
        .env_remove("LAPDIFF_SEED")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.toml");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL: &str = "vehicles = 5\nhorizon = 8\niterations = 10\n";

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn run_writes_all_artifacts() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = lapdiff(&["run", "--config", &cfg, "--out", "res"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let res = tmp.path().join("res");
    for f in ["amsd.csv", "lmse.csv", "cdf.csv", "summary.json", "manifest.json"] {
        assert!(res.join(f).is_file(), "missing {f}");
    }
    let lmse = read_table(&res.join("lmse.csv")).unwrap();
    assert_eq!(lmse.header, ["t", "gps", "cll", "gllms", "gllme", "glcg"]);
    assert_eq!(lmse.rows.len(), 8);
    let amsd = read_table(&res.join("amsd.csv")).unwrap();
    assert_eq!(amsd.rows.len(), 10);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(res.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn algorithm_subset_limits_columns() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = lapdiff(&["run", "--config", &cfg, "--algorithms", "cll", "--out", "res"], tmp.path());
    assert!(out.status.success());
    let lmse = read_table(&tmp.path().join("res/lmse.csv")).unwrap();
    assert_eq!(lmse.header, ["t", "gps", "cll"]);
}

#[test]
fn generate_writes_one_row_per_vehicle_and_step() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "vehicles = 3\nhorizon = 5\n");
    let out = lapdiff(&["generate", "--config", &cfg, "--out", "traces.csv"], tmp.path());
    assert!(out.status.success());
    let text = std::fs::read_to_string(tmp.path().join("traces.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,vehicle_id,x,y"));
    assert_eq!(lines.count(), 15);
}

#[test]
fn generated_traces_replay() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "vehicles = 4\nhorizon = 6\n");
    assert!(lapdiff(&["generate", "--config", &cfg, "--out", "traces.csv"], tmp.path())
        .status
        .success());
    let replay = tmp.path().join("replay.toml");
    std::fs::write(
        &replay,
        "iterations = 5\n[trajectory]\nsource = \"trace\"\ntrace = \"traces.csv\"\n",
    )
    .unwrap();
    let out = lapdiff(&["run", "--config", replay.to_str().unwrap(), "--out", "res"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_table(&tmp.path().join("res/lmse.csv")).unwrap().rows.len(), 6);
}

#[test]
fn invalid_input_exits_with_one() {
    let tmp = TempDir::new().unwrap();
    let zero = write_config(tmp.path(), "vehicles = 0\n");
    assert_eq!(lapdiff(&["generate", "--config", &zero, "--out", "x.csv"], tmp.path()).status.code(), Some(1));
    let typo = write_config(tmp.path(), "vehicels = 3\n");
    assert_eq!(lapdiff(&["run", "--config", &typo, "--out", "res"], tmp.path()).status.code(), Some(1));
    let bad_alg = lapdiff(&["run", "--algorithms", "gllx", "--out", "res"], tmp.path());
    assert_eq!(bad_alg.status.code(), Some(1));
    let missing = lapdiff(&["run", "--config", "nope.toml", "--out", "res"], tmp.path());
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn divergence_exits_with_two() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "vehicles = 5\nhorizon = 2\niterations = 2000\nalgorithms = [\"gllms\"]\n\
         [diffusion]\nstep_size = { fixed = 5.0 }\n",
    );
    let out = lapdiff(&["run", "--config", &cfg, "--out", "res"], tmp.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gllms"));
}

#[test]
fn existing_output_needs_force() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let args = ["run", "--config", cfg.as_str(), "--algorithms", "cll", "--out", "res"];
    assert!(lapdiff(&args, tmp.path()).status.success());
    assert_eq!(lapdiff(&args, tmp.path()).status.code(), Some(1));
    let mut forced = args.to_vec();
    forced.push("--force");
    assert!(lapdiff(&forced, tmp.path()).status.success());

    std::fs::write(tmp.path().join("t.csv"), "x").unwrap();
    let gen = ["generate", "--config", cfg.as_str(), "--out", "t.csv"];
    assert_eq!(lapdiff(&gen, tmp.path()).status.code(), Some(1));
}

#[test]
fn seed_precedence_is_file_then_env_then_flag() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &format!("seed = 11\n{SMALL}"));
    let base = ["run", "--config", cfg.as_str(), "--algorithms", "cll", "--out"];

    let run = |out: &str, env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_lapdiff"));
        cmd.args(base).arg(out).current_dir(tmp.path()).env_remove("LAPDIFF_SEED");
        if let Some(v) = env {
            cmd.env("LAPDIFF_SEED", v);
        }
        if let Some(v) = flag {
            cmd.args(["--seed", v]);
        }
        assert!(cmd.output().unwrap().status.success());
        summary(&tmp.path().join(out))["seed"].as_u64().unwrap()
    };
    assert_eq!(run("a", None, None), 11);
    assert_eq!(run("b", Some("22"), None), 22);
    assert_eq!(run("c", Some("22"), Some("33")), 33);

    let bad = Command::new(env!("CARGO_BIN_EXE_lapdiff"))
        .args(base)
        .arg("d")
        .current_dir(tmp.path())
        .env("LAPDIFF_SEED", "abc")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn sweep_writes_one_directory_per_value() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = lapdiff(
        &["sweep", "--config", &cfg, "--axis", "n", "--values", "3,4", "--algorithms", "cll,gllme", "--out", "sw"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sw = tmp.path().join("sw");
    for v in ["n=3", "n=4"] {
        assert!(sw.join(v).join("lmse.csv").is_file());
    }
    let text = std::fs::read_to_string(sw.join("sweep_summary.csv")).unwrap();
    assert!(text.starts_with("n,algorithm,reduction,mean_lmse,final_amsd"));
    assert_eq!(text.lines().count(), 1 + 2 * 2);

    let unknown = lapdiff(&["sweep", "--axis", "colour", "--values", "1", "--out", "sw2"], tmp.path());
    assert_eq!(unknown.status.code(), Some(1));
}
