use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn lsuq(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsuq"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn workdir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

const SMALL: &str = r#"
label = "small"
[geometry]
theta = 0.25
s = 4
[mesh]
level = 1
[forward]
N_list = [4, 8]
N_ref = 16
rules = ["rlr", "mc"]
shifts = 2
[bayes]
N = 16
angles = 64
"#;

#[test]
fn selftest_passes() {
    let out = lsuq(&["selftest"], &workdir("selftest"));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(text.contains("0 failed"));
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = lsuq(&["forward", "--config", "no/such/file.toml"], &workdir("missing"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no/such/file.toml"));
}

#[test]
fn unknown_key_and_subcommand_are_usage_errors() {
    let dir = workdir("unknown");
    fs::write(dir.join("bad.toml"), "[geometry]\ntheta = 0.25\nthetta = 1\n").unwrap();
    assert_eq!(lsuq(&["forward", "--config", "bad.toml"], &dir).status.code(), Some(1));
    assert_eq!(lsuq(&["frobnicate"], &dir).status.code(), Some(1));
    assert_eq!(lsuq(&["--help"], &dir).status.code(), Some(0));
}

#[test]
fn nominal_solve_writes_solution_and_observations() {
    let dir = workdir("solve");
    fs::write(dir.join("cfg.toml"), SMALL).unwrap();
    let out = lsuq(&["solve", "--config", "cfg.toml", "--y", "0,0", "--out", "sol.csv"], &dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sol = fs::read_to_string(dir.join("sol.csv")).unwrap();
    assert!(sol.starts_with("vertex,x,y,re,im\n"));
    assert_eq!(sol.lines().count(), 1 + 19);
    let obs = fs::read_to_string(dir.join("sol.obs.csv")).unwrap();
    assert_eq!(obs.lines().count(), 1 + 10);
    assert!(dir.join("sol.config_echo.toml").exists());
}

#[test]
fn forward_csv_layout_and_thread_independence() {
    let dir = workdir("forward");
    fs::write(dir.join("cfg.toml"), SMALL).unwrap();
    let mut csv = Vec::new();
    for threads in ["1", "3"] {
        let out = Command::new(env!("CARGO_BIN_EXE_lsuq"))
            .args(["forward", "--config", "cfg.toml", "--out", "fw.csv"])
            .env("LSUQ_THREADS", threads)
            .current_dir(&dir)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        csv.push(fs::read(dir.join("fw.csv")).unwrap());
    }
    assert_eq!(csv[0], csv[1]);
    let text = String::from_utf8(csv.remove(0)).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "rule,N,shift_count,error,seconds");
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert!(lines[1].starts_with("rlr,4,2,"));
    assert!(lines[3].starts_with("rlr,16,2,0.0"));
    assert!(lines[4].starts_with("mc,4,1,"));
    let slopes = fs::read_to_string(dir.join("fw.slopes.csv")).unwrap();
    assert!(slopes.starts_with("rule,slope\nrlr,"));
    let echo = fs::read_to_string(dir.join("fw.config_echo.toml")).unwrap();
    assert!(echo.contains("label = \"small\""));
}

#[test]
fn invert_writes_posterior_table() {
    let dir = workdir("invert");
    fs::write(dir.join("cfg.toml"), SMALL).unwrap();
    let out = lsuq(&["invert", "--config", "cfg.toml", "--out", "post.csv"], &dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.join("post.csv")).unwrap();
    assert!(text.starts_with("angle,prior_mean,posterior_mean,truth\n"));
    assert_eq!(text.lines().count(), 65);
}

#[test]
fn degenerate_sample_is_a_numerical_failure() {
    let dir = workdir("degenerate");
    let cfg = "[geometry]\ntheta = 3.0\ns = 2\n[mesh]\nlevel = 0\n[observation]\nobs_radius = 6.0\n\
               [forward]\nN_list = [4]\nN_ref = 8\nrules = [\"mc\"]\n";
    fs::write(dir.join("cfg.toml"), cfg).unwrap();
    let out = lsuq(&["forward", "--config", "cfg.toml", "--out", "fw.csv"], &dir);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("sample") && err.contains("degenerate"), "{err}");
}

#[test]
fn oracle_compare_and_qmc_gen_outputs() {
    let dir = workdir("oracle");
    let out = lsuq(&["oracle-compare", "--level", "2", "--out", "err.csv"], &dir);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.join("err.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "h,L2_error,H1_error");
    assert_eq!(lines.len(), 3);
    let out = lsuq(
        &["qmc-gen", "--rule", "lattice", "--n", "8", "--s", "3", "--generating-data-out", "z.txt", "--out", "p.csv"],
        &dir,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let points = fs::read_to_string(dir.join("p.csv")).unwrap();
    assert!(points.starts_with("i,t1,t2,t3\n0,0.0"));
    assert!(fs::read_to_string(dir.join("z.txt")).unwrap().starts_with("lattice 8 3"));
}

#[test]
fn shipped_configs_load() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let dir = workdir("configs");
    for entry in fs::read_dir(configs).unwrap() {
        let path = entry.unwrap().path();
        let out = lsuq(&["mesh-info", "--config", path.to_str().unwrap(), "--level", "0"], &dir);
        assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
    }
}
