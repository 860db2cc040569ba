use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rase-sim")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    let text = format!("out_dir = {:?}\njobs = 1\nn_z = 11\nn_delta = 21\ndt = 0.01\nsample_interval = 0.1\n{body}", dir.join("out"));
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn list_names_every_experiment() {
    let out = sim(&["--list"]);
    assert!(out.status.success());
    let names: Vec<String> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| l.split('\t').next().unwrap().to_string())
        .collect();
    assert_eq!(names, ["fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "custom"]);
}

#[test]
fn negative_dt_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let out = sim(&["--dt", "-1", "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("`dt`"));
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn unknown_config_key_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = \"fig7\"\nalpha = 3\n");
    let out = sim(&["--config", &cfg]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("`alpha`"));
}

#[test]
fn survival_surface_format_and_progress() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = \"fig4\"\nalpha_l = [0.1, 0.2]\nt_max = 2.0\n");
    let out = sim(&["--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = dir.path().join("out/fig4.csv");
    assert_eq!(header(&csv), "alpha_l,t,p_no_jump");
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 1 + 2 * 21);
    let stderr = String::from_utf8(out.stderr).unwrap();
    let progress: Vec<&str> = stderr.lines().filter(|l| l.starts_with("scan-point ")).collect();
    assert_eq!(progress.len(), 2);
    assert!(progress.contains(&"scan-point 2/2 done"));
}

#[test]
fn tailored_format_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = \"fig9\"\nalpha_l = [1.0]\n");
    let out = sim(&["--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(header(&dir.path().join("out/fig9.csv")), "alpha_l,efficiency");
    let meta = fs::read_to_string(dir.path().join("out/fig9.meta.json")).unwrap();
    for key in ["\"config_hash\"", "\"version\"", "\"rase_exit_face\"", "\"config_toml\""] {
        assert!(meta.contains(key), "{key}");
    }
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = \"fig9\"\nalpha_l = [1.0]\n");
    let other = dir.path().join("elsewhere");
    let out = sim(&["--config", &cfg, "--experiment", "fig7", "--alpha-l", "0.5,2", "--out", other.to_str().unwrap()]);
    assert!(out.status.success());
    let text = fs::read_to_string(other.join("fig7.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(!dir.path().join("out").exists());
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = \"fig6\"\nalpha_l = [0.1, 0.5, 1.0, 3.0]\n");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(sim(&["--config", &cfg, "--out", a.to_str().unwrap()]).status.success());
    assert!(sim(&["--config", &cfg, "--out", b.to_str().unwrap(), "--jobs", "3"]).status.success());
    assert_eq!(fs::read(a.join("fig6.csv")).unwrap(), fs::read(b.join("fig6.csv")).unwrap());

    let c = dir.path().join("c");
    let replay = sim(&["--replay", a.join("fig6.meta.json").to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert!(replay.status.success());
    assert_eq!(fs::read(a.join("fig6.csv")).unwrap(), fs::read(c.join("fig6.csv")).unwrap());
}

#[test]
fn solver_fault_gives_nonzero_status_and_empty_cells() {
    let dir = tempfile::tempdir().unwrap();
    // an almost in-phase state at high depth radiates faster than dt resolves
    let cfg = write_config(dir.path(), "experiment = \"fig5\"\nt_s = 0.01\nalpha_l = [0.5, 50.0]\n");
    let out = sim(&["--config", &cfg]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha_l = 50"));
    let text = fs::read_to_string(dir.path().join("out/fig5.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].ends_with(','), "{}", rows[1]);
    assert!(!rows[0].ends_with(','));
}
