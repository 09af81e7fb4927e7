use std::path::Path;
use std::process::{Command, Output};

fn hypofem(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypofem"))
        .args(args)
        .env("HYPOFEM_OUT", out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn coercivity_with_auto_penalty_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = hypofem(&["coercivity", "--nx", "8", "--ny", "8", "--p", "2", "--penalty", "auto"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let line = text.lines().find(|l| l.starts_with("min ratio = ")).unwrap();
    let ratio: f64 = line["min ratio = ".len()..].parse().unwrap();
    assert!(ratio >= 0.5);
}

#[test]
fn decay_from_default_config_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.cfg");
    let o = hypofem(&["decay", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("decay.csv")).unwrap();
    assert!(csv.starts_with("t,energy,l2,agrad,bound\n"));
    assert_eq!(csv.lines().count(), 802);
    assert!(std::fs::read_to_string(dir.path().join("decay.svg")).unwrap().contains("<svg"));
    let echoed = std::fs::read_to_string(dir.path().join("decay.cfg")).unwrap();
    assert!(echoed.contains(&format!("dir = {}", dir.path().display())));
}

#[test]
fn hypo3d_grid_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = hypofem(&["hypo3d", "--alpha-grid", "0.005:0.055:0.005"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().filter(|l| l.ends_with("pass")).count(), 11);
}

#[test]
fn outputs_are_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["baseline", "--nx", "6", "--ny", "6", "--t-final", "2", "--perturb", "0.2", "--seed", "9"];
    assert_eq!(hypofem(&args, a.path()).status.code(), Some(0));
    assert_eq!(hypofem(&args, b.path()).status.code(), Some(0));
    for f in ["baseline.csv", "baseline.svg"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn consistency_and_mesh_commands() {
    let dir = tempfile::tempdir().unwrap();
    let o = hypofem(&["consistency", "--nx", "4", "--ny", "4", "--p", "3"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = hypofem(&["consistency", "--profile", "sine"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = hypofem(&["mesh", "--nx", "4", "--ny", "4", "--perturb", "0.2"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let mesh = hypofem::mesh::load_mesh(dir.path().join("mesh.txt")).unwrap();
    assert_eq!(mesh.num_triangles(), 32);
}

#[test]
fn usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(hypofem(&["decay", "--dt", "-1"], dir.path()).status.code(), Some(2));
    let o = hypofem(&["decay", "--dt=-1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("evolution") && err.contains("dt"), "{err}");
    assert_eq!(hypofem(&["converge", "--nope"], dir.path()).status.code(), Some(2));
    assert_eq!(hypofem(&[], dir.path()).status.code(), Some(2));
}
