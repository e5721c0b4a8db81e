use std::path::Path;
use std::process::{Command, Output};

use planestitch::ingest::{io, synth_scene, write_scene, SceneSpec};
use planestitch::segmetrics::LabelMask;

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_planestitch"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_fixture(dir: &Path) {
    let mut scene = synth_scene(&SceneSpec::preset(2, 160, 120), 3).unwrap();
    scene.bundle.config.mesh_cols = 16;
    scene.bundle.config.mesh_rows = 12;
    write_scene(&scene, dir).unwrap();
}

#[test]
fn segscore_prints_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let gt = LabelMask::new(4, 2, vec![0, 0, 1, 1, 0, 0, 1, 1]).unwrap();
    io::write_mask(&d.join("gt.png"), &gt).unwrap();
    io::write_mask(&d.join("pred.png"), &gt.map_labels(|l| 5 - l)).unwrap();
    let o = run(&["segscore", "--pred", "pred.png", "--gt", "gt.png"], d);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "accuracy=1.0 mean_iou=1.0\n");
}

#[test]
fn stitch_writes_mosaic_report_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_fixture(d);
    let o = run(
        &[
            "stitch",
            "--config",
            "config.txt",
            "--out",
            "m.png",
            "--report",
            "r.txt",
            "--dump-intermediates",
            "dump",
        ],
        d,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(io::read_rgb(&d.join("m.png")).is_ok());
    let report = std::fs::read_to_string(d.join("r.txt")).unwrap();
    assert!(report.starts_with("status=ok\n"));
    assert!(report.contains("correspondences=2\n"));
    for f in [
        "dense.png",
        "mesh_ref.txt",
        "mesh_tar.txt",
        "overlap.png",
        "field_tar.png",
    ] {
        assert!(d.join("dump").join(f).exists(), "{f} missing");
    }
    assert!(io::read_mesh(&d.join("dump/mesh_tar.txt")).is_ok());
}

#[test]
fn report_goes_to_stdout_without_flag() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_fixture(d);
    let o = run(
        &[
            "stitch",
            "--config",
            "config.txt",
            "--out",
            "m.png",
            "--baseline-global",
        ],
        d,
    );
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("mode=global_baseline\n"), "{text}");
}

#[test]
fn empty_match_file_is_a_consensus_failure() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_fixture(d);
    std::fs::write(d.join("matches.txt"), "# none\n").unwrap();
    let o = run(
        &[
            "stitch",
            "--config",
            "config.txt",
            "--out",
            "m.png",
            "--report",
            "r.txt",
        ],
        d,
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(!d.join("m.png").exists());
    assert!(std::fs::read_to_string(d.join("r.txt"))
        .unwrap()
        .starts_with("status=error\n"));
}

#[test]
fn bad_match_line_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_fixture(d);
    std::fs::write(d.join("matches.txt"), "1 2 3 4\n1 2 three 4\n").unwrap();
    let o = run(&["stitch", "--config", "config.txt", "--out", "m.png"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("matches.txt:2"));
}

#[test]
fn eval_reports_identical_images_as_zero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_fixture(d);
    let o = run(
        &[
            "eval",
            "--ref",
            "ref.png",
            "--tar",
            "ref.png",
            "--overlap",
            "ref_mask.png",
        ],
        d,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("rmse_ncc=0.0 evaluated="), "{}", stdout(&o));
}

#[test]
fn synth_writes_a_loadable_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = run(
        &[
            "synth", "--planes", "3", "--out", "fx", "--width", "120", "--height", "90", "--mesh", "10",
        ],
        d,
    );
    assert!(o.status.success());
    let cfg = planestitch::ingest::read_config(&d.join("fx/config.txt")).unwrap();
    assert_eq!(cfg.config.mesh_cols, 10);
    assert!(planestitch::ingest::load_config_bundle(&d.join("fx/config.txt"), Default::default()).is_ok());
}

#[test]
fn usage_errors_are_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!run(&["stitch"], dir.path()).status.success());
    assert!(!run(&["frobnicate"], dir.path()).status.success());
    let o = run(&["segscore", "--pred", "nope.png", "--gt", "nope.png"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}
