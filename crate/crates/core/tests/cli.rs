use std::fs;
use std::process::{Command, Output};

use bootperc::render::parse_ppm;

fn bootperc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bootperc")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn selftest_passes() {
    let o = bootperc(&["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| !l.starts_with("FAIL")));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(bootperc(&["simulate", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(bootperc(&["simulate", "--p", "0.9", "--q", "0.5"]).status.code(), Some(2));
    assert_eq!(bootperc(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn render_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.ppm");
    let b = dir.path().join("b.ppm");
    for path in [&a, &b] {
        let o = bootperc(&["render", "--p", "0.1", "--q", "0.01", "--L", "64", "--bc", "ring", "--seed", "5", "--out", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    let bytes = fs::read(&a).unwrap();
    assert_eq!(bytes, fs::read(&b).unwrap());
    let img = parse_ppm(&bytes).unwrap();
    assert_eq!((img.width, img.height), (64, 64));
}

#[test]
fn config_file_supplies_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.cfg");
    fs::write(&cfg, "# small scan\np = 0.1\nalphas = 0,50\nL = 32\ntrials = 20\n").unwrap();
    let from_file = bootperc(&["scan", "--config", cfg.to_str().unwrap()]);
    let inline = bootperc(&["scan", "--p", "0.1", "--alphas", "0,50", "--L", "32", "--trials", "20"]);
    assert_eq!(from_file.status.code(), Some(0), "{}", String::from_utf8_lossy(&from_file.stderr));
    assert_eq!(stdout(&from_file), stdout(&inline));
    assert_eq!(stdout(&from_file).lines().count(), 3);
    // flags after the config win
    let overridden = bootperc(&["scan", "--config", cfg.to_str().unwrap(), "--trials", "10"]);
    assert!(stdout(&overridden).lines().nth(1).unwrap().contains(",10,"));
}

#[test]
fn sabotaged_staircases_are_a_verification_failure() {
    assert_eq!(bootperc(&["block", "--count", "2"]).status.code(), Some(0));
    assert_eq!(bootperc(&["block", "--count", "2", "--sabotage"]).status.code(), Some(1));
}

#[test]
fn broken_good_boxes_do_not_spread() {
    assert_eq!(bootperc(&["spread", "--count", "2"]).status.code(), Some(0));
    assert_eq!(bootperc(&["spread", "--count", "2", "--broken"]).status.code(), Some(1));
}
