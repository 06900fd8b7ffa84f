use std::path::{Path, PathBuf};
use std::process::Command;

use slhe::pnm::decode_pnm;
use slhe_core::Image;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn slhe(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_slhe")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn constant_image_maps_to_mid_level() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.pgm");
    let (code, _, err) = slhe(&["tonemap", s(&data("constant.pgm")), s(&out)]);
    assert_eq!(code, 0, "{err}");
    let Image::Gray(p) = decode_pnm(&std::fs::read(&out).unwrap()).unwrap().image else {
        panic!("expected gray")
    };
    // Level 511.5 quantizes to 128 of 255.
    assert!(p.samples().iter().all(|&v| v == 128.0 / 255.0));
}

#[test]
fn unknown_flag_is_usage_error_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.pgm");
    let (code, _, err) = slhe(&["tonemap", "--no-such-flag", s(&data("constant.pgm")), s(&out)]);
    assert_eq!(code, 2);
    assert!(err.contains("no-such-flag"), "{err}");
    assert!(!out.exists());
    assert_eq!(slhe(&["tonemap", "--no-such-flag"]).0, 2);
}

#[test]
fn runtime_errors_exit_one_and_leave_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pgm");
    std::fs::write(&bad, b"P5 4 4 255\nshort").unwrap();
    let out = dir.path().join("out.pgm");
    let (code, _, err) = slhe(&["tonemap", s(&bad), s(&out)]);
    assert_eq!(code, 1);
    assert!(err.contains("truncated"), "{err}");
    assert!(!out.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);

    let (code, _, _) = slhe(&["halo-report", s(&data("gray8.pgm")), s(&data("gray16.pgm")), "--edge-column", "3"]);
    assert_eq!(code, 1);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# test\nsigma_min = 300\nsigma_max = 100\n").unwrap();
    let out = dir.path().join("o.pgm");
    let (code, _, err) = slhe(&["tonemap", "--config", s(&cfg), s(&data("gray8.pgm")), s(&out)]);
    assert_eq!(code, 2);
    assert!(err.contains("sigma_min") && err.contains("sigma_max"), "{err}");
    let (code, _, err) = slhe(&["tonemap", "--config", s(&cfg), "--sigma-min", "50", s(&data("gray8.pgm")), s(&out)]);
    assert_eq!(code, 0, "{err}");
    assert!(out.exists());
    let (code, _, err) = slhe(&["tonemap", "--config", s(&dir.path().join("missing.cfg")), s(&data("gray8.pgm")), s(&out)]);
    assert_eq!(code, 1, "{err}");
}

#[test]
fn color_and_16bit_keep_kind_and_depth() {
    let dir = tempfile::tempdir().unwrap();
    for (name, maxval) in [("color16.ppm", 65535), ("color8.ppm", 255), ("gray16.pgm", 65535)] {
        let out = dir.path().join(name);
        let (code, _, err) = slhe(&["tonemap", "--radius", "2", s(&data(name)), "--out", s(&out)]);
        assert_eq!(code, 0, "{err}");
        let d = decode_pnm(&std::fs::read(&out).unwrap()).unwrap();
        assert_eq!(d.maxval, maxval);
        assert_eq!(matches!(d.image, Image::Color(_)), name.ends_with(".ppm"));
    }
}

#[test]
fn sweep_writes_csv_and_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let prof = dir.path().join("profiles");
    let (code, _, err) = slhe(&[
        "sweep", "--sigmas", "50,500", "--step", "200,800", "--size", "48", "--radius", "6", "--profiles", s(&prof), "--out",
        s(&csv),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "sigma,policy,light_amp,dark_amp,light_width,dark_width");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("50,uniform,"));
    assert!(prof.join("sigma50_uniform.pgm").exists() && prof.join("sigma500_uniform.pgm").exists());

    let (code, stdout, _) = slhe(&["sweep", "--sigmas", "256", "--mode", "adaptive", "--size", "32", "--radius", "4", "--policy", "swapped"]);
    assert_eq!(code, 0);
    assert!(stdout.lines().nth(1).unwrap().starts_with("256,swapped,"), "{stdout}");
}

#[test]
fn halo_report_and_perceive() {
    let dir = tempfile::tempdir().unwrap();
    let prof = dir.path().join("p");
    let (code, _, err) = slhe(&["sweep", "--sigmas", "64", "--size", "48", "--radius", "6", "--profiles", s(&prof)]);
    assert_eq!(code, 0, "{err}");
    // The clean step, written independently of the CLI.
    let orig = dir.path().join("orig.pgm");
    let mut bytes = b"P5\n48 48\n65535\n".to_vec();
    for _ in 0..48 {
        for x in 0..48 {
            let level: u32 = if x < 24 { 200 } else { 800 };
            let v = (level as f64 / 1023.0 * 65535.0 + 0.5).floor() as u16;
            bytes.extend_from_slice(&v.to_be_bytes());
        }
    }
    std::fs::write(&orig, &bytes).unwrap();
    let report = dir.path().join("report.txt");
    let (code, stdout, err) =
        slhe(&["halo-report", s(&orig), s(&prof.join("sigma64_uniform.pgm")), "--out", s(&report)]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("stacked lateral inhibition: yes"), "{stdout}");
    assert_eq!(std::fs::read_to_string(&report).unwrap(), stdout);

    let out = dir.path().join("perceived.pgm");
    let (code, _, err) = slhe(&["perceive", s(&orig), s(&out)]);
    assert_eq!(code, 0, "{err}");
    assert!(out.exists());
    let (code, _, _) = slhe(&["perceive", s(&orig), s(&out), "--sigma-surround", "0.5"]);
    assert_eq!(code, 2);
}

#[test]
fn bench_prints_table() {
    let (code, stdout, err) = slhe(&["bench", "--size", "256", "--radii", "4", "--reference-rows", "1", "--repeats", "1"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(stdout.lines().count(), 3, "{stdout}");
    assert!(stdout.contains("reference") && stdout.contains("binned"));
    assert_eq!(slhe(&["bench", "--size", "64"]).0, 2);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.pgm"), dir.path().join("b.pgm"));
    for out in [&a, &b] {
        let (code, _, err) = slhe(&["tonemap", "--radius", "8", s(&data("color8.ppm")), s(out)]);
        assert_eq!(code, 0, "{err}");
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}
