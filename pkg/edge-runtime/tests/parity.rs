//! Fixture-driven checks against the reference implementation's outputs.
//!
//! Regenerate the fixtures with: python3 tools/make_fixtures.py

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use patn_edge::{parse_bundle, read_stream_csv, LoadError, LoadedModel, StreamModel};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn meta() -> HashMap<String, String> {
    let text = fs::read_to_string(fixtures().join("meta.txt")).expect("meta.txt");
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (k, v) = l.split_once(' ').expect("meta line");
            (k.to_string(), v.to_string())
        })
        .collect()
}

fn load_model() -> LoadedModel {
    LoadedModel::load(&fixtures().join("model.bin")).expect("model.bin loads")
}

#[test]
fn load_matches_meta() {
    let m = meta();
    let model = load_model();
    assert_eq!(model.t_in.to_string(), m["t_in"]);
    assert_eq!(model.t_out.to_string(), m["t_out"]);
    assert_eq!(model.d.to_string(), m["d"]);
    assert_eq!(model.h.to_string(), m["h"]);
    assert_eq!(model.n_params.to_string(), m["n_values"]);
    let blob = fs::read(fixtures().join("model.bin")).unwrap();
    assert_eq!(blob.len().to_string(), m["bundle_bytes"]);
    for (k, ch) in ["acc_x", "acc_y", "acc_z", "gyro_x", "gyro_y", "gyro_z"]
        .iter()
        .enumerate()
    {
        let want: f64 = m[&format!("eps_{ch}")].parse().unwrap();
        assert_eq!(model.eps()[k], want as f32, "eps[{ch}]");
    }
}

#[test]
fn corrupt_bundle_fails_checksum() {
    let data = fs::read(fixtures().join("corrupt.bin")).unwrap();
    match parse_bundle(&data) {
        Err(LoadError::Checksum { stored, computed }) => assert_ne!(stored, computed),
        other => panic!("expected checksum failure, got {other:?}"),
    }
}

#[test]
fn truncated_bundle_fails() {
    let data = fs::read(fixtures().join("truncated.bin")).unwrap();
    assert!(
        matches!(parse_bundle(&data), Err(LoadError::Checksum { .. })),
        "cutting the file destroys the trailer"
    );
}

#[test]
fn short_payload_reports_offset() {
    let data = fs::read(fixtures().join("shortpayload.bin")).unwrap();
    match parse_bundle(&data) {
        Err(LoadError::Schema { offset, msg }) => {
            assert!(offset > 0, "offset should point into the payload, got {offset}");
            assert!(!msg.is_empty());
        }
        other => panic!("expected schema failure, got {other:?}"),
    }
}

#[test]
fn unsupported_version_is_explicit() {
    let data = fs::read(fixtures().join("badversion.bin")).unwrap();
    match parse_bundle(&data) {
        Err(LoadError::UnsupportedVersion(v)) => assert_eq!(v, 2),
        other => panic!("expected version failure, got {other:?}"),
    }
}

fn stream_files() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(fixtures().join("streams"))
        .expect("streams dir")
        .map(|e| e.unwrap().path())
        .collect();
    v.sort();
    assert_eq!(v.len(), 100, "fixture corpus size");
    v
}

fn replay(model: &mut StreamModel, frames: &[[f64; 6]]) -> Vec<[f64; 6]> {
    model.reset();
    let mut out = Vec::with_capacity(frames.len());
    let mut f32frame = [0.0f32; 6];
    let mut delta = [0.0f32; 6];
    for row in frames {
        for k in 0..6 {
            f32frame[k] = row[k] as f32;
        }
        model.push_frame(&f32frame, &mut delta);
        let mut adv = [0.0f64; 6];
        for k in 0..6 {
            adv[k] = row[k] + delta[k] as f64;
        }
        out.push(adv);
    }
    out
}

#[test]
fn parity_with_reference_runtime() {
    let mut model = StreamModel::new(load_model());
    let t_in = model.model.t_in;
    let t_out = model.model.t_out;
    let eps: Vec<f64> = model.model.eps().iter().map(|&e| e as f64).collect();
    let mut worst = 0.0f64;
    for path in stream_files() {
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let (_, frames) =
            read_stream_csv(&fs::read_to_string(&path).unwrap()).expect("input parses");
        let golden_path = fixtures().join("golden").join(&name);
        let (_, golden) =
            read_stream_csv(&fs::read_to_string(&golden_path).unwrap()).expect("golden parses");
        assert_eq!(frames.len(), golden.len(), "{name}: row count");
        let ours = replay(&mut model, &frames);

        // generation cadence: one block per t_out frames past the warmup
        let expected_gens = if frames.len() > t_in {
            (frames.len() - t_in - 1) / t_out + 1
        } else {
            0
        };
        assert_eq!(model.generations, expected_gens, "{name}: generation count");

        for (i, (a, g)) in ours.iter().zip(golden.iter()).enumerate() {
            for k in 0..6 {
                let diff = (a[k] - g[k]).abs();
                // golden values went through 9-significant-digit text
                let tol = 1e-5 + 1e-8 * g[k].abs();
                assert!(
                    diff <= tol,
                    "{name} row {i} ch {k}: ours {} vs golden {} (diff {diff:e})",
                    a[k],
                    g[k]
                );
                if diff > worst {
                    worst = diff;
                }
                let budget = (a[k] - frames[i][k]).abs();
                assert!(
                    budget <= eps[k],
                    "{name} row {i} ch {k}: |delta| {budget:e} over budget {:e}",
                    eps[k]
                );
            }
        }
    }
    eprintln!("parity worst-case deviation: {worst:e}");
}

#[test]
fn cold_start_passes_frames_through() {
    let mut model = StreamModel::new(load_model());
    let t_in = model.model.t_in;
    for path in stream_files().iter().take(10) {
        let (_, frames) = read_stream_csv(&fs::read_to_string(path).unwrap()).unwrap();
        let ours = replay(&mut model, &frames);
        for i in 0..frames.len().min(t_in) {
            assert_eq!(ours[i], frames[i], "warmup frames must be untouched");
        }
    }
}

#[test]
fn replay_is_deterministic() {
    let mut model = StreamModel::new(load_model());
    let path = &stream_files()[20];
    let (_, frames) = read_stream_csv(&fs::read_to_string(path).unwrap()).unwrap();
    let a = replay(&mut model, &frames);
    let b = replay(&mut model, &frames);
    for (x, y) in a.iter().zip(b.iter()) {
        for k in 0..6 {
            assert_eq!(x[k].to_bits(), y[k].to_bits(), "bitwise repeatability");
        }
    }
}

#[test]
fn sustained_throughput_over_60_fps() {
    let mut model = StreamModel::new(load_model());
    let mut frame = [0.0f32; 6];
    let mut delta = [0.0f32; 6];
    // warm up caches, then time a long steady run
    for i in 0..200u32 {
        frame[0] = (i as f32 * 0.07).sin();
        model.push_frame(&frame, &mut delta);
    }
    let n = 30_000u32;
    let start = Instant::now();
    for i in 0..n {
        frame[0] = (i as f32 * 0.07).sin();
        frame[3] = (i as f32 * 0.11).cos();
        model.push_frame(&frame, &mut delta);
    }
    let fps = n as f64 / start.elapsed().as_secs_f64();
    eprintln!("sustained {fps:.0} frames/s on one core");
    assert!(fps >= 60.0, "too slow: {fps:.1} frames/s");
}

// --- binary-level tests -------------------------------------------------

fn run_cli(args: &[&Path]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_patn-edge"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn temp(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("patn-edge-test-{}-{name}", std::process::id()))
}

#[test]
fn cli_empty_input_empty_output() {
    let out_path = temp("empty-out.csv");
    let out = run_cli(&[
        &fixtures().join("model.bin"),
        &fixtures().join("empty.csv"),
        &out_path,
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(&out_path).unwrap(), b"", "empty in, empty out");
    let _ = fs::remove_file(&out_path);
}

#[test]
fn cli_malformed_row_named_with_exit_2() {
    let out_path = temp("malformed-out.csv");
    let out = run_cli(&[
        &fixtures().join("model.bin"),
        &fixtures().join("malformed.csv"),
        &out_path,
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 5"), "stderr should name the row: {err}");
    let _ = fs::remove_file(&out_path);
}

#[test]
fn cli_corrupt_bundle_exit_3() {
    let out_path = temp("corrupt-out.csv");
    let out = run_cli(&[
        &fixtures().join("corrupt.bin"),
        &fixtures().join("streams").join("000.csv"),
        &out_path,
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("checksum"), "stderr should say why: {err}");
    let _ = fs::remove_file(&out_path);
}

#[test]
fn cli_replays_to_golden() {
    let out_path = temp("replay-out.csv");
    let out = run_cli(&[
        &fixtures().join("model.bin"),
        &fixtures().join("streams").join("042.csv"),
        &out_path,
    ]);
    assert!(out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("frames/s"), "timing summary expected: {err}");
    let (_, ours) = read_stream_csv(&fs::read_to_string(&out_path).unwrap()).unwrap();
    let golden_text = fs::read_to_string(fixtures().join("golden").join("042.csv")).unwrap();
    let (_, golden) = read_stream_csv(&golden_text).unwrap();
    assert_eq!(ours.len(), golden.len());
    for (a, g) in ours.iter().zip(golden.iter()) {
        for k in 0..6 {
            assert!((a[k] - g[k]).abs() <= 1e-5 + 1e-8 * g[k].abs());
        }
    }
    let _ = fs::remove_file(&out_path);
}
