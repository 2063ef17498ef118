//! End-to-end tests driving the `mft` binary.

use std::path::Path;
use std::process::{Command, Output};

fn mft(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mft"))
        .args(args)
        .output()
        .expect("spawn mft")
}

fn assert_code(output: &Output, expected: i32, context: &str) {
    let code = output.status.code().unwrap_or(-1);
    assert_eq!(
        code,
        expected,
        "{context}: exit {code}, stdout: {}, stderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

const SCENE: &str = r#"
version = 1
width = 24
height = 24
num_frames = 12

[[layers]]
region = { shape = "rect", x0 = -1000.0, y0 = -1000.0, x1 = 1000.0, y1 = 1000.0 }
motion = { kind = "velocity", vx = 0.25, vy = 0.0 }

[[layers]]
region = { shape = "disc", cx = 8.0, cy = 8.0, radius = 3.0 }
motion = { kind = "velocity", vx = 0.5, vy = 0.25 }
"#;

const STATIC_SCENE: &str = r#"
version = 1
width = 24
height = 24
num_frames = 12

[[layers]]
region = { shape = "rect", x0 = -1000.0, y0 = -1000.0, x1 = 1000.0, y1 = 1000.0 }
motion = { kind = "static" }
"#;

const NOISE: &str = r#"
sigma_base = 0.1
sigma_exponent = 0.5
gross_probability = 0.01
gross_magnitude = 5.0
occlusion_flip_probability = 0.0
seed = 1
"#;

fn write_scene(dir: &Path, text: &str) -> String {
    let path = dir.join("scene.toml");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn synth_track_eval_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write_scene(tmp.path(), SCENE);
    let ds = tmp.path().join("ds");
    let ds_s = ds.to_string_lossy().into_owned();

    let out = mft(&[
        "synth",
        "--scene",
        &scene,
        "--out-dir",
        &ds_s,
        "--deltas",
        "1,2,4",
        "--queries",
        "6",
        "--seed",
        "3",
    ]);
    assert_code(&out, 0, "synth");
    assert!(ds.join("manifest.toml").exists());
    assert!(ds.join("queries.toml").exists());
    assert!(ds.join("gt_tracks.toml").exists());
    assert!(ds.join("meta.toml").exists());

    // Storage bound: at most 2 * N * |D| stored pairs.
    let manifest = std::fs::read_to_string(ds.join("manifest.toml")).unwrap();
    let pair_count = manifest.matches("[pairs.").count();
    assert!(pair_count <= 2 * 12 * 3, "{pair_count} pairs");

    let tracklets = tmp.path().join("tracklets.toml");
    let out = mft(&[
        "track",
        "--manifest",
        &ds.join("manifest.toml").to_string_lossy(),
        "--deltas",
        "1,2",
        "--queries",
        &ds.join("queries.toml").to_string_lossy(),
        "--out",
        &tracklets.to_string_lossy(),
    ]);
    assert_code(&out, 0, "track");
    assert!(tracklets.exists());

    let report = tmp.path().join("report.toml");
    let out = mft(&[
        "eval",
        "--tracklets",
        &tracklets.to_string_lossy(),
        "--gt",
        &ds.join("gt_tracks.toml").to_string_lossy(),
        "--mode",
        "first",
        "--out",
        &report.to_string_lossy(),
    ]);
    assert_code(&out, 0, "eval");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("OA"), "table missing OA: {stdout}");
    let report_text = std::fs::read_to_string(&report).unwrap();
    assert!(report_text.contains("oa"), "report: {report_text}");
    // Exact dataset, delta 1 available: tracking should be essentially perfect.
    assert!(report_text.contains("aj"), "report: {report_text}");
}

#[test]
fn synth_deterministic_given_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write_scene(tmp.path(), SCENE);
    let noise = tmp.path().join("noise.toml");
    std::fs::write(&noise, NOISE).unwrap();

    let run = |out_dir: &Path, seed: &str| {
        let out = mft(&[
            "synth",
            "--scene",
            &scene,
            "--out-dir",
            &out_dir.to_string_lossy(),
            "--noise",
            &noise.to_string_lossy(),
            "--deltas",
            "1,2",
            "--queries",
            "5",
            "--seed",
            seed,
        ]);
        assert_code(&out, 0, "synth");
    };
    let (a, b, c) = (
        tmp.path().join("a"),
        tmp.path().join("b"),
        tmp.path().join("c"),
    );
    run(&a, "7");
    run(&b, "7");
    run(&c, "8");

    for file in ["manifest.toml", "gt_tracks.toml", "queries.toml"] {
        let fa = std::fs::read(a.join(file)).unwrap();
        let fb = std::fs::read(b.join(file)).unwrap();
        assert_eq!(fa, fb, "{file} differs between identical seeds");
    }
    // Every stored pair is byte-identical for equal seeds; the corrupted
    // flows differ for a different seed.
    let pair = "pairs/000000_000001.flo";
    let fa = std::fs::read(a.join(pair)).unwrap();
    let fb = std::fs::read(b.join(pair)).unwrap();
    let fc = std::fs::read(c.join(pair)).unwrap();
    assert_eq!(fa, fb);
    assert_ne!(fa, fc);
}

#[test]
fn exit_codes_distinguish_usage_and_data_errors() {
    let tmp = tempfile::tempdir().unwrap();

    // Unknown flag: usage error.
    let out = mft(&["track", "--banana"]);
    assert_code(&out, 1, "unknown flag");

    // Non-increasing delta set: usage error.
    let scene = write_scene(tmp.path(), SCENE);
    let out = mft(&[
        "synth",
        "--scene",
        &scene,
        "--out-dir",
        &tmp.path().join("x").to_string_lossy(),
        "--deltas",
        "2,1",
    ]);
    assert_code(&out, 1, "bad deltas");

    // inf delta with file-backed tracking: usage error with guidance.
    let out = mft(&[
        "track",
        "--manifest",
        "nowhere/manifest.toml",
        "--deltas",
        "inf,1",
        "--queries",
        "nowhere/queries.toml",
        "--out",
        &tmp.path().join("t.toml").to_string_lossy(),
    ]);
    assert_code(&out, 1, "inf with files");
    assert!(String::from_utf8_lossy(&out.stderr).contains("inf"));

    // Missing manifest: data error.
    let out = mft(&[
        "track",
        "--manifest",
        "nowhere/manifest.toml",
        "--deltas",
        "1",
        "--queries",
        "nowhere/queries.toml",
        "--out",
        &tmp.path().join("t.toml").to_string_lossy(),
    ]);
    assert_code(&out, 2, "missing manifest");

    // Missing ground truth: data error.
    let out = mft(&[
        "eval",
        "--tracklets",
        "nowhere/t.toml",
        "--gt",
        "nowhere/gt.toml",
    ]);
    assert_code(&out, 2, "missing gt");

    // A scene with no layers is rejected as bad data.
    let empty_scene = tmp.path().join("empty_scene.toml");
    std::fs::write(
        &empty_scene,
        "version = 1\nwidth = 8\nheight = 8\nnum_frames = 3\nlayers = []\n",
    )
    .unwrap();
    let out = mft(&[
        "synth",
        "--scene",
        &empty_scene.to_string_lossy(),
        "--out-dir",
        &tmp.path().join("y").to_string_lossy(),
        "--deltas",
        "1",
    ]);
    assert_code(&out, 2, "zero-layer scene");
}

#[test]
fn ablate_emits_one_row_per_set_and_flags_duplicates() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write_scene(tmp.path(), SCENE);
    let noise = tmp.path().join("noise.toml");
    std::fs::write(&noise, NOISE).unwrap();
    let ds = tmp.path().join("ds");

    let out = mft(&[
        "synth",
        "--scene",
        &scene,
        "--out-dir",
        &ds.to_string_lossy(),
        "--noise",
        &noise.to_string_lossy(),
        "--deltas",
        "1,2,4",
        "--queries",
        "5",
        "--seed",
        "11",
    ]);
    assert_code(&out, 0, "synth");

    let out = mft(&[
        "ablate",
        "--dataset",
        &ds.to_string_lossy(),
        "--delta-sets",
        "1; 1; inf,1",
        "--mode",
        "first",
    ]);
    assert_code(&out, 0, "ablate");
    let stdout = String::from_utf8_lossy(&out.stdout);
    let rows: Vec<&str> = stdout.lines().collect();
    // Header plus three rows, duplicates included.
    assert_eq!(rows.len(), 4, "table: {stdout}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("more than once"));
}

#[test]
fn strided_eval_from_tracklet_files() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write_scene(tmp.path(), STATIC_SCENE);
    let ds = tmp.path().join("ds");
    let out = mft(&[
        "synth",
        "--scene",
        &scene,
        "--out-dir",
        &ds.to_string_lossy(),
        "--deltas",
        "1,2",
        "--queries",
        "4",
        "--seed",
        "5",
    ]);
    assert_code(&out, 0, "synth");

    // Strided inits for 12 frames: 0, 5, 10; forward plus backward runs.
    let mut tracklet_args: Vec<String> = Vec::new();
    for (init, dir) in [(0, "fwd"), (5, "fwd"), (5, "bwd"), (10, "fwd"), (10, "bwd")] {
        let path = tmp.path().join(format!("t_{init}_{dir}.toml"));
        let out = mft(&[
            "track",
            "--manifest",
            &ds.join("manifest.toml").to_string_lossy(),
            "--deltas",
            "1,2",
            "--queries",
            &ds.join("queries.toml").to_string_lossy(),
            "--direction",
            dir,
            "--init-frame",
            &init.to_string(),
            "--out",
            &path.to_string_lossy(),
        ]);
        assert_code(&out, 0, "track run");
        tracklet_args.push(path.to_string_lossy().into_owned());
    }

    let mut args: Vec<&str> = vec!["eval"];
    for t in &tracklet_args {
        args.push("--tracklets");
        args.push(t);
    }
    let gt = ds.join("gt_tracks.toml").to_string_lossy().into_owned();
    args.extend_from_slice(&["--gt", &gt, "--mode", "strided"]);
    let out = mft(&args);
    assert_code(&out, 0, "strided eval");
    let stdout = String::from_utf8_lossy(&out.stdout);
    // Static exact scene: perfect scores across the board.
    assert!(stdout.contains("OA 1.0000"), "table: {stdout}");
    assert!(stdout.contains("delta_avg 1.0000"), "table: {stdout}");
    assert!(stdout.contains("AJ 1.0000"), "table: {stdout}");
}

#[test]
fn empty_query_set_produces_valid_empty_output() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write_scene(tmp.path(), SCENE);
    let ds = tmp.path().join("ds");
    let out = mft(&[
        "synth",
        "--scene",
        &scene,
        "--out-dir",
        &ds.to_string_lossy(),
        "--deltas",
        "1",
        "--queries",
        "3",
        "--seed",
        "2",
    ]);
    assert_code(&out, 0, "synth");

    let empty = tmp.path().join("empty_queries.toml");
    std::fs::write(
        &empty,
        "version = 1\nwidth = 24\nheight = 24\npoints = []\n",
    )
    .unwrap();
    let tracklets = tmp.path().join("t.toml");
    let out = mft(&[
        "track",
        "--manifest",
        &ds.join("manifest.toml").to_string_lossy(),
        "--deltas",
        "1",
        "--queries",
        &empty.to_string_lossy(),
        "--out",
        &tracklets.to_string_lossy(),
    ]);
    assert_code(&out, 0, "track with no queries");
    let text = std::fs::read_to_string(&tracklets).unwrap();
    assert!(text.contains("num_frames = 12"), "{text}");
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write_scene(tmp.path(), SCENE);
    let ds = tmp.path().join("ds");
    let out = mft(&[
        "synth", "--scene", &scene, "--out-dir", &ds.to_string_lossy(), "--deltas", "1,2,4",
        "--queries", "3", "--seed", "4",
    ]);
    assert_code(&out, 0, "synth");

    let config = tmp.path().join("mft.toml");
    std::fs::write(&config, "[track]\ndeltas = \"1,2\"\noccl_thresh = 0.05\n").unwrap();

    // No --deltas: the config's set is used and recorded in the output.
    let t1 = tmp.path().join("from_config.toml");
    let out = mft(&[
        "track",
        "--config",
        &config.to_string_lossy(),
        "--manifest",
        &ds.join("manifest.toml").to_string_lossy(),
        "--queries",
        &ds.join("queries.toml").to_string_lossy(),
        "--out",
        &t1.to_string_lossy(),
    ]);
    assert_code(&out, 0, "track with config defaults");
    let text = std::fs::read_to_string(&t1).unwrap();
    assert!(text.contains("deltas = \"1,2\""), "{text}");
    assert!(text.contains("theta_o = 0.05"), "{text}");

    // Explicit flag wins over the config value.
    let t2 = tmp.path().join("from_flag.toml");
    let out = mft(&[
        "track",
        "--config",
        &config.to_string_lossy(),
        "--deltas",
        "1",
        "--manifest",
        &ds.join("manifest.toml").to_string_lossy(),
        "--queries",
        &ds.join("queries.toml").to_string_lossy(),
        "--out",
        &t2.to_string_lossy(),
    ]);
    assert_code(&out, 0, "track with flag override");
    let text = std::fs::read_to_string(&t2).unwrap();
    assert!(text.contains("deltas = \"1\""), "{text}");

    // Unknown config keys are rejected rather than silently ignored.
    std::fs::write(&config, "[track]\ndelta = \"1,2\"\n").unwrap();
    let out = mft(&[
        "track",
        "--config",
        &config.to_string_lossy(),
        "--manifest",
        &ds.join("manifest.toml").to_string_lossy(),
        "--queries",
        &ds.join("queries.toml").to_string_lossy(),
        "--out",
        &t2.to_string_lossy(),
    ]);
    assert_code(&out, 2, "bad config key");
}

fn write_ppm_gradient(path: &Path, w: usize, h: usize) {
    let mut bytes = format!("P6\n{w} {h}\n255\n").into_bytes();
    for y in 0..h {
        for x in 0..w {
            bytes.extend_from_slice(&[(x * 9 % 256) as u8, (y * 17 % 256) as u8, 60]);
        }
    }
    std::fs::write(path, bytes).unwrap();
}

#[test]
fn visualize_identity_warp_matches_input_frames() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write_scene(tmp.path(), STATIC_SCENE);
    let ds = tmp.path().join("ds");
    let out = mft(&[
        "synth",
        "--scene",
        &scene,
        "--out-dir",
        &ds.to_string_lossy(),
        "--deltas",
        "1",
        "--queries",
        "2",
        "--seed",
        "1",
    ]);
    assert_code(&out, 0, "synth");

    let fou = tmp.path().join("fou");
    let out = mft(&[
        "track",
        "--manifest",
        &ds.join("manifest.toml").to_string_lossy(),
        "--deltas",
        "1",
        "--queries",
        &ds.join("queries.toml").to_string_lossy(),
        "--out",
        &tmp.path().join("t.toml").to_string_lossy(),
        "--save-fou",
        &fou.to_string_lossy(),
    ]);
    assert_code(&out, 0, "track");
    assert!(fou.join("000000.flo").exists());
    assert!(fou.join("000011.occ.mftm").exists());

    // Identical frames plus a static scene: overlays must equal the input.
    let frames = tmp.path().join("frames");
    std::fs::create_dir_all(&frames).unwrap();
    for t in 0..12 {
        write_ppm_gradient(&frames.join(format!("{t:06}.ppm")), 24, 24);
    }
    let out_dir = tmp.path().join("overlays");
    let out = mft(&[
        "visualize",
        "--frames",
        &frames.to_string_lossy(),
        "--fou",
        &fou.to_string_lossy(),
        "--out-dir",
        &out_dir.to_string_lossy(),
        "--cell-size",
        "8",
    ]);
    assert_code(&out, 0, "visualize");
    let original = std::fs::read(frames.join("000005.ppm")).unwrap();
    let overlay = std::fs::read(out_dir.join("000005.ppm")).unwrap();
    assert_eq!(original, overlay, "identity warp must reproduce the frame");
}
