//! Black-box tests driving the installed binary.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use phaseflow::{
    dataio, jaccard_per_class, sample_dataset, CausalSmoother, LabelSequence, ScenarioConfig,
    SmoothingConfig,
};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_phaseflow"));
    cmd.env_remove("PHASEFLOW_QUIET");
    cmd
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Small two-state scenario written to disk: paired training files plus one
/// test sequence, all raw.
fn scenario_files(dir: &Path) -> (Vec<(PathBuf, PathBuf)>, PathBuf, PathBuf) {
    let cfg = ScenarioConfig {
        classes: 2,
        dims: 2,
        frames: 120,
        train_sequences: 2,
        test_sequences: 1,
        dwell: 30.0,
        ..ScenarioConfig::default()
    };
    let data = sample_dataset(&cfg).unwrap();
    let mut pairs = Vec::new();
    for (i, (labels, obs)) in data.train.iter().enumerate() {
        let f = dir.join(format!("video{i:02}.features.csv"));
        let l = dir.join(format!("video{i:02}.labels.csv"));
        dataio::write_logprobs(obs, &f).unwrap();
        dataio::write_labels(labels, &l).unwrap();
        pairs.push((f, l));
    }
    // Kept out of the training directory so `--features <dir>` never pairs it.
    let heldout = dir.join("heldout");
    fs::create_dir(&heldout).unwrap();
    let test_f = heldout.join("held.features.csv");
    let test_l = heldout.join("held.labels.csv");
    dataio::write_logprobs(&data.test[0].1, &test_f).unwrap();
    dataio::write_labels(&data.test[0].0, &test_l).unwrap();
    (pairs, test_f, test_l)
}

fn train_model(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let (_, test_f, test_l) = scenario_files(dir);
    let model = dir.join("model.json");
    let out = run(bin()
        .arg("train")
        .arg("--features")
        .arg(dir)
        .arg("--labels")
        .arg(dir)
        .arg("--out")
        .arg(&model));
    assert_ok(&out);
    (model, test_f, test_l)
}

#[test]
fn train_pairs_by_stem_and_reports_shape() {
    let dir = tempfile::tempdir().unwrap();
    let (model, _, _) = train_model(dir.path());

    let (loaded, phases) = dataio::load_model(&model).unwrap();
    assert_eq!(loaded.k(), 2);
    assert_eq!(loaded.dims(), 2);
    assert_eq!(phases.names(), ["phase0", "phase1"]);
}

#[test]
fn train_stdout_lists_counts_and_sparsity() {
    let dir = tempfile::tempdir().unwrap();
    scenario_files(dir.path());
    let out = run(bin()
        .arg("train")
        .arg("--features")
        .arg(dir.path())
        .arg("--labels")
        .arg(dir.path())
        .arg("--out")
        .arg(dir.path().join("m.json")));
    assert_ok(&out);
    let text = stdout_of(&out);
    assert!(text.contains("K=2 states, D=2 dims"), "{text}");
    assert!(text.contains("state 0 (phase0)"), "{text}");
    assert!(text.contains("entries nonzero"), "{text}");
}

#[test]
fn train_missing_partner_names_the_stem() {
    let dir = tempfile::tempdir().unwrap();
    scenario_files(dir.path());
    fs::remove_file(dir.path().join("video01.labels.csv")).unwrap();
    let out = run(bin()
        .arg("train")
        .arg("--features")
        .arg(dir.path())
        .arg("--labels")
        .arg(dir.path())
        .arg("--out")
        .arg(dir.path().join("m.json")));
    assert_exit(&out, 2);
    assert!(stderr_of(&out).contains("video01"), "{}", stderr_of(&out));
}

#[test]
fn train_unseen_state_fails_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let (pairs, _, _) = scenario_files(dir.path());
    // Relabel everything in one file to state 2: state 1 keeps its frames,
    // but inferred K becomes 3 and state 1 may vanish entirely elsewhere.
    let labels = LabelSequence::new(vec![0, 0, 2, 2], 1.0).unwrap();
    dataio::write_labels(&labels, &pairs[0].1).unwrap();
    let obs = dataio::read_logprobs(&pairs[0].0, 1.0).unwrap();
    dataio::write_logprobs(&obs.prefix(4).unwrap(), &pairs[0].0).unwrap();
    let labels = LabelSequence::new(vec![0, 0, 0, 0], 1.0).unwrap();
    dataio::write_labels(&labels, &pairs[1].1).unwrap();
    let obs = dataio::read_logprobs(&pairs[1].0, 1.0).unwrap();
    dataio::write_logprobs(&obs.prefix(4).unwrap(), &pairs[1].0).unwrap();

    let out = run(bin()
        .arg("train")
        .arg("--features")
        .arg(dir.path())
        .arg("--labels")
        .arg(dir.path())
        .arg("--out")
        .arg(dir.path().join("m.json")));
    assert_exit(&out, 2);
    assert!(stderr_of(&out).contains("state 1"), "{}", stderr_of(&out));
}

#[test]
fn train_manifest_matches_stem_pairing() {
    let dir = tempfile::tempdir().unwrap();
    let (pairs, _, _) = scenario_files(dir.path());

    let by_stem = dir.path().join("stem.json");
    assert_ok(&run(bin()
        .arg("train")
        .arg("--features")
        .arg(dir.path())
        .arg("--labels")
        .arg(dir.path())
        .arg("--out")
        .arg(&by_stem)));

    let manifest = dir.path().join("inputs.csv");
    let mut text = String::from("# pairs\n");
    for (f, l) in &pairs {
        text.push_str(&format!(
            "{},{}\n",
            f.file_name().unwrap().to_str().unwrap(),
            l.file_name().unwrap().to_str().unwrap()
        ));
    }
    fs::write(&manifest, text).unwrap();
    let by_manifest = dir.path().join("manifest.json");
    assert_ok(&run(bin()
        .arg("train")
        .arg("--manifest")
        .arg(&manifest)
        .arg("--out")
        .arg(&by_manifest)));

    assert_eq!(
        fs::read(&by_stem).unwrap(),
        fs::read(&by_manifest).unwrap(),
        "manifest and stem pairing fit different models"
    );
}

#[test]
fn smooth_window_one_reproduces_the_input_file() {
    let dir = tempfile::tempdir().unwrap();
    let (pairs, _, _) = scenario_files(dir.path());
    let out_path = dir.path().join("smoothed.csv");
    assert_ok(&run(bin()
        .arg("smooth")
        .arg("--in")
        .arg(&pairs[0].0)
        .arg("--out")
        .arg(&out_path)
        .arg("--window")
        .arg("1")));
    assert_eq!(
        fs::read(&pairs[0].0).unwrap(),
        fs::read(&out_path).unwrap()
    );
}

#[test]
fn smooth_defaults_to_a_15_frame_window() {
    let dir = tempfile::tempdir().unwrap();
    let (pairs, _, _) = scenario_files(dir.path());
    let out_path = dir.path().join("smoothed.csv");
    assert_ok(&run(bin()
        .arg("smooth")
        .arg("--in")
        .arg(&pairs[0].0)
        .arg("--out")
        .arg(&out_path)));

    let obs = dataio::read_logprobs(&pairs[0].0, 1.0).unwrap();
    let expected = phaseflow::smooth(&obs, &SmoothingConfig::new(15).unwrap());
    let reference = dir.path().join("reference.csv");
    dataio::write_logprobs(&expected, &reference).unwrap();
    assert_eq!(fs::read(&reference).unwrap(), fs::read(&out_path).unwrap());
}

#[test]
fn smooth_rejects_window_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (pairs, _, _) = scenario_files(dir.path());
    let out = run(bin()
        .arg("smooth")
        .arg("--in")
        .arg(&pairs[0].0)
        .arg("--out")
        .arg(dir.path().join("x.csv"))
        .arg("--window")
        .arg("0"));
    assert_exit(&out, 2);
}

#[test]
fn missing_input_file_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin()
        .arg("smooth")
        .arg("--in")
        .arg(dir.path().join("absent.csv"))
        .arg("--out")
        .arg(dir.path().join("x.csv")));
    assert_exit(&out, 1);
}

#[test]
fn decode_offline_matches_the_library_call() {
    let dir = tempfile::tempdir().unwrap();
    let (model_path, test_f, _) = train_model(dir.path());
    let pred_path = dir.path().join("pred.csv");
    assert_ok(&run(bin()
        .arg("decode")
        .arg("--model")
        .arg(&model_path)
        .arg("--in")
        .arg(&test_f)
        .arg("--out")
        .arg(&pred_path)
        .arg("--mode")
        .arg("offline")
        .arg("--smooth-window")
        .arg("5")));

    let (model, _) = dataio::load_model(&model_path).unwrap();
    let obs = dataio::read_logprobs(&test_f, 1.0).unwrap();
    let smoothed = phaseflow::smooth(&obs, &SmoothingConfig::new(5).unwrap());
    let expected = model.viterbi_offline(&smoothed).unwrap().states;
    let pred = dataio::read_labels(&pred_path, 1.0, None).unwrap();
    assert_eq!(pred, expected);
}

#[test]
fn decode_online_matches_streaming_prefix_decodes() {
    let dir = tempfile::tempdir().unwrap();
    let (model_path, test_f, _) = train_model(dir.path());
    let pred_path = dir.path().join("pred.csv");
    assert_ok(&run(bin()
        .arg("decode")
        .arg("--model")
        .arg(&model_path)
        .arg("--in")
        .arg(&test_f)
        .arg("--out")
        .arg(&pred_path)
        .arg("--mode")
        .arg("online")
        .arg("--smooth-window")
        .arg("5")));

    let (model, _) = dataio::load_model(&model_path).unwrap();
    let obs = dataio::read_logprobs(&test_f, 1.0).unwrap();
    let cfg = SmoothingConfig::new(5).unwrap();
    let mut smoother = CausalSmoother::new(&cfg, obs.dims()).unwrap();
    let mut decoder = model.online_decoder();
    let mut expected = Vec::new();
    for row in obs.rows() {
        let row = smoother.push(row).unwrap();
        expected.push(decoder.step(&row).unwrap());
    }
    let pred = dataio::read_labels(&pred_path, 1.0, None).unwrap();
    assert_eq!(pred.labels(), expected.as_slice());
}

#[test]
fn decode_online_from_stdin_matches_the_file_run() {
    let dir = tempfile::tempdir().unwrap();
    let (model_path, test_f, _) = train_model(dir.path());

    let from_file = dir.path().join("from_file.csv");
    assert_ok(&run(bin()
        .arg("decode")
        .arg("--model")
        .arg(&model_path)
        .arg("--in")
        .arg(&test_f)
        .arg("--out")
        .arg(&from_file)
        .arg("--mode")
        .arg("online")));

    let from_stdin = dir.path().join("from_stdin.csv");
    let mut child = bin()
        .arg("decode")
        .arg("--model")
        .arg(&model_path)
        .arg("--in")
        .arg("-")
        .arg("--out")
        .arg(&from_stdin)
        .arg("--mode")
        .arg("online")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(&fs::read(&test_f).unwrap())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert_ok(&out);

    assert_eq!(fs::read(&from_file).unwrap(), fs::read(&from_stdin).unwrap());
}

#[test]
fn decode_reports_both_dimensions_on_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let (model_path, _, _) = train_model(dir.path());
    let wide = dir.path().join("wide.features.csv");
    fs::write(&wide, "frame,c0,c1,c2\n0,0.0,0.0,0.0\n").unwrap();
    let out = run(bin()
        .arg("decode")
        .arg("--model")
        .arg(&model_path)
        .arg("--in")
        .arg(&wide)
        .arg("--out")
        .arg(dir.path().join("x.csv"))
        .arg("--mode")
        .arg("offline"));
    assert_exit(&out, 2);
    let err = stderr_of(&out);
    assert!(err.contains('2') && err.contains('3'), "{err}");
}

#[test]
fn eval_perfect_prediction_prints_all_hundreds() {
    let dir = tempfile::tempdir().unwrap();
    let labels = LabelSequence::new(vec![0, 0, 1, 1, 1, 0], 1.0).unwrap();
    let path = dir.path().join("gt.csv");
    dataio::write_labels(&labels, &path).unwrap();
    let out = run(bin()
        .arg("eval")
        .arg("--pred")
        .arg(&path)
        .arg("--gt")
        .arg(&path)
        .arg("--classes")
        .arg("2"));
    assert_ok(&out);
    let text = stdout_of(&out);
    assert!(text.contains("100.00"), "{text}");
    assert!(text.contains("100.00 +/- 0.00"), "{text}");
    assert!(text.contains("margin 10 s"), "{text}");
}

#[test]
fn eval_json_at_margin_zero_matches_classic_jaccard() {
    let dir = tempfile::tempdir().unwrap();
    let pred = LabelSequence::new(vec![0, 0, 1, 1, 1, 1], 1.0).unwrap();
    let gt = LabelSequence::new(vec![0, 0, 0, 1, 1, 1], 1.0).unwrap();
    let pred_path = dir.path().join("pred.csv");
    let gt_path = dir.path().join("gt.csv");
    dataio::write_labels(&pred, &pred_path).unwrap();
    dataio::write_labels(&gt, &gt_path).unwrap();

    let out = run(bin()
        .arg("eval")
        .arg("--pred")
        .arg(&pred_path)
        .arg("--gt")
        .arg(&gt_path)
        .arg("--classes")
        .arg("2")
        .arg("--margin-seconds")
        .arg("0")
        .arg("--json"));
    assert_ok(&out);
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();

    let expected = jaccard_per_class(&pred, &gt, 2, 0.0).unwrap();
    for (c, want) in expected.iter().enumerate() {
        let got = report["per_class_jaccard"][c].as_f64();
        assert_eq!(got, *want, "class {c}");
    }
    assert_eq!(
        report["accuracy"].as_f64(),
        Some(phaseflow::accuracy(&pred, &gt).unwrap())
    );
    assert_eq!(report["margin_seconds"].as_f64(), Some(0.0));
}

#[test]
fn eval_dumps_per_frame_records() {
    let dir = tempfile::tempdir().unwrap();
    let pred = LabelSequence::new(vec![1, 1, 0], 1.0).unwrap();
    let gt = LabelSequence::new(vec![1, 0, 0], 1.0).unwrap();
    let pred_path = dir.path().join("pred.csv");
    let gt_path = dir.path().join("gt.csv");
    dataio::write_labels(&pred, &pred_path).unwrap();
    dataio::write_labels(&gt, &gt_path).unwrap();
    let dump = dir.path().join("frames.csv");

    assert_ok(&run(bin()
        .arg("eval")
        .arg("--pred")
        .arg(&pred_path)
        .arg("--gt")
        .arg(&gt_path)
        .arg("--classes")
        .arg("2")
        .arg("--dump-frames")
        .arg(&dump)));
    let text = fs::read_to_string(&dump).unwrap();
    assert_eq!(
        text,
        "frame,time_s,pred,gt,match\n0,0,1,1,true\n1,1,1,0,false\n2,2,0,0,true\n"
    );
}

#[test]
fn eval_length_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let a = LabelSequence::new(vec![0, 1], 1.0).unwrap();
    let b = LabelSequence::new(vec![0, 1, 1], 1.0).unwrap();
    let a_path = dir.path().join("a.csv");
    let b_path = dir.path().join("b.csv");
    dataio::write_labels(&a, &a_path).unwrap();
    dataio::write_labels(&b, &b_path).unwrap();
    let out = run(bin()
        .arg("eval")
        .arg("--pred")
        .arg(&a_path)
        .arg("--gt")
        .arg(&b_path)
        .arg("--classes")
        .arg("2"));
    assert_exit(&out, 2);
}

#[test]
fn upsample_defaults_to_factor_25() {
    let dir = tempfile::tempdir().unwrap();
    let labels = LabelSequence::new(vec![0, 1, 1], 1.0).unwrap();
    let in_path = dir.path().join("in.csv");
    dataio::write_labels(&labels, &in_path).unwrap();
    let out_path = dir.path().join("out.csv");
    assert_ok(&run(bin()
        .arg("upsample")
        .arg("--in")
        .arg(&in_path)
        .arg("--out")
        .arg(&out_path)
        .arg("--target-frames")
        .arg("75")));
    let up = dataio::read_labels(&out_path, 25.0, None).unwrap();
    assert_eq!(up.len(), 75);
    // Pure replication: each source label appears 25 consecutive times.
    for (t, &l) in up.labels().iter().enumerate() {
        assert_eq!(l, labels.labels()[t / 25]);
    }
}

#[test]
fn upsample_crops_and_pads_to_the_target() {
    let dir = tempfile::tempdir().unwrap();
    let labels = LabelSequence::new(vec![0, 1], 1.0).unwrap();
    let in_path = dir.path().join("in.csv");
    dataio::write_labels(&labels, &in_path).unwrap();

    for (target, tail) in [(30usize, 1usize), (80, 1)] {
        let out_path = dir.path().join(format!("out{target}.csv"));
        assert_ok(&run(bin()
            .arg("upsample")
            .arg("--in")
            .arg(&in_path)
            .arg("--out")
            .arg(&out_path)
            .arg("--target-frames")
            .arg(target.to_string())));
        let up = dataio::read_labels(&out_path, 25.0, None).unwrap();
        assert_eq!(up.len(), target);
        assert_eq!(*up.labels().last().unwrap(), tail);
    }
}

#[test]
fn upsample_rejects_empty_input_with_positive_target() {
    let dir = tempfile::tempdir().unwrap();
    let in_path = dir.path().join("empty.csv");
    fs::write(&in_path, "frame,phase\n").unwrap();
    let out = run(bin()
        .arg("upsample")
        .arg("--in")
        .arg(&in_path)
        .arg("--out")
        .arg(dir.path().join("x.csv"))
        .arg("--target-frames")
        .arg("10"));
    assert_exit(&out, 2);
}

#[test]
fn gen_is_reproducible_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "--classes",
        "3",
        "--dims",
        "3",
        "--frames",
        "40",
        "--train-sequences",
        "2",
        "--test-sequences",
        "1",
        "--dwell",
        "10",
        "--seed",
        "21",
    ];
    for sub in ["one", "two"] {
        assert_ok(&run(bin()
            .arg("gen")
            .args(args)
            .arg("--out-dir")
            .arg(dir.path().join(sub))));
    }
    let mut names: Vec<_> = fs::read_dir(dir.path().join("one"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 7, "{names:?}");
    for name in names {
        let a = fs::read(dir.path().join("one").join(&name)).unwrap();
        let b = fs::read(dir.path().join("two").join(&name)).unwrap();
        assert_eq!(a, b, "{name:?} differs between identical runs");
    }
}

#[test]
fn gen_config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scenario.json");
    fs::write(
        &config,
        r#"{"classes":2,"dims":2,"frames":50,"train_sequences":1,"test_sequences":1,"dwell":10.0}"#,
    )
    .unwrap();
    assert_ok(&run(bin()
        .arg("gen")
        .arg("--config")
        .arg(&config)
        .arg("--frames")
        .arg("60")
        .arg("--out-dir")
        .arg(dir.path().join("data"))));
    let text = fs::read_to_string(dir.path().join("data/train_00.features.csv")).unwrap();
    assert_eq!(text.lines().count(), 61, "60 frames plus the header");
}

#[test]
fn gen_rejects_invalid_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin()
        .arg("gen")
        .arg("--classes")
        .arg("0")
        .arg("--out-dir")
        .arg(dir.path().join("data")));
    assert_exit(&out, 2);
}

#[test]
fn bench_prints_method_rows_and_ordering_verdict() {
    let out = run(bin().arg("bench").args([
        "--classes",
        "2",
        "--dims",
        "2",
        "--frames",
        "150",
        "--train-sequences",
        "2",
        "--test-sequences",
        "2",
        "--dwell",
        "40",
        "--seeds",
        "2",
    ]));
    assert_ok(&out);
    let text = stdout_of(&out);
    for needle in [
        "Avg Smoothing",
        "HMM Online",
        "HMM Offline",
        "mean +/- std over 2 seeds",
        "ordering offline >= online >= smoothing",
        "/2 seeds",
    ] {
        assert!(text.contains(needle), "missing {needle:?} in:\n{text}");
    }
}

#[test]
fn quiet_mode_silences_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let (pairs, _, _) = scenario_files(dir.path());
    let out = run(bin()
        .env("PHASEFLOW_QUIET", "1")
        .arg("smooth")
        .arg("--in")
        .arg(&pairs[0].0)
        .arg("--out")
        .arg(dir.path().join("s.csv")));
    assert_ok(&out);
    assert!(stdout_of(&out).is_empty(), "{}", stdout_of(&out));
}

#[test]
fn usage_errors_exit_2() {
    // Unknown flag.
    assert_exit(&run(bin().arg("smooth").arg("--bogus")), 2);
    // Missing required flag.
    assert_exit(&run(bin().arg("decode").arg("--mode").arg("offline")), 2);
    // Unknown subcommand.
    assert_exit(&run(bin().arg("transmogrify")), 2);
    // --features together with --manifest.
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin()
        .arg("train")
        .arg("--features")
        .arg(dir.path())
        .arg("--manifest")
        .arg(dir.path().join("m.csv"))
        .arg("--out")
        .arg(dir.path().join("x.json")));
    assert_exit(&out, 2);
}
