//! End-to-end runs of the compiled binary: generate → learn → match →
//! score, plus the reproducibility and failure-path contracts.

use std::path::Path;
use std::process::{Command, Output};

const SPEC: &str = r#"
duration_s = 120.0
sample_rate_hz = 100.0
noise_std = 0.05

[[classes]]
class = "feeding"
waveform = "valley_peak"
axes = ["x", "z"]
amplitudes = [1.0, 0.7]
duration_s = 1.0
count = 6

[[classes]]
class = "preening"
waveform = "transient_flat"
axes = ["x"]
amplitudes = [0.9]
duration_s = 1.2
count = 6
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ethogram"))
}

fn run_ok(dir: &Path, args: &[&str]) -> String {
    let out = bin().current_dir(dir).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "ethogram {args:?} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn run_err(dir: &Path, args: &[&str]) -> Output {
    let out = bin().current_dir(dir).args(args).output().unwrap();
    assert!(
        !out.status.success(),
        "ethogram {args:?} unexpectedly passed"
    );
    out
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

/// Synthesize train and test sets and learn a two-class dictionary.
fn pipeline_setup(dir: &Path) {
    std::fs::write(dir.join("spec.toml"), SPEC).unwrap();
    run_ok(
        dir,
        &[
            "synth",
            "--spec",
            "spec.toml",
            "--seed",
            "7",
            "--out-dir",
            "train",
        ],
    );
    run_ok(
        dir,
        &[
            "synth",
            "--spec",
            "spec.toml",
            "--seed",
            "8",
            "--out-dir",
            "test",
        ],
    );
    run_ok(
        dir,
        &[
            "build-dict",
            "--sensor",
            "train/stream.sensor",
            "--labels",
            "train/stream.labels",
            "--class",
            "feeding",
            "--axes",
            "X,Z",
            "--anchor",
            "X",
            "--min-len",
            "0.8",
            "--max-len",
            "1.2",
            "--len-step",
            "0.2",
            "--stride",
            "4",
            "--out",
            "run.dict",
        ],
    );
    run_ok(
        dir,
        &[
            "build-dict",
            "--sensor",
            "train/stream.sensor",
            "--labels",
            "train/stream.labels",
            "--class",
            "preening",
            "--axes",
            "X",
            "--anchor",
            "X",
            "--min-len",
            "0.8",
            "--max-len",
            "1.4",
            "--len-step",
            "0.2",
            "--stride",
            "4",
            "--append",
            "--out",
            "run.dict",
        ],
    );
}

fn report_field(report: &str, key: &str) -> String {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} ")))
        .unwrap_or_else(|| panic!("no {key} line in report:\n{report}"))
        .to_string()
}

#[test]
fn full_pipeline_scores_every_held_out_bag() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    pipeline_setup(dir);

    let stdout = run_ok(
        dir,
        &[
            "match",
            "--sensor",
            "test/stream.sensor",
            "--dict",
            "run.dict",
            "--out",
            "test.events",
        ],
    );
    assert!(stdout.contains("event(s) written"), "{stdout}");

    for class in ["feeding", "preening"] {
        let report = format!("{class}.report");
        let stdout = run_ok(
            dir,
            &[
                "evaluate",
                "--events",
                "test.events",
                "--labels",
                "test/stream.labels",
                "--class",
                class,
                "--out",
                &report,
            ],
        );
        // The human summary goes to stdout; the machine report to disk.
        assert!(stdout.contains("precision"), "{stdout}");
        let report = read(dir, &report);
        assert_eq!(report_field(&report, "fp"), "0", "{class}:\n{report}");
        assert_eq!(report_field(&report, "fn"), "0", "{class}:\n{report}");
        assert_eq!(report_field(&report, "tp"), "6", "{class}:\n{report}");
        assert_eq!(report_field(&report, "precision"), "1");
        assert_eq!(report_field(&report, "recall"), "1");
    }
}

#[test]
fn chunked_match_is_byte_identical_to_whole_stream() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    pipeline_setup(dir);

    run_ok(
        dir,
        &[
            "match",
            "--sensor",
            "test/stream.sensor",
            "--dict",
            "run.dict",
            "--out",
            "whole.events",
        ],
    );
    run_ok(
        dir,
        &[
            "match",
            "--sensor",
            "test/stream.sensor",
            "--dict",
            "run.dict",
            "--chunk",
            "4000",
            "--overlap",
            "300",
            "--out",
            "chunked.events",
        ],
    );
    // Header comments echo the chunk flags, so compare data rows.
    let strip = |text: String| -> Vec<String> {
        text.lines()
            .filter(|l| !l.starts_with('#'))
            .map(str::to_string)
            .collect()
    };
    assert_eq!(
        strip(read(dir, "whole.events")),
        strip(read(dir, "chunked.events"))
    );
    // Omitting --overlap picks a safe default.
    run_ok(
        dir,
        &[
            "match",
            "--sensor",
            "test/stream.sensor",
            "--dict",
            "run.dict",
            "--chunk",
            "4000",
            "--out",
            "defaulted.events",
        ],
    );
    assert_eq!(
        strip(read(dir, "whole.events")),
        strip(read(dir, "defaulted.events"))
    );
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("spec.toml"), SPEC).unwrap();

    run_ok(
        dir,
        &[
            "synth",
            "--spec",
            "spec.toml",
            "--seed",
            "42",
            "--out-dir",
            "a",
        ],
    );
    run_ok(
        dir,
        &[
            "synth",
            "--spec",
            "spec.toml",
            "--seed",
            "42",
            "--out-dir",
            "b",
        ],
    );
    for name in ["stream.sensor", "stream.labels", "stream.plants"] {
        assert_eq!(
            read(dir, &format!("a/{name}")),
            read(dir, &format!("b/{name}")),
            "{name} differs between identical runs"
        );
    }
    // A different seed must actually change the data.
    run_ok(
        dir,
        &[
            "synth",
            "--spec",
            "spec.toml",
            "--seed",
            "43",
            "--out-dir",
            "c",
        ],
    );
    assert_ne!(read(dir, "a/stream.sensor"), read(dir, "c/stream.sensor"));

    let build = [
        "build-dict",
        "--sensor",
        "a/stream.sensor",
        "--labels",
        "a/stream.labels",
        "--class",
        "feeding",
        "--axes",
        "X,Z",
        "--anchor",
        "X",
        "--min-len",
        "0.8",
        "--max-len",
        "1.2",
        "--len-step",
        "0.2",
        "--stride",
        "4",
    ];
    let mut first = build.to_vec();
    first.extend(["--out", "first.dict"]);
    let mut second = build.to_vec();
    second.extend(["--out", "second.dict"]);
    run_ok(dir, &first);
    run_ok(dir, &second);
    assert_eq!(read(dir, "first.dict"), read(dir, "second.dict"));
}

#[test]
fn frequency_bins_events_and_tolerates_an_empty_list() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    pipeline_setup(dir);
    run_ok(
        dir,
        &[
            "match",
            "--sensor",
            "test/stream.sensor",
            "--dict",
            "run.dict",
            "--out",
            "test.events",
        ],
    );
    run_ok(
        dir,
        &[
            "frequency",
            "--events",
            "test.events",
            "--window-s",
            "30",
            "--stride-s",
            "30",
            "--out",
            "test.freq",
        ],
    );
    let freq = read(dir, "test.freq");
    assert!(freq.contains("window_start_s feeding preening"), "{freq}");
    let windows: Vec<&str> = freq
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect();
    assert_eq!(windows.len(), 4, "120 s at stride 30:\n{freq}");

    // An event file with no rows still yields a (single, all-zero) window.
    std::fs::write(
        dir.join("empty.events"),
        "# events v1\nclass start_index start_time_s length dist_x dist_y dist_z\n",
    )
    .unwrap();
    run_ok(
        dir,
        &[
            "frequency",
            "--events",
            "empty.events",
            "--window-s",
            "30",
            "--stride-s",
            "30",
            "--out",
            "empty.freq",
        ],
    );
    let freq = read(dir, "empty.freq");
    let rows: Vec<&str> = freq.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows, vec!["window_start_s", "0"], "{freq}");
}

#[test]
fn failures_exit_nonzero_with_single_line_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("spec.toml"), SPEC).unwrap();

    // Missing input file: the error names the path.
    let out = run_err(
        dir,
        &[
            "match",
            "--sensor",
            "nope.sensor",
            "--dict",
            "nope.dict",
            "--out",
            "x.events",
        ],
    );
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.starts_with("error: "), "{stderr}");
    assert_eq!(stderr.trim_end().lines().count(), 1, "{stderr}");
    assert!(stderr.contains("nope.sensor"), "{stderr}");

    // Malformed sensor rows: itemized, still one line.
    std::fs::write(
        dir.join("bad.sensor"),
        "# columns = index x\n1 0.5\n2 oops\n9 0.7\n",
    )
    .unwrap();
    run_ok(
        dir,
        &[
            "synth",
            "--spec",
            "spec.toml",
            "--seed",
            "1",
            "--out-dir",
            "d",
        ],
    );
    let out = run_err(
        dir,
        &[
            "build-dict",
            "--sensor",
            "bad.sensor",
            "--labels",
            "d/stream.labels",
            "--class",
            "feeding",
            "--axes",
            "X",
            "--anchor",
            "X",
            "--min-len",
            "0.5",
            "--max-len",
            "0.5",
            "--out",
            "x.dict",
        ],
    );
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.trim_end().lines().count(), 1, "{stderr}");
    assert!(stderr.contains("bad.sensor"), "{stderr}");
    assert!(stderr.contains("2 bad rows"), "{stderr}");

    // Evaluating a class absent from the labels is an error, not NA spam.
    std::fs::write(
        dir.join("empty.events"),
        "# events v1\nclass start_index start_time_s length dist_x dist_y dist_z\n",
    )
    .unwrap();
    let out = run_err(
        dir,
        &[
            "evaluate",
            "--events",
            "empty.events",
            "--labels",
            "d/stream.labels",
            "--class",
            "bathing",
            "--out",
            "x.report",
        ],
    );
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("bathing"), "{stderr}");

    // Appending the same class twice is rejected.
    fn build_feeding(append: bool) -> Vec<&'static str> {
        let mut args = vec![
            "build-dict",
            "--sensor",
            "d/stream.sensor",
            "--labels",
            "d/stream.labels",
            "--class",
            "feeding",
            "--axes",
            "X",
            "--anchor",
            "X",
            "--min-len",
            "0.8",
            "--max-len",
            "1.0",
            "--len-step",
            "0.2",
            "--stride",
            "8",
            "--out",
            "dup.dict",
        ];
        if append {
            args.push("--append");
        }
        args
    }
    run_ok(dir, &build_feeding(false));
    let out = run_err(dir, &build_feeding(true));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("feeding"), "{stderr}");
}

#[test]
fn output_headers_echo_their_configuration() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    pipeline_setup(dir);
    run_ok(
        dir,
        &[
            "match",
            "--sensor",
            "test/stream.sensor",
            "--dict",
            "run.dict",
            "--chunk",
            "4000",
            "--overlap",
            "300",
            "--out",
            "test.events",
        ],
    );
    let events = read(dir, "test.events");
    assert!(events.contains("# sensor = test/stream.sensor"), "{events}");
    assert!(events.contains("# dictionary = run.dict"), "{events}");
    assert!(events.contains("# chunk = 4000"), "{events}");
    assert!(events.contains("# overlap = 300"), "{events}");

    let dict = read(dir, "run.dict");
    assert!(dict.contains("series-id train/stream.sensor"), "{dict}");
    assert!(dict.contains("meta search.feeding"), "{dict}");
    assert!(dict.contains("meta search.preening"), "{dict}");

    let sensor_head: String = read(dir, "train/stream.sensor")
        .lines()
        .take(5)
        .collect::<Vec<_>>()
        .join("\n");
    assert!(sensor_head.contains("# seed = 7"), "{sensor_head}");
    assert!(sensor_head.contains("# spec = spec.toml"), "{sensor_head}");
}

#[test]
fn build_dict_converts_seconds_using_the_declared_rate() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    // 20 Hz stream: 0.8 s → 16 samples, 1.2 s → 24 samples.
    let spec = SPEC.replace("sample_rate_hz = 100.0", "sample_rate_hz = 20.0");
    std::fs::write(dir.join("spec.toml"), spec).unwrap();
    run_ok(
        dir,
        &[
            "synth",
            "--spec",
            "spec.toml",
            "--seed",
            "3",
            "--out-dir",
            "s",
        ],
    );
    let stdout = run_ok(
        dir,
        &[
            "build-dict",
            "--sensor",
            "s/stream.sensor",
            "--labels",
            "s/stream.labels",
            "--class",
            "feeding",
            "--axes",
            "X,Z",
            "--anchor",
            "X",
            "--min-len",
            "0.8",
            "--max-len",
            "1.2",
            "--len-step",
            "0.2",
            "--out",
            "s.dict",
        ],
    );
    let dict = read(dir, "s.dict");
    assert!(
        dict.contains("lengths=16..=24 step=4"),
        "searched lengths should be in samples at 20 Hz:\n{dict}\n{stdout}"
    );
}

#[test]
fn help_documents_every_subcommand() {
    let tmp = tempfile::tempdir().unwrap();
    let help = run_ok(tmp.path(), &["--help"]);
    for sub in ["build-dict", "match", "evaluate", "frequency", "synth"] {
        assert!(help.contains(sub), "missing {sub} in:\n{help}");
    }
    for sub in ["build-dict", "match", "evaluate", "frequency", "synth"] {
        let sub_help = run_ok(tmp.path(), &[sub, "--help"]);
        assert!(sub_help.contains("--out"), "{sub_help}");
    }
}
