//! Batch driver for the ethogram pipeline. Five subcommands cover the
//! whole workflow: generate synthetic data, learn a dictionary from weak
//! labels, match a stream, score the matches, and bin events over time.
//!
//! Every run is deterministic: identical inputs, flags and seed produce
//! byte-identical output files. Failures exit nonzero with a single-line
//! `error: …` message on stderr so callers can scrape it.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use ethogram::dictionary::{build_dictionary, BuildConfig, ClassSpec, LengthRange, TpMembership};
use ethogram::evaluate::{bags_from_labels, frequency_profile, mil_score};
use ethogram::io;
use ethogram::matcher::{match_stream, match_windowed};
use ethogram::series::{Axis, DEFAULT_EPSILON};
use ethogram::synth::{synth_generate, SynthSpec};

#[derive(Parser)]
#[command(
    name = "ethogram",
    version,
    about = "Learn behavior templates from weakly labeled accelerometer data and match them"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn one template for one behavior class from a labeled recording
    BuildDict(BuildDictArgs),
    /// Match every dictionary template against a sensor stream
    Match(MatchArgs),
    /// Score an event list against interval labels, one bag per interval
    Evaluate(EvaluateArgs),
    /// Bin events into sliding time windows (plot-ready counts)
    Frequency(FrequencyArgs),
    /// Generate a synthetic labeled recording with planted waveforms
    Synth(SynthArgs),
}

#[derive(Args)]
struct BuildDictArgs {
    /// Sensor recording to train on
    #[arg(long)]
    sensor: PathBuf,
    /// Weak interval labels for the recording
    #[arg(long)]
    labels: PathBuf,
    /// Behavior class to learn
    #[arg(long)]
    class: String,
    /// Axes the template carries, comma-separated (e.g. X,Z)
    #[arg(long)]
    axes: String,
    /// Axis used for the candidate search
    #[arg(long)]
    anchor: String,
    /// Shortest candidate length, in seconds
    #[arg(long)]
    min_len: f64,
    /// Longest candidate length, in seconds
    #[arg(long)]
    max_len: f64,
    /// Length increment, in seconds (default: one sample)
    #[arg(long)]
    len_step: Option<f64>,
    /// Candidate start stride, in samples
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Flatness threshold for standard deviations
    #[arg(long)]
    epsilon: Option<f64>,
    /// Add this class to an existing dictionary instead of overwriting
    #[arg(long)]
    append: bool,
    /// Dictionary file to write
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MatchArgs {
    /// Sensor recording to scan
    #[arg(long)]
    sensor: PathBuf,
    /// Dictionary of templates to match
    #[arg(long)]
    dict: PathBuf,
    /// Process the stream in chunks of this many samples
    #[arg(long)]
    chunk: Option<usize>,
    /// Samples shared between consecutive chunks (default: smallest safe value)
    #[arg(long, requires = "chunk")]
    overlap: Option<usize>,
    /// Event file to write
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Event file produced by `match`
    #[arg(long)]
    events: PathBuf,
    /// Interval labels; every interval becomes one bag
    #[arg(long)]
    labels: PathBuf,
    /// Class to score
    #[arg(long)]
    class: String,
    /// Report file to write
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FrequencyArgs {
    /// Event file produced by `match`
    #[arg(long)]
    events: PathBuf,
    /// Window length, in seconds
    #[arg(long)]
    window_s: f64,
    /// Window stride, in seconds
    #[arg(long)]
    stride_s: f64,
    /// Total span to bin, in seconds (default: covers the last event)
    #[arg(long)]
    span_s: Option<f64>,
    /// Profile file to write
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// TOML description of noise, classes and plant counts
    #[arg(long)]
    spec: PathBuf,
    /// RNG seed; same seed, same files
    #[arg(long)]
    seed: u64,
    /// Directory for the sensor, label and ground-truth files
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::BuildDict(args) => build_dict(args),
        Command::Match(args) => match_cmd(args),
        Command::Evaluate(args) => evaluate(args),
        Command::Frequency(args) => frequency(args),
        Command::Synth(args) => synth(args),
    }
}

fn parse_axis(name: &str) -> anyhow::Result<Axis> {
    name.parse()
        .map_err(|e: ethogram::Error| anyhow::anyhow!("{e}"))
}

fn parse_axes(list: &str) -> anyhow::Result<Vec<Axis>> {
    let mut axes = Vec::new();
    for part in list.split(',') {
        let axis = parse_axis(part.trim())?;
        if axes.contains(&axis) {
            bail!("axis {axis} listed twice in --axes");
        }
        axes.push(axis);
    }
    Ok(axes)
}

/// Seconds → samples for user-facing length flags.
fn to_samples(seconds: f64, rate: f64, flag: &str) -> anyhow::Result<usize> {
    if !(seconds.is_finite() && seconds > 0.0) {
        bail!("{flag} must be a positive number of seconds, got {seconds}");
    }
    Ok((seconds * rate).round() as usize)
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn build_dict(args: BuildDictArgs) -> anyhow::Result<()> {
    let (series, labels) = io::labels::ingest(&args.sensor, &args.labels)?;
    let rate = series.sample_rate_hz();
    let axes = parse_axes(&args.axes)?;
    let anchor = parse_axis(&args.anchor)?;

    let min = to_samples(args.min_len, rate, "--min-len")?;
    let max = to_samples(args.max_len, rate, "--max-len")?;
    let step = match args.len_step {
        Some(s) => to_samples(s, rate, "--len-step")?.max(1),
        None => 1,
    };
    if args.stride == 0 {
        bail!("--stride must be at least 1");
    }

    // When appending, the existing dictionary pins epsilon so thresholds
    // learned across runs stay comparable.
    let existing = if args.append && args.out.exists() {
        Some(io::dictionary_file::read_dictionary(&args.out)?)
    } else {
        None
    };
    let epsilon = match (&existing, args.epsilon) {
        (Some(dict), Some(flag)) if flag != dict.epsilon => {
            bail!(
                "--epsilon {flag} conflicts with epsilon {} in {}",
                dict.epsilon,
                display(&args.out)
            )
        }
        (Some(dict), _) => dict.epsilon,
        (None, Some(flag)) => flag,
        (None, None) => DEFAULT_EPSILON,
    };

    let config = BuildConfig {
        classes: vec![ClassSpec {
            class: args.class.clone(),
            axes,
            anchor,
            lengths: LengthRange::new(min, max, step),
            stride: args.stride,
        }],
        epsilon,
        membership: TpMembership::StartInside,
        allow_partial: false,
        series_id: display(&args.sensor),
    };
    let outcome = build_dictionary(&series, &labels, &config)?;

    let mut dict = match existing {
        Some(mut old) => {
            for template in outcome.dictionary.templates() {
                old.insert(template.clone())?;
            }
            for (key, value) in outcome.dictionary.metadata {
                old.metadata.insert(key, value);
            }
            old
        }
        None => outcome.dictionary,
    };
    dict.metadata
        .insert(format!("source.{}", args.class), display(&args.sensor));

    io::dictionary_file::write_dictionary(&args.out, &dict)?;
    let template = dict.template_for(&args.class).expect("just built");
    println!(
        "learned {} ({} samples, {:.2} s) at position {}; dictionary now holds {} template(s) in {}",
        args.class,
        template.length,
        template.length as f64 / rate,
        template.source_position + 1,
        dict.templates().len(),
        display(&args.out)
    );
    Ok(())
}

fn match_cmd(args: MatchArgs) -> anyhow::Result<()> {
    let series = io::sensor::read_sensor(&args.sensor)?;
    let dict = io::dictionary_file::read_dictionary(&args.dict)?;

    let mut comments = vec![
        ("sensor".to_string(), display(&args.sensor)),
        ("dictionary".to_string(), display(&args.dict)),
    ];
    let events = match args.chunk {
        Some(chunk) => {
            let overlap = args.overlap.unwrap_or_else(|| {
                let max_m = dict.max_template_len().unwrap_or(0);
                max_m + max_m.div_ceil(2)
            });
            comments.push(("chunk".into(), chunk.to_string()));
            comments.push(("overlap".into(), overlap.to_string()));
            match_windowed(&series, &dict, chunk, overlap)?
        }
        None => match_stream(&series, &dict)?,
    };

    io::events::write_events(&args.out, &events, &comments)?;
    println!(
        "{} event(s) written to {}",
        events.len(),
        display(&args.out)
    );
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> anyhow::Result<()> {
    let events = io::events::read_events(&args.events)?;
    let labels = io::labels::read_labels(&args.labels, None)?;
    let bags = bags_from_labels(&labels)?;
    if !bags.iter().any(|b| b.class() == args.class) {
        bail!(
            "no bags of class {:?} in {}",
            args.class,
            display(&args.labels)
        );
    }
    let score = mil_score(&events, &bags, &args.class)?;

    let comments = vec![
        ("events".to_string(), display(&args.events)),
        ("labels".to_string(), display(&args.labels)),
    ];
    io::report::write_report(&args.out, &score, &comments)?;
    print!("{}", io::report::render_human(&score));
    println!("report written to {}", display(&args.out));
    Ok(())
}

fn frequency(args: FrequencyArgs) -> anyhow::Result<()> {
    let events = io::events::read_events(&args.events)?;
    if !(args.window_s.is_finite() && args.window_s > 0.0) {
        bail!("--window-s must be positive, got {}", args.window_s);
    }
    if !(args.stride_s.is_finite() && args.stride_s > 0.0) {
        bail!("--stride-s must be positive, got {}", args.stride_s);
    }

    // Default span: far enough that the window grid reaches the last
    // event; an empty event list still gets one (all-zero) window.
    let t1 = match args.span_s {
        Some(s) => s,
        None => events
            .iter()
            .map(|e| e.start_time)
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0)
            .div_euclid(args.stride_s)
            .mul_add(args.stride_s, args.stride_s)
            .max(args.window_s),
    };
    let profile = frequency_profile(&events, (0.0, t1), args.window_s, args.stride_s)?;

    let comments = vec![("events".to_string(), display(&args.events))];
    io::frequency_file::write_frequency(&args.out, &profile, &comments)?;
    println!(
        "{} window(s), {} event(s) binned, written to {}",
        profile.window_starts.len(),
        profile.total(),
        display(&args.out)
    );
    Ok(())
}

fn synth(args: SynthArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.spec)
        .with_context(|| format!("reading {}", display(&args.spec)))?;
    let spec = SynthSpec::from_toml_str(&text)?;
    let output = synth_generate(&spec, args.seed)?;

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", display(&args.out_dir)))?;
    let comments = vec![
        ("spec".to_string(), display(&args.spec)),
        ("seed".to_string(), args.seed.to_string()),
    ];
    let sensor = args.out_dir.join("stream.sensor");
    let labels = args.out_dir.join("stream.labels");
    let plants = args.out_dir.join("stream.plants");
    io::sensor::write_sensor(&sensor, &output.series, &comments)?;
    io::labels::write_labels(&labels, &output.labels, &comments)?;
    io::ground_truth::write_plants(&plants, &output.plants, &comments)?;
    println!(
        "{} samples/axis across {} axes, {} plant(s) written to {}",
        output.series.len(),
        output.series.axes().count(),
        output.plants.len(),
        display(&args.out_dir)
    );
    Ok(())
}
