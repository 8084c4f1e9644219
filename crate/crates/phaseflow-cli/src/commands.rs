//! Subcommand bodies. Everything numeric happens in the library; these
//! functions read files, call it, and print.

use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use phaseflow::dataio::{self, LogprobReader};
use phaseflow::{
    validate_pair, CausalSmoother, CovarianceKind, Error, EvalReport, FitOptions, HmmModel,
    LabelSequence, MethodScores, ObservationSequence, PhaseSet, Result, SmoothingConfig,
};

use crate::pairing;
use crate::{
    BenchArgs, Command, DecodeArgs, EvalArgs, GenArgs, Mode, SmoothArgs, TrainArgs, UpsampleArgs,
};

fn quiet() -> bool {
    std::env::var_os("PHASEFLOW_QUIET").is_some_and(|v| !v.is_empty() && v != "0")
}

macro_rules! info {
    ($($arg:tt)*) => {
        if !quiet() {
            println!($($arg)*);
        }
    };
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Train(args) => train(&args),
        Command::Smooth(args) => smooth(&args),
        Command::Decode(args) => decode(&args),
        Command::Eval(args) => eval(&args),
        Command::Upsample(args) => upsample(&args),
        Command::Gen(args) => gen(&args),
        Command::Bench(args) => bench(&args),
    }
}

/// Eight classes get the surgical phase vocabulary; any other count is
/// numbered generically.
fn phase_names(k: usize) -> Result<PhaseSet> {
    if k == 8 {
        Ok(PhaseSet::cholecystectomy())
    } else {
        PhaseSet::numbered(k)
    }
}

/// Opens a feature stream; `-` reads standard input.
fn open_features(path: &Path, fps: f64) -> Result<LogprobReader<Box<dyn BufRead>>> {
    let inner: Box<dyn BufRead> = if path == Path::new("-") {
        Box::new(BufReader::new(io::stdin()))
    } else {
        Box::new(BufReader::new(File::open(path)?))
    };
    LogprobReader::new(inner, fps)
}

fn read_features(path: &Path, fps: f64) -> Result<ObservationSequence> {
    open_features(path, fps)?.into_sequence()
}

/// Labels may be integer ids or names from `phases`.
fn read_labels_flex(path: &Path, fps: f64, phases: &PhaseSet) -> Result<LabelSequence> {
    match dataio::read_labels(path, fps, None) {
        Err(Error::Parse { .. }) => dataio::read_labels(path, fps, Some(phases)),
        other => other,
    }
}

fn train(args: &TrainArgs) -> Result<()> {
    let pairs = match &args.manifest {
        Some(manifest) => pairing::read_manifest(manifest)?,
        None => pairing::pair_by_stem(&args.features, &args.labels)?,
    };

    let vocabulary = PhaseSet::cholecystectomy();
    let mut observations = Vec::with_capacity(pairs.len());
    let mut labels = Vec::with_capacity(pairs.len());
    for (feature_path, label_path) in &pairs {
        let obs = read_features(feature_path, args.fps)?;
        let lab = read_labels_flex(label_path, args.fps, &vocabulary)?;
        validate_pair(&obs, &lab)?;
        observations.push(obs);
        labels.push(lab);
    }

    let seen = labels
        .iter()
        .flat_map(|l| l.labels().iter().copied())
        .max()
        .map_or(0, |m| m + 1);
    let k = args.classes.unwrap_or(seen);
    if k == 0 {
        return Err(Error::InvalidParameter(
            "training data holds no frames; pass --classes or add data".into(),
        ));
    }
    for l in &labels {
        l.check_range(k)?;
    }

    let options = FitOptions {
        covariance: if args.diag_cov {
            CovarianceKind::Diagonal
        } else {
            CovarianceKind::Full
        },
    };
    let model = phaseflow::fit(&observations, &labels, k, &options)?;
    let phases = phase_names(k)?;
    dataio::save_model(&model, &phases, &args.out)?;

    let mut counts = vec![0usize; k];
    for l in &labels {
        for &s in l.labels() {
            counts[s] += 1;
        }
    }
    let nonzero = model.transition().iter().filter(|&&p| p > 0.0).count();
    info!(
        "fitted {} sequences: K={k} states, D={} dims",
        pairs.len(),
        model.dims()
    );
    for (s, n) in counts.iter().enumerate() {
        info!("  state {s} ({}): {n} frames", phases.name(s).unwrap());
    }
    info!("  transition matrix: {nonzero}/{} entries nonzero", k * k);
    info!("wrote {}", args.out.display());
    Ok(())
}

fn smooth(args: &SmoothArgs) -> Result<()> {
    let cfg = SmoothingConfig::new(args.window)?;
    let obs = read_features(&args.input, args.fps)?;
    dataio::write_logprobs(&phaseflow::smooth(&obs, &cfg), &args.out)?;
    info!(
        "smoothed {} frames (window {}) into {}",
        obs.len(),
        args.window,
        args.out.display()
    );
    Ok(())
}

fn decode(args: &DecodeArgs) -> Result<()> {
    let (model, _) = dataio::load_model(&args.model)?;
    let smoothing = args.smooth_window.map(SmoothingConfig::new).transpose()?;

    let labels = match args.mode {
        Mode::Offline => {
            let obs = read_features(&args.input, args.fps)?;
            check_dims(&model, obs.dims())?;
            let obs = match &smoothing {
                Some(cfg) => phaseflow::smooth(&obs, cfg),
                None => obs,
            };
            model.viterbi_offline(&obs)?.states
        }
        Mode::Online => {
            // One row at a time: smoother and decoder never see anything
            // beyond the frames read so far.
            let mut reader = open_features(&args.input, args.fps)?;
            check_dims(&model, reader.dims())?;
            let mut smoother = match &smoothing {
                Some(cfg) => Some(CausalSmoother::new(cfg, reader.dims())?),
                None => None,
            };
            let mut decoder = model.online_decoder();
            let mut states = Vec::new();
            for row in &mut reader {
                let row = row?;
                let row = match &mut smoother {
                    Some(s) => s.push(&row)?,
                    None => row,
                };
                states.push(decoder.step(&row)?);
            }
            if states.is_empty() {
                return Err(Error::EmptySequence);
            }
            LabelSequence::new(states, args.fps)?
        }
    };
    dataio::write_labels(&labels, &args.out)?;
    info!("decoded {} frames into {}", labels.len(), args.out.display());
    Ok(())
}

fn check_dims(model: &HmmModel, actual: usize) -> Result<()> {
    if model.dims() != actual {
        return Err(Error::DimensionMismatch {
            expected: model.dims(),
            actual,
        });
    }
    Ok(())
}

fn eval(args: &EvalArgs) -> Result<()> {
    let phases = phase_names(args.classes)?;
    let pred = read_labels_flex(&args.pred, args.fps, &phases)?;
    let gt = read_labels_flex(&args.gt, args.fps, &phases)?;
    let report = phaseflow::summarize(&pred, &gt, args.classes, args.margin_seconds)?;

    if let Some(path) = &args.dump_frames {
        dataio::write_frame_dump(&phaseflow::dump_frames(&pred, &gt)?, path)?;
    }
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serializes")
        );
    } else {
        print_report(&report, &phases, args.fps);
    }
    Ok(())
}

fn print_report(report: &EvalReport, phases: &PhaseSet, fps: f64) {
    println!("{:<28}{:>16}", "class", "jaccard");
    for (c, j) in report.per_class_jaccard.iter().enumerate() {
        let name = format!("{c}.{}", phases.name(c).unwrap());
        match j {
            Some(v) => println!("{name:<28}{v:>16.2}"),
            None => println!("{name:<28}{:>16}", "n/a"),
        }
    }
    let spread = format!("{:.2} +/- {:.2}", report.jaccard_mean, report.jaccard_std);
    println!("{:<28}{spread:>16}", "all classes");
    println!("{:<28}{:>16.2}", "accuracy", report.accuracy);
    println!("(margin {} s at {} fps)", report.margin_seconds, fps);
}

fn upsample(args: &UpsampleArgs) -> Result<()> {
    let labels = read_labels_flex(&args.input, args.fps, &PhaseSet::cholecystectomy())?;
    let up = dataio::upsample(&labels, args.factor, args.target_frames)?;
    dataio::write_labels(&up, &args.out)?;
    info!(
        "replicated {} frames {}x into {} frames",
        labels.len(),
        args.factor,
        up.len()
    );
    Ok(())
}

fn gen(args: &GenArgs) -> Result<()> {
    let cfg = args.scenario.resolve()?;
    let data = phaseflow::sample_dataset(&cfg)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let phases = phase_names(cfg.classes)?;
    dataio::save_model(&data.model, &phases, args.out_dir.join("truth.model.json"))?;
    for (split, seqs) in [("train", &data.train), ("test", &data.test)] {
        for (i, (labels, obs)) in seqs.iter().enumerate() {
            let stem = format!("{split}_{i:02}");
            dataio::write_logprobs(obs, args.out_dir.join(format!("{stem}.features.csv")))?;
            dataio::write_labels(labels, args.out_dir.join(format!("{stem}.labels.csv")))?;
        }
    }
    info!(
        "wrote {} train and {} test sequences plus truth.model.json to {}",
        data.train.len(),
        data.test.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn bench(args: &BenchArgs) -> Result<()> {
    if args.seeds == 0 {
        return Err(Error::InvalidParameter("seeds must be at least 1".into()));
    }
    let cfg = args.scenario.resolve()?;
    let results = phaseflow::run_seeds(&cfg, args.seeds)?;

    println!("{:>6}  {:<14}{:>10}{:>10}", "seed", "method", "accuracy", "jaccard");
    for (i, r) in results.iter().enumerate() {
        let seed = cfg.seed.wrapping_add(i as u64);
        for (name, scores) in method_rows(r) {
            println!(
                "{seed:>6}  {name:<14}{:>10.2}{:>10.2}",
                scores.accuracy, scores.jaccard_mean
            );
        }
    }

    println!();
    println!("mean +/- std over {} seeds", results.len());
    for idx in 0..3 {
        let name = method_rows(&results[0])[idx].0;
        let acc: Vec<f64> = results.iter().map(|r| method_rows(r)[idx].1.accuracy).collect();
        let jac: Vec<f64> = results
            .iter()
            .map(|r| method_rows(r)[idx].1.jaccard_mean)
            .collect();
        let (am, asd) = mean_std(&acc);
        let (jm, jsd) = mean_std(&jac);
        println!("{name:<14}{am:>8.2} +/- {asd:<6.2}{jm:>8.2} +/- {jsd:<6.2}");
    }
    let tally = phaseflow::ordering_tally(&results);
    println!(
        "ordering offline >= online >= smoothing: accuracy {}/{} seeds, jaccard {}/{} seeds",
        tally.accuracy_ordered, tally.runs, tally.jaccard_ordered, tally.runs
    );
    Ok(())
}

fn method_rows(r: &phaseflow::ExperimentResult) -> [(&'static str, MethodScores); 3] {
    [
        ("Avg Smoothing", r.smoothed_argmax),
        ("HMM Online", r.hmm_online),
        ("HMM Offline", r.hmm_offline),
    ]
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
