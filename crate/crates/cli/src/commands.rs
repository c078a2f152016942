use std::fmt;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use serde::Serialize;
use vsnit::data::io::{read_samples, read_sequences, write_samples, write_sequences};
use vsnit::data::is_subsequence;
use vsnit::metrics::{
    activity_distribution, average_daily_activities, insertion_pattern_topk, write_patterns_csv,
    CellVerdict, DistributionTable,
};
use vsnit::model::checkpoint;
use vsnit::{
    build_samples, compare_transitions, evaluate, generate_population, recover_batch,
    split_samples, transition_analysis, DaySequence, Error, GeneratorConfig, MetricsReport, Model,
    RecoverySample, Trainer,
};

use crate::config::RunConfig;
use crate::{Command, Flavor, Shared};

const TOP_PATTERNS: usize = 20;
const RECOVER_CHUNK: usize = 256;

/// A usage or configuration problem; exits with status 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// 2 for bad input or configuration, 1 for everything else.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() || cause.is::<std::io::Error>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Contract(_) | Error::Numeric(_) | Error::Dimension { .. } | Error::Index { .. } => 1,
                _ => 2,
            };
        }
    }
    1
}

pub fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Gen { shared, out, person_days, p_remove } => gen(&shared, &out, person_days, p_remove),
        Command::Train {
            shared,
            data,
            flavor,
            out,
            steps,
            epochs,
            batch_size,
            lr,
            dropout,
            checkpoint_every,
            resume,
        } => {
            let overrides = TrainOverrides { steps, epochs, batch_size, lr, checkpoint_every };
            train(&shared, &data, flavor, &out, overrides, dropout, resume)
        }
        Command::Recover { shared: _, model, data, out, max_rounds } => recover(&model, &data, &out, max_rounds),
        Command::Eval { shared: _, data, hyps, out } => eval(&data, &hyps, &out),
        Command::Compare { shared: _, data, a, b, label_a, label_b, out } => {
            compare(&data, &a, &b, &label_a, &label_b, &out)
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn load_samples(path: &Path) -> anyhow::Result<Vec<RecoverySample>> {
    read_samples(path).with_context(|| format!("reading samples {}", path.display()))
}

fn load_hypotheses(path: &Path, expected: usize) -> anyhow::Result<Vec<DaySequence>> {
    let hyps = read_sequences(path).with_context(|| format!("reading hypotheses {}", path.display()))?;
    if hyps.len() != expected {
        bail!(Usage(format!(
            "{} has {} hypotheses for {expected} samples",
            path.display(),
            hyps.len()
        )));
    }
    Ok(hyps)
}

// Hypotheses that drop input activities are bad input here, not a breach.
fn as_usage(e: Error) -> anyhow::Error {
    match e {
        Error::Contract(m) => Usage(m).into(),
        other => other.into(),
    }
}

#[derive(Serialize)]
struct GenSummary {
    seed: u64,
    person_days: usize,
    samples: usize,
    train: usize,
    valid: usize,
    test: usize,
    total_activities: usize,
    total_removed: usize,
    mean_daily_activities: f64,
    mean_daily_incomplete: f64,
    generator: GeneratorConfig,
}

fn gen(shared: &Shared, out: &Path, person_days: Option<usize>, p_remove: Option<f64>) -> anyhow::Result<()> {
    let mut config = RunConfig::load(shared.config.as_deref())?.generator;
    if let Some(seed) = shared.seed {
        config.seed = seed;
    }
    if let Some(n) = person_days {
        config.person_days = n;
    }
    if let Some(p) = p_remove {
        config.p_remove = p;
    }
    config.validate()?;
    let seed = config.seed;
    let days = generate_population(&config, seed)?;
    let samples = build_samples(&days, config.p_remove, seed)?;
    let (train, valid, test) = split_samples(&samples, seed);

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for (name, set) in [("samples", &samples), ("train", &train), ("valid", &valid), ("test", &test)] {
        write_samples(&out.join(format!("{name}.jsonl")), set)?;
    }
    let mean = |it: Vec<&DaySequence>| {
        if it.is_empty() {
            Ok(0.0)
        } else {
            average_daily_activities(it)
        }
    };
    let summary = GenSummary {
        seed,
        person_days: days.len(),
        samples: samples.len(),
        train: train.len(),
        valid: valid.len(),
        test: test.len(),
        total_activities: days.iter().map(DaySequence::len).sum(),
        total_removed: samples.iter().map(|s| s.removed_positions.len()).sum(),
        mean_daily_activities: mean(days.iter().collect())?,
        mean_daily_incomplete: mean(samples.iter().map(|s| &s.incomplete).collect())?,
        generator: config,
    };
    write_json(&out.join("summary.json"), &summary)?;
    eprintln!(
        "generated {} person-days (mean {:.3} activities) into {}",
        summary.person_days,
        summary.mean_daily_activities,
        out.display()
    );
    Ok(())
}

struct TrainOverrides {
    steps: Option<usize>,
    epochs: Option<usize>,
    batch_size: Option<usize>,
    lr: Option<f64>,
    checkpoint_every: Option<usize>,
}

impl TrainOverrides {
    fn apply(&self, c: &mut vsnit::TrainConfig) {
        if let Some(s) = self.steps {
            c.max_steps = Some(s);
        }
        if let Some(e) = self.epochs {
            c.epochs = e;
            if self.steps.is_none() {
                c.max_steps = None;
            }
        }
        if let Some(b) = self.batch_size {
            c.batch_size = b;
        }
        if let Some(lr) = self.lr {
            c.lr = lr;
        }
        if let Some(k) = self.checkpoint_every {
            c.checkpoint_every = Some(k);
        }
    }
}

pub fn report_path(checkpoint: &Path) -> PathBuf {
    checkpoint.with_extension("report.json")
}

pub fn timing_path(checkpoint: &Path) -> PathBuf {
    checkpoint.with_extension("timing.json")
}

#[derive(Serialize)]
struct Timing {
    wall_clock_secs: f64,
    steps: usize,
    secs_per_step: f64,
}

fn train(
    shared: &Shared,
    data: &Path,
    flavor: Flavor,
    out: &Path,
    overrides: TrainOverrides,
    dropout: Option<f64>,
    resume: bool,
) -> anyhow::Result<()> {
    let samples = load_samples(data)?;
    if samples.is_empty() {
        bail!(Usage(format!("{} holds no samples", data.display())));
    }
    let use_vsn = flavor == Flavor::Vsnit;
    let mut trainer = if resume {
        let mut t = Trainer::resume(out, None)
            .with_context(|| format!("resuming from {}", out.display()))?;
        if t.model.config.use_vsn != use_vsn {
            bail!(Usage(format!("checkpoint {} is not a {flavor:?} model", out.display())));
        }
        overrides.apply(&mut t.config);
        t.config.validate()?;
        t
    } else {
        let run = RunConfig::load(shared.config.as_deref())?;
        let (mut mc, mut tc) = (run.model, run.train);
        mc.use_vsn = use_vsn;
        if let Some(p) = dropout {
            mc.dropout = p;
        }
        if let Some(seed) = shared.seed {
            mc.init_seed = seed;
            tc.seed = seed;
        }
        overrides.apply(&mut tc);
        Trainer::new(Model::new(mc)?, tc)?
    };
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let started = Instant::now();
    let from = trainer.step;
    let report = trainer.run(&samples, Some(out))?;
    let secs = started.elapsed().as_secs_f64();

    // Wall-clock time goes to its own file so the report is reproducible.
    let mut value = serde_json::to_value(&report)?;
    if let Some(map) = value.as_object_mut() {
        map.remove("wall_clock_secs");
    }
    write_json(&report_path(out), &value)?;
    let ran = report.steps - from;
    write_json(
        &timing_path(out),
        &Timing {
            wall_clock_secs: secs,
            steps: ran,
            secs_per_step: if ran > 0 { secs / ran as f64 } else { 0.0 },
        },
    )?;
    let (first, last) = report.smoothed_ends((report.losses.len() / 4).clamp(1, 50));
    eprintln!(
        "trained {} steps {from}..{} in {secs:.1}s, smoothed loss {first:.4} -> {last:.4}, {} skipped",
        report.flavor, report.steps, report.skipped_steps
    );
    Ok(())
}

fn recover(model_path: &Path, data: &Path, out: &Path, max_rounds: Option<usize>) -> anyhow::Result<()> {
    let model = checkpoint::load(model_path)
        .with_context(|| format!("loading checkpoint {}", model_path.display()))?;
    let samples = load_samples(data)?;
    let rounds = max_rounds.unwrap_or(model.config.max_rounds);
    let inputs: Vec<DaySequence> = samples.iter().map(|s| s.incomplete.clone()).collect();
    let mut hyps = Vec::with_capacity(inputs.len());
    let mut truncated = 0;
    for chunk in inputs.chunks(RECOVER_CHUNK) {
        for r in recover_batch(&model, chunk, rounds)? {
            truncated += r.truncated as usize;
            hyps.push(r.day);
        }
    }
    for (i, (input, hyp)) in inputs.iter().zip(&hyps).enumerate() {
        if !is_subsequence(&input.labels(), &hyp.labels()) {
            bail!(
                "hypothesis {i} does not contain its input: {:?} -> {:?}",
                input.labels(),
                hyp.labels()
            );
        }
    }
    write_sequences(out, &hyps)?;
    eprintln!(
        "recovered {} sequences with up to {rounds} rounds, {truncated} truncated",
        hyps.len()
    );
    Ok(())
}

fn eval(data: &Path, hyps_path: &Path, out: &Path) -> anyhow::Result<()> {
    let samples = load_samples(data)?;
    let hyps = load_hypotheses(hyps_path, samples.len())?;
    let report = evaluate(&samples, &hyps).map_err(as_usage)?;
    let transitions = transition_analysis(&samples, &hyps).map_err(as_usage)?;
    let patterns = insertion_pattern_topk(&samples, &hyps, TOP_PATTERNS).map_err(as_usage)?;

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_json(&out.join("report.json"), &report)?;
    write_json(&out.join("transitions.json"), &transitions)?;
    let table = DistributionTable {
        columns: vec![
            ("target".into(), activity_distribution(samples.iter().map(|s| &s.complete))),
            ("input".into(), activity_distribution(samples.iter().map(|s| &s.incomplete))),
            ("hypothesis".into(), activity_distribution(&hyps)),
        ],
    };
    table.write_csv(create(&out.join("distribution.csv"))?)?;
    write_patterns_csv(&patterns, create(&out.join("patterns.csv"))?)?;
    transitions.write_csv(create(&out.join("transitions.csv"))?)?;
    eprintln!(
        "{} samples: f1 {:.3}, order-independent f1 {:.3}",
        report.samples, report.f1, report.oi_f1
    );
    Ok(())
}

#[derive(Serialize)]
struct Comparison {
    label_a: String,
    label_b: String,
    metrics_a: MetricsReport,
    metrics_b: MetricsReport,
    wins_a: usize,
    wins_b: usize,
    ties: usize,
    cells: Vec<CellVerdict>,
}

fn compare(data: &Path, a: &Path, b: &Path, label_a: &str, label_b: &str, out: &Path) -> anyhow::Result<()> {
    let samples = load_samples(data)?;
    let hyps_a = load_hypotheses(a, samples.len())?;
    let hyps_b = load_hypotheses(b, samples.len())?;
    let ta = transition_analysis(&samples, &hyps_a).map_err(as_usage)?;
    let tb = transition_analysis(&samples, &hyps_b).map_err(as_usage)?;
    let cmp = compare_transitions(&ta, &tb)?;
    let result = Comparison {
        label_a: label_a.into(),
        label_b: label_b.into(),
        metrics_a: evaluate(&samples, &hyps_a).map_err(as_usage)?,
        metrics_b: evaluate(&samples, &hyps_b).map_err(as_usage)?,
        wins_a: cmp.wins_a,
        wins_b: cmp.wins_b,
        ties: cmp.ties,
        cells: cmp.cells.clone(),
    };
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    write_json(out, &result)?;
    cmp.write_csv(create(&out.with_extension("csv"))?)?;
    let table = DistributionTable {
        columns: vec![
            ("target".into(), activity_distribution(samples.iter().map(|s| &s.complete))),
            (label_a.into(), activity_distribution(&hyps_a)),
            (label_b.into(), activity_distribution(&hyps_b)),
        ],
    };
    table.write_csv(create(&out.with_extension("distribution.csv"))?)?;
    eprintln!(
        "{label_a} wins {} cells, {label_b} wins {}, {} ties; order-independent f1 {:.3} vs {:.3}",
        result.wins_a, result.wins_b, result.ties, result.metrics_a.oi_f1, result.metrics_b.oi_f1
    );
    Ok(())
}
