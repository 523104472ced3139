use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use prosoqa::audio::{read_wav, to_canonical_rate, write_wav_as, SampleFormat};
use prosoqa::condition::{apply_condition, ConditionSpec};
use prosoqa::eval::{
    evaluate_set, predict_span, read_predictions, write_predictions, write_results, Prediction, PredictorConfig,
    ResultsRow, SeedPredictions,
};
use prosoqa::harness::{
    load_manifest, materialize_condition, mix_manifests, run_experiment, shuffle_manifest_pairs, sweep_cutoff,
    write_manifest, write_sweep_table, ExperimentConfig, Manifest, ManifestRecord, MixSource, Split, SweepConfig,
    CACHE_ENV_VAR, DEFAULT_SWEEP_CUTOFFS_HZ,
};
use prosoqa::units::{
    extract_features, quantize, read_codebook, train_kmeans_rows, write_codebook, write_unit_lines, Codebook,
    FeatureConfig, FeatureMatrix, KmeansConfig,
};

#[derive(Parser)]
#[command(name = "prosoqa", version, about = "Speech conditions, discrete units and span evaluation for spoken QA")]
struct Cli {
    /// Directory for materialized condition audio.
    #[arg(long, global = true, env = CACHE_ENV_VAR, default_value = ".prosoqa-cache")]
    cache_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply a condition to a manifest (via the cache) or to individual files.
    Condition(ConditionArgs),
    /// Train a codebook or encode clips as unit sequences.
    #[command(subcommand)]
    Units(UnitsCommand),
    /// Predict answer spans with a trained codebook.
    Predict(PredictArgs),
    /// Score predictions against a manifest's gold spans.
    Eval(EvalArgs),
    /// Run the full pipeline for one train/test condition pair.
    Run(RunArgs),
    /// Run the prosodic condition at a list of cutoffs.
    Sweep(SweepArgs),
    /// Append seeded samples of other manifests to a primary one.
    Mix(MixArgs),
    /// Re-pair questions with other items' documents.
    ShufflePairs(ShuffleArgs),
}

#[derive(Args)]
struct ConditionArgs {
    /// natural, lexical, prosodic[:CUTOFF_HZ] or noise[:SEED]
    #[arg(long)]
    condition: String,
    #[arg(long, conflicts_with = "input")]
    manifest: Option<PathBuf>,
    /// WAV files to transform directly.
    #[arg(long, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Tagged manifest path, or output directory with --input.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum UnitsCommand {
    /// Train a k-means codebook on one split's documents.
    Train(TrainArgs),
    /// Write `id<TAB>units` lines for every question and document of a split.
    Encode(EncodeArgs),
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value = "train", value_parser = parse_split)]
    split: Split,
    #[arg(long, default_value_t = 1000)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    codebook: PathBuf,
    #[arg(long, default_value = "test", value_parser = parse_split)]
    split: Split,
    /// Collapse runs of repeated units.
    #[arg(long)]
    dedup: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    codebook: PathBuf,
    #[arg(long, default_value = "test", value_parser = parse_split)]
    split: Split,
    /// Seed recorded with each prediction.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long, default_value = "test", value_parser = parse_split)]
    split: Split,
    #[arg(long, default_value = "natural")]
    train_label: String,
    #[arg(long, default_value = "natural")]
    test_label: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 1000)]
    k: usize,
    /// Added to each run seed to seed its codebook.
    #[arg(long, default_value_t = 0)]
    codebook_seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: PipelineArgs,
    #[arg(long, default_value = "natural")]
    train: String,
    #[arg(long, default_value = "natural")]
    test: String,
    /// Re-pair test questions and documents with this seed.
    #[arg(long)]
    shuffle_seed: Option<u64>,
    /// Also write per-item predictions here.
    #[arg(long)]
    predictions: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: PipelineArgs,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SWEEP_CUTOFFS_HZ.to_vec())]
    cutoffs: Vec<f64>,
}

#[derive(Args)]
struct MixArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// PATH:FRACTION:LABEL, repeatable.
    #[arg(long = "add", required = true)]
    add: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ShuffleArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value = "test", value_parser = parse_split)]
    split: Split,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_split(s: &str) -> Result<Split, String> {
    match s {
        "train" => Ok(Split::Train),
        "dev" => Ok(Split::Dev),
        "test" => Ok(Split::Test),
        other => Err(format!("unknown split {other:?}")),
    }
}

fn parse_condition(s: &str) -> Result<ConditionSpec> {
    let (variant, param) = match s.split_once(':') {
        Some((v, p)) => (v, Some(p)),
        None => (s, None),
    };
    let cutoff = match (variant, param) {
        ("prosodic", Some(p)) => Some(p.parse().with_context(|| format!("cutoff {p:?}"))?),
        _ => None,
    };
    let seed = match (variant, param) {
        ("noise", Some(p)) => Some(p.parse().with_context(|| format!("noise seed {p:?}"))?),
        _ => None,
    };
    if param.is_some() && cutoff.is_none() && seed.is_none() {
        bail!("condition {variant:?} takes no parameter");
    }
    Ok(ConditionSpec::from_parts(variant, cutoff, seed, None)?)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn features(path: &Path) -> Result<FeatureMatrix> {
    let clip = read_wav(path)
        .and_then(|c| to_canonical_rate(&c))
        .with_context(|| format!("reading {}", path.display()))?;
    extract_features(&clip, &FeatureConfig::default()).with_context(|| format!("features of {}", path.display()))
}

fn records(manifest: &Manifest, split: Split) -> Result<Vec<&ManifestRecord>> {
    let out: Vec<_> = manifest.split(split).collect();
    if out.is_empty() {
        bail!("manifest has no {split:?} records");
    }
    Ok(out)
}

fn load_codebook(path: &Path) -> Result<Codebook> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_codebook(BufReader::new(file))?)
}

fn condition(cli: &Cli, args: &ConditionArgs) -> Result<()> {
    let spec = parse_condition(&args.condition)?;
    if let Some(manifest) = &args.manifest {
        let m = load_manifest(manifest)?;
        let out = materialize_condition(&m, &spec, &cli.cache_dir)?;
        write_manifest(&out.manifest, &args.out)?;
        eprintln!("{} clips written, {} reused", out.written, out.reused);
        return Ok(());
    }
    if args.input.is_empty() {
        bail!("give --manifest or --input");
    }
    std::fs::create_dir_all(&args.out)?;
    let label = spec.label();
    for path in &args.input {
        let clip = read_wav(path)
            .and_then(|c| to_canonical_rate(&c))
            .with_context(|| format!("reading {}", path.display()))?;
        let (out, _) = apply_condition(&clip, &spec)
            .with_context(|| format!("{}", path.display()))?
            .peak_normalized();
        let stem = path.file_stem().unwrap_or_default().to_string_lossy();
        let target = args.out.join(format!("{stem}.{label}.wav"));
        write_wav_as(&out, &target, SampleFormat::Float32)?;
    }
    Ok(())
}

fn units_train(args: &TrainArgs) -> Result<()> {
    let m = load_manifest(&args.manifest)?;
    let mut data = Vec::new();
    let mut dim = 0;
    for r in records(&m, args.split)? {
        let f = features(&r.document)?;
        dim = f.dim;
        data.extend_from_slice(f.values());
    }
    let cfg = KmeansConfig {
        k: args.k,
        seed: args.seed,
        max_iters: args.max_iters,
        ..Default::default()
    };
    let trace = train_kmeans_rows(&data, dim, &cfg)?;
    let mut out = create(&args.out)?;
    write_codebook(&trace.codebook, &mut out)?;
    out.flush()?;
    eprintln!(
        "k = {}, {} iterations, inertia {:.4}",
        cfg.k,
        trace.inertia_history.len(),
        trace.codebook.inertia.unwrap_or(f64::NAN)
    );
    Ok(())
}

fn units_encode(args: &EncodeArgs) -> Result<()> {
    let m = load_manifest(&args.manifest)?;
    let codebook = load_codebook(&args.codebook)?;
    let mut lines: Vec<(String, Vec<u32>)> = Vec::new();
    for r in records(&m, args.split)? {
        for (role, path) in [("question", &r.question), ("document", &r.document)] {
            let seq = quantize(&features(path)?, &codebook)?;
            let units = if args.dedup { seq.deduplicated().units } else { seq.units };
            lines.push((format!("{}:{role}", r.id), units));
        }
    }
    let mut out = create(&args.out)?;
    write_unit_lines(lines.iter().map(|(id, u)| (id.as_str(), u.as_slice())), &mut out)?;
    out.flush()?;
    Ok(())
}

fn predict(args: &PredictArgs) -> Result<()> {
    let m = load_manifest(&args.manifest)?;
    let codebook = load_codebook(&args.codebook)?;
    let cfg = FeatureConfig::default();
    let predictor = PredictorConfig::default();
    let mut preds = Vec::new();
    for r in records(&m, args.split)? {
        let q = quantize(&features(&r.question)?, &codebook)?.deduplicated();
        let d = quantize(&features(&r.document)?, &codebook)?.deduplicated();
        let span = predict_span(&q, &d, cfg.hop_s, &predictor).with_context(|| r.id.clone())?;
        preds.push(Prediction {
            id: r.id.clone(),
            seed: args.seed,
            span,
        });
    }
    preds.sort_by(|a, b| a.id.cmp(&b.id));
    let mut out = create(&args.out)?;
    write_predictions(&preds, &mut out)?;
    out.flush()?;
    Ok(())
}

fn eval(args: &EvalArgs) -> Result<()> {
    let m = load_manifest(&args.manifest)?;
    let file = File::open(&args.predictions).with_context(|| format!("opening {}", args.predictions.display()))?;
    let preds = read_predictions(BufReader::new(file))?;
    let mut items = Vec::new();
    for r in records(&m, args.split)? {
        let duration = read_wav(&r.document)
            .with_context(|| format!("reading {}", r.document.display()))?
            .duration_s();
        items.push(r.to_item(duration));
    }
    let mut by_seed: Vec<SeedPredictions> = Vec::new();
    for p in preds {
        match by_seed.iter_mut().find(|s| s.seed == p.seed) {
            Some(s) => {
                s.spans.insert(p.id, p.span);
            }
            None => by_seed.push(SeedPredictions {
                seed: p.seed,
                spans: [(p.id, p.span)].into(),
            }),
        }
    }
    by_seed.sort_by_key(|s| s.seed);
    let result = evaluate_set(&items, &by_seed)?;
    let row = ResultsRow::new(&args.train_label, &args.test_label, &result);
    let mut out = output(args.out.as_deref())?;
    write_results([&row], &mut out)?;
    out.flush()?;
    Ok(())
}

fn base_config(cli: &Cli, common: &PipelineArgs, train: ConditionSpec, test: ConditionSpec) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(train, test, &cli.cache_dir);
    cfg.seeds = common.seeds.clone();
    cfg.codebook.k = common.k;
    cfg.codebook.seed = common.codebook_seed;
    cfg
}

fn run(cli: &Cli, args: &RunArgs) -> Result<()> {
    let m = load_manifest(&args.common.manifest)?;
    let mut cfg = base_config(cli, &args.common, parse_condition(&args.train)?, parse_condition(&args.test)?);
    cfg.shuffle_seed = args.shuffle_seed;
    let outcome = run_experiment(&cfg, &m)?;
    let mut out = output(args.common.out.as_deref())?;
    write_results([&outcome.row], &mut out)?;
    out.flush()?;
    if let Some(path) = &args.predictions {
        let mut p = create(path)?;
        write_predictions(&outcome.predictions, &mut p)?;
        p.flush()?;
    }
    Ok(())
}

fn sweep(cli: &Cli, args: &SweepArgs) -> Result<()> {
    let m = load_manifest(&args.common.manifest)?;
    let base = base_config(cli, &args.common, ConditionSpec::prosodic(300.0), ConditionSpec::prosodic(300.0));
    let cfg = SweepConfig {
        cutoffs_hz: args.cutoffs.clone(),
        base,
    };
    let rows = sweep_cutoff(&cfg, &m)?;
    let mut out = output(args.common.out.as_deref())?;
    write_sweep_table(&rows, &mut out)?;
    out.flush()?;
    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    if failed > 0 {
        bail!("{failed} of {} cutoffs failed", rows.len());
    }
    Ok(())
}

fn mix(args: &MixArgs) -> Result<()> {
    let primary = load_manifest(&args.manifest)?;
    let mut sources = Vec::new();
    for spec in &args.add {
        let parts: Vec<&str> = spec.rsplitn(3, ':').collect();
        let [label, fraction, path] = parts[..] else {
            bail!("expected PATH:FRACTION:LABEL, got {spec:?}");
        };
        let fraction: f64 = fraction.parse().with_context(|| format!("fraction in {spec:?}"))?;
        sources.push((load_manifest(path)?, fraction, label.to_string()));
    }
    let refs: Vec<MixSource> = sources
        .iter()
        .map(|(manifest, fraction, label)| MixSource {
            manifest,
            fraction: *fraction,
            label,
        })
        .collect();
    write_manifest(&mix_manifests(&primary, &refs, args.seed)?, &args.out)?;
    Ok(())
}

fn shuffle_pairs(args: &ShuffleArgs) -> Result<()> {
    let m = load_manifest(&args.manifest)?;
    write_manifest(&shuffle_manifest_pairs(&m, args.split, args.seed)?, &args.out)?;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Condition(args) => condition(&cli, args),
        Command::Units(UnitsCommand::Train(args)) => units_train(args),
        Command::Units(UnitsCommand::Encode(args)) => units_encode(args),
        Command::Predict(args) => predict(args),
        Command::Eval(args) => eval(args),
        Command::Run(args) => run(&cli, args),
        Command::Sweep(args) => sweep(&cli, args),
        Command::Mix(args) => mix(args),
        Command::ShufflePairs(args) => shuffle_pairs(args),
    }
}
