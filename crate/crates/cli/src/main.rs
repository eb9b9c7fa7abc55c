//! Command-line harness wiring corpus ingestion, prediction loading, voting,
//! metrics, and the sensitivity analyses into five subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use geovote::analysis::{ablate, sweep, range_values, DatasetBundle, SweepParameter};
use geovote::corpus::{
    filter_misaligned, load_profile, parse_annotated_xml, parse_mentions_jsonl, Corpus,
};
use geovote::gazetteer::{categorize_mention, load_geonames_tsv, Gazetteer, PlaceCategory};
use geovote::metrics::{evaluate, macro_average, AucMode, EvalOptions, MetricsReport};
use geovote::predictions::{load_predictions, PredictionSet};
use geovote::report;
use geovote::voting::{load_config, resolve_corpus, EnsembleConfig};

#[derive(Parser)]
#[command(
    name = "geovote",
    version,
    about = "Toponym disambiguation by spatial-clustering vote over per-approach predictions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resolve every mention of the corpora with the voting ensemble
    Resolve(ResolveArgs),
    /// Score the ensemble and each prediction file against gold coordinates
    Evaluate(EvaluateArgs),
    /// Leave-one-out contribution of each approach
    Ablate(AblateArgs),
    /// Ensemble metrics across a grid of one clustering parameter
    Sweep(SweepArgs),
    /// Place category of every corpus mention
    Categorize(CategorizeArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Gold corpus file: .xml (needs --profile) or .jsonl (repeatable)
    #[arg(long, required = true)]
    corpus: Vec<PathBuf>,

    /// XML profile per XML corpus, in the same order as the --corpus flags
    #[arg(long)]
    profile: Vec<PathBuf>,

    /// Prediction file, one approach per file (repeatable)
    #[arg(long = "predictions")]
    predictions: Vec<PathBuf>,

    /// Ensemble configuration file (defaults to the shipped configuration)
    #[arg(long)]
    config: Option<PathBuf>,

    /// Tie-break seed, overriding the configuration file
    #[arg(long)]
    seed: Option<u64>,

    /// Keep the frequent misaligned toponyms instead of excluding them
    #[arg(long)]
    keep_misaligned: bool,

    /// Output directory, created if missing
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricArgs {
    /// GeoNames main-export TSV for per-category reporting
    #[arg(long)]
    gazetteer: Option<PathBuf>,

    /// AUC reading: mean of normalized logs, or sorted-curve trapezoid
    #[arg(long, default_value = "mean")]
    auc_mode: AucMode,

    /// Accuracy threshold in kilometers
    #[arg(long, default_value_t = 161.0)]
    threshold_km: f64,
}

#[derive(Args)]
struct ResolveArgs {
    #[command(flatten)]
    input: InputArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    metrics: MetricArgs,
    /// Add per-category columns to the CSV report
    #[arg(long)]
    per_category: bool,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    metrics: MetricArgs,
    /// Ablate the configured ensemble instead of the equal-weight ensemble
    /// over all supplied prediction files
    #[arg(long)]
    use_config_weights: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    metrics: MetricArgs,
    /// Parameter to vary: eps | min_pts
    #[arg(long)]
    parameter: String,
    /// First grid value (default: 1)
    #[arg(long)]
    from: Option<f64>,
    /// Last grid value, inclusive bound (default: 800 for eps, 11 for min_pts)
    #[arg(long)]
    to: Option<f64>,
    /// Grid step (default: 30 for eps, 1 for min_pts)
    #[arg(long)]
    step: Option<f64>,
}

#[derive(Args)]
struct CategorizeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// GeoNames main-export TSV used to categorize id-linked mentions
    #[arg(long)]
    gazetteer: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Resolve(args) => cmd_resolve(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Ablate(args) => cmd_ablate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Categorize(args) => cmd_categorize(args),
    };
    if let Err(err) = outcome {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

/// Everything a run needs, resolved from flags and validated up front.
struct RunManifest {
    datasets: Vec<DatasetBundle>,
    config: EnsembleConfig,
    out_dir: PathBuf,
}

impl RunManifest {
    /// Warns about configured approaches no prediction file supplies; the
    /// vote then sees them as all-invalid.
    fn warn_unsupplied_approaches(&self) {
        for approach in self.config.approaches() {
            for bundle in &self.datasets {
                if !bundle
                    .predictions
                    .iter()
                    .any(|s| s.approach_id == approach.id)
                {
                    eprintln!(
                        "warning: no prediction file supplies approach {:?} for dataset {:?}; treating it as all-invalid",
                        approach.id, bundle.corpus.name
                    );
                }
            }
        }
    }
}

fn build_manifest(input: &InputArgs) -> Result<RunManifest> {
    for path in input
        .corpus
        .iter()
        .chain(input.profile.iter())
        .chain(input.predictions.iter())
        .chain(input.config.iter())
    {
        if !path.exists() {
            bail!("input path does not exist: {}", path.display());
        }
    }

    let mut config = match &input.config {
        Some(path) => load_config(path)
            .with_context(|| format!("loading ensemble configuration {}", path.display()))?,
        None => EnsembleConfig::default(),
    };
    if let Some(seed) = input.seed {
        config = config.with_seed(seed);
    }

    let corpora = load_corpora(input)?;
    let prediction_sets = load_prediction_files(&input.predictions)?;
    let datasets = route_predictions(corpora, prediction_sets, &input.predictions)?;

    fs::create_dir_all(&input.out)
        .with_context(|| format!("creating output directory {}", input.out.display()))?;
    Ok(RunManifest {
        datasets,
        config,
        out_dir: input.out.clone(),
    })
}

fn load_corpora(input: &InputArgs) -> Result<Vec<Corpus>> {
    let xml_count = input
        .corpus
        .iter()
        .filter(|p| is_xml(p))
        .count();
    if xml_count > 0 && input.profile.len() != xml_count {
        bail!(
            "{} XML corpora given but {} --profile flags; each XML corpus needs its profile",
            xml_count,
            input.profile.len()
        );
    }
    let mut profiles = input.profile.iter();
    let mut corpora = Vec::new();
    for path in &input.corpus {
        let corpus = if is_xml(path) {
            let profile_path = profiles.next().expect("count checked above");
            let profile = load_profile(profile_path)
                .with_context(|| format!("loading profile {}", profile_path.display()))?;
            let (corpus, stats) = parse_annotated_xml(path, &profile)
                .with_context(|| format!("parsing corpus {}", path.display()))?;
            for warning in &stats.warnings {
                eprintln!("warning: {}: {warning}", corpus.name);
            }
            if stats.skipped > 0 {
                eprintln!(
                    "warning: {}: skipped {} of {} toponym records",
                    corpus.name, stats.skipped, stats.records_seen
                );
            }
            corpus
        } else {
            parse_mentions_jsonl(path)
                .with_context(|| format!("parsing corpus {}", path.display()))?
        };
        let corpus = if input.keep_misaligned {
            corpus
        } else {
            let (filtered, removed) = filter_misaligned(&corpus);
            if removed > 0 {
                eprintln!(
                    "note: {}: excluded {} misaligned toponym mentions",
                    filtered.name, removed
                );
            }
            filtered
        };
        corpora.push(corpus);
    }
    Ok(corpora)
}

fn is_xml(path: &Path) -> bool {
    path.extension()
        .map(|e| e.eq_ignore_ascii_case("xml"))
        .unwrap_or(false)
}

fn load_prediction_files(paths: &[PathBuf]) -> Result<Vec<PredictionSet>> {
    paths
        .iter()
        .map(|path| {
            load_predictions(path)
                .with_context(|| format!("loading predictions {}", path.display()))
        })
        .collect()
}

/// Assigns prediction files to datasets. With a single corpus every file
/// belongs to it; with several, the `<approach>__<dataset>` file name
/// convention routes each file to the corpus with the matching name.
fn route_predictions(
    corpora: Vec<Corpus>,
    sets: Vec<PredictionSet>,
    paths: &[PathBuf],
) -> Result<Vec<DatasetBundle>> {
    if corpora.len() == 1 {
        let corpus = corpora.into_iter().next().unwrap();
        return Ok(vec![DatasetBundle {
            corpus,
            predictions: sets,
        }]);
    }
    let mut bundles: Vec<DatasetBundle> = corpora
        .into_iter()
        .map(|corpus| DatasetBundle {
            corpus,
            predictions: Vec::new(),
        })
        .collect();
    for (set, path) in sets.into_iter().zip(paths) {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let dataset = match stem.split_once("__") {
            Some((_, dataset)) => dataset.to_string(),
            None => bail!(
                "cannot route {} to a dataset: with several corpora, prediction files must be named <approach>__<dataset>.jsonl",
                path.display()
            ),
        };
        match bundles.iter_mut().find(|b| b.corpus.name == dataset) {
            Some(bundle) => bundle.predictions.push(set),
            None => bail!(
                "prediction file {} names dataset {:?}, which matches no --corpus",
                path.display(),
                dataset
            ),
        }
    }
    Ok(bundles)
}

fn eval_options(metrics: &MetricArgs) -> EvalOptions {
    EvalOptions {
        threshold_km: metrics.threshold_km,
        auc_mode: metrics.auc_mode,
    }
}

fn load_gazetteer(path: &Option<PathBuf>) -> Result<Option<Gazetteer>> {
    let Some(path) = path else { return Ok(None) };
    let (gazetteer, stats) = load_geonames_tsv(path)
        .with_context(|| format!("loading gazetteer {}", path.display()))?;
    if stats.skipped > 0 {
        eprintln!(
            "warning: gazetteer: skipped {} of {} rows",
            stats.skipped, stats.rows_seen
        );
    }
    Ok(Some(gazetteer))
}

/// Writes through a temp file so failed runs leave no partial output behind.
fn write_output(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("finalizing {}", path.display()))?;
    Ok(())
}

fn cmd_resolve(args: ResolveArgs) -> Result<()> {
    let manifest = build_manifest(&args.input)?;
    manifest.warn_unsupplied_approaches();
    for bundle in &manifest.datasets {
        let resolutions = resolve_corpus(&bundle.corpus, &bundle.predictions, &manifest.config)?;
        let mut out = String::new();
        for mention in &bundle.corpus.mentions {
            let resolution = resolutions
                .get(&mention.mention_id)
                .expect("resolve_corpus covers every mention");
            out.push_str(&report::resolution_record(&mention.mention_id, resolution));
            out.push('\n');
        }
        let path = manifest
            .out_dir
            .join(format!("resolutions__{}.jsonl", bundle.corpus.name));
        write_output(&path, &out)?;
        println!(
            "resolved {} mentions of {} -> {}",
            bundle.corpus.len(),
            bundle.corpus.name,
            path.display()
        );
    }
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let manifest = build_manifest(&args.input)?;
    manifest.warn_unsupplied_approaches();
    let opts = eval_options(&args.metrics);
    let gazetteer = load_gazetteer(&args.metrics.gazetteer)?;

    // The ensemble is scored first, then each prediction file as a system of
    // its own, so per-approach tables can be regenerated from the same run.
    let mut systems: Vec<String> = vec!["voting".to_string()];
    for bundle in &manifest.datasets {
        for set in &bundle.predictions {
            if !systems.contains(&set.approach_id) {
                systems.push(set.approach_id.clone());
            }
        }
    }

    let mut reports: Vec<MetricsReport> = Vec::new();
    for system in &systems {
        let mut per_dataset: Vec<MetricsReport> = Vec::new();
        for bundle in &manifest.datasets {
            let report = if system == "voting" {
                let resolutions =
                    resolve_corpus(&bundle.corpus, &bundle.predictions, &manifest.config)?;
                evaluate(
                    system,
                    &bundle.corpus.name,
                    &resolutions,
                    &bundle.corpus,
                    gazetteer.as_ref(),
                    &opts,
                )?
            } else {
                let Some(set) = bundle
                    .predictions
                    .iter()
                    .find(|s| &s.approach_id == system)
                else {
                    continue;
                };
                evaluate(
                    system,
                    &bundle.corpus.name,
                    set,
                    &bundle.corpus,
                    gazetteer.as_ref(),
                    &opts,
                )?
            };
            per_dataset.push(report);
        }
        let macro_report = macro_average(&per_dataset)?;
        reports.extend(per_dataset);
        reports.push(macro_report);
    }

    let csv_path = manifest.out_dir.join("reports.csv");
    write_output(&csv_path, &report::reports_to_csv(&reports, args.per_category))?;
    let json_path = manifest.out_dir.join("reports.json");
    write_output(&json_path, &report::reports_to_json(&reports))?;
    println!(
        "evaluated {} systems on {} datasets -> {}",
        systems.len(),
        manifest.datasets.len(),
        csv_path.display()
    );
    Ok(())
}

fn cmd_ablate(args: AblateArgs) -> Result<()> {
    let manifest = build_manifest(&args.input)?;
    let opts = eval_options(&args.metrics);

    // The stock ablation baseline is the equal-weight ensemble over every
    // approach a prediction file was supplied for, in supplied order.
    let basic = if args.use_config_weights {
        manifest.warn_unsupplied_approaches();
        manifest.config.clone()
    } else {
        let mut ids: Vec<String> = Vec::new();
        for bundle in &manifest.datasets {
            for set in &bundle.predictions {
                if !ids.contains(&set.approach_id) {
                    ids.push(set.approach_id.clone());
                }
            }
        }
        EnsembleConfig::equal_weights(
            ids,
            *manifest.config.params(),
            manifest.config.rng_seed(),
        )?
    };

    let results = ablate(&basic, &manifest.datasets, &opts)?;
    let path = manifest.out_dir.join("ablation.csv");
    write_output(&path, &report::ablation_to_csv(&results))?;
    println!(
        "ablated {} approaches -> {}",
        results.len(),
        path.display()
    );
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let manifest = build_manifest(&args.input)?;
    manifest.warn_unsupplied_approaches();
    let opts = eval_options(&args.metrics);
    let parameter = match args.parameter.as_str() {
        "eps" | "eps_km" => SweepParameter::EpsKm,
        "min_pts" | "minpts" => SweepParameter::MinPts,
        other => bail!("unknown sweep parameter {other:?} (eps|min_pts)"),
    };
    let values = match (args.from, args.to, args.step) {
        (None, None, None) => parameter.default_values(),
        (from, to, step) => {
            let defaults = match parameter {
                SweepParameter::EpsKm => (1.0, 800.0, 30.0),
                SweepParameter::MinPts => (1.0, 11.0, 1.0),
            };
            let values = range_values(
                from.unwrap_or(defaults.0),
                to.unwrap_or(defaults.1),
                step.unwrap_or(defaults.2),
            );
            if values.is_empty() {
                bail!("empty sweep grid");
            }
            values
        }
    };

    let curve = sweep(&manifest.config, parameter, &values, &manifest.datasets, &opts)?;
    let path = manifest
        .out_dir
        .join(format!("sweep_{}.csv", parameter.label()));
    write_output(&path, &report::sweep_to_csv(&curve, opts.threshold_km))?;
    println!(
        "swept {} over {} values -> {}",
        parameter.label(),
        curve.points.len(),
        path.display()
    );
    Ok(())
}

fn cmd_categorize(args: CategorizeArgs) -> Result<()> {
    let manifest = build_manifest(&args.input)?;
    let gazetteer = load_gazetteer(&args.gazetteer)?;

    let mut rows = Vec::new();
    let mut counts: std::collections::BTreeMap<PlaceCategory, usize> = Default::default();
    for bundle in &manifest.datasets {
        for mention in &bundle.corpus.mentions {
            let category = categorize_mention(mention, gazetteer.as_ref());
            *counts.entry(category).or_default() += 1;
            rows.push((
                mention.mention_id.clone(),
                mention.surface.clone(),
                category,
            ));
        }
    }
    let path = manifest.out_dir.join("categories.csv");
    write_output(&path, &report::categories_to_csv(&rows))?;
    for (category, count) in &counts {
        println!("{}: {count}", category.label());
    }
    println!("categorized {} mentions -> {}", rows.len(), path.display());
    Ok(())
}
