//! `micmac` — command-line runner wiring the selection, cross-validation and
//! reporting modules into reproducible pipeline runs.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

mod config;

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use config::Config;
use micmac::cv;
use micmac::dataset::{load_dataset, save_dataset, Dataset};
use micmac::experiment::{run_experiments, ExperimentReport, RunParams, Scheme};
use micmac::report::{emit_report, emit_tukey};
use micmac::selectors::{self, SelectorConfig};
use micmac::stats::{tukey_hsd, GroupSamples};
use micmac::synth::{generate, SynthConfig};

#[derive(Parser)]
#[command(name = "micmac", version, about = "Feature-selection lab: merit-score wrapper selection with nested subject-based cross-validation")]
struct Cli {
    /// Worker threads (default: MICMAC_JOBS, then all cores). Output is
    /// identical for any value ≥ 1.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// `key = value` config file with [section] headers supplying flag
    /// defaults; explicit flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a planted-feature synthetic dataset (data.csv + ground_truth.csv)
    Synth(SynthArgs),
    /// Run repeated nested cross-validation experiments and emit reports
    Crossval(CrossvalArgs),
    /// Debug: one merit-score selection pass on a single inner fold, traced to CSV
    Select(SelectArgs),
    /// Tukey HSD over per-experiment accuracies from ≥ 2 report.json files
    Compare(CompareArgs),
    /// Re-emit CSV/SVG artifacts from a saved report.json
    Report(ReportArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of subjects (even; half per class)
    #[arg(long)]
    subjects: Option<usize>,
    /// Samples (time points) per subject
    #[arg(long)]
    samples: Option<usize>,
    /// Total feature count
    #[arg(long)]
    features: Option<usize>,
    /// Number of planted informative features
    #[arg(long)]
    informative: Option<usize>,
    /// Class mean separation in noise-std units
    #[arg(long)]
    effect: Option<f64>,
    /// Std of the shared per-subject offset
    #[arg(long)]
    subject_std: Option<f64>,
    /// Near-duplicate copies per informative feature
    #[arg(long)]
    copies: Option<usize>,
    /// Duplicate–source correlation, in [0, 1)
    #[arg(long)]
    rho: Option<f64>,
    /// Root RNG seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct CrossvalArgs {
    /// Dataset CSV (header `subject_id,time_point,label,<features...>`)
    #[arg(long)]
    data: Option<PathBuf>,
    /// Scheme spec, repeatable: micmac:<knn|svm>:<knn|svm> or <mrmr|mdrmr>:<knn|svm>.
    /// Default: the full eight-scheme matrix.
    #[arg(long = "scheme")]
    schemes: Vec<String>,
    /// Repeated experiments (reshuffled folds per repeat)
    #[arg(long)]
    repeats: Option<usize>,
    /// Outer folds
    #[arg(long)]
    outer: Option<usize>,
    /// Inner folds
    #[arg(long)]
    inner: Option<usize>,
    /// Base seed; repeat r uses seed + r for its fold shuffle
    #[arg(long)]
    seed: Option<u64>,
    /// Largest k on the accuracy-vs-k curve
    #[arg(long)]
    k_max: Option<usize>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    selector: SelectorArgs,
}

#[derive(Args)]
struct SelectorArgs {
    /// Merit threshold T; selection stops once the best merit is ≤ T
    #[arg(long)]
    threshold: Option<f64>,
    /// Floor for the summed-redundancy denominator
    #[arg(long)]
    epsilon: Option<f64>,
    /// Cap on selected features per inner fold
    #[arg(long)]
    max_selected: Option<usize>,
    /// Features kept by random-forest importance preselection
    #[arg(long)]
    preselect_n: Option<usize>,
}

#[derive(Args)]
struct SelectArgs {
    /// Dataset CSV
    #[arg(long)]
    data: Option<PathBuf>,
    /// Wrapper learner: knn or svm
    #[arg(long)]
    wrapper: Option<String>,
    /// Fold-shuffle seed
    #[arg(long)]
    seed: Option<u64>,
    /// Outer folds (fold 0 is used)
    #[arg(long)]
    outer: Option<usize>,
    /// Inner folds (fold 0 is used)
    #[arg(long)]
    inner: Option<usize>,
    /// Trace CSV path
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    selector: SelectorArgs,
}

#[derive(Args)]
struct CompareArgs {
    /// report.json files produced by `crossval` (≥ 2 scheme groups in total)
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    /// Output CSV path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Which per-experiment accuracies to compare: best | top12
    #[arg(long, default_value = "best")]
    metric: String,
}

#[derive(Args)]
struct ReportArgs {
    /// report.json produced by `crossval`
    #[arg(long)]
    report: PathBuf,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Usage failures exit 2, runtime failures exit 1.
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

fn usage<T>(e: anyhow::Error) -> Result<T, Failure> {
    Err(Failure::Usage(e))
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse(); // clap exits 2 itself on flag errors, 0 on --help
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    configure_jobs(cli.jobs)?;
    let cfg = match &cli.config {
        Some(path) => Config::load(path).map_err(Failure::Usage)?,
        None => Config::default(),
    };
    match cli.cmd {
        Cmd::Synth(a) => cmd_synth(a, &cfg),
        Cmd::Crossval(a) => cmd_crossval(a, &cfg),
        Cmd::Select(a) => cmd_select(a, &cfg),
        Cmd::Compare(a) => cmd_compare(a, &cfg),
        Cmd::Report(a) => cmd_report(a, &cfg),
    }
}

fn configure_jobs(flag: Option<usize>) -> CliResult<()> {
    let jobs = match flag {
        Some(j) => Some(j),
        None => match std::env::var("MICMAC_JOBS") {
            Ok(v) => Some(
                v.parse::<usize>()
                    .map_err(|e| Failure::Usage(anyhow!("MICMAC_JOBS = {v:?}: {e}")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(jobs) = jobs {
        if jobs == 0 {
            return usage(anyhow!("--jobs must be ≥ 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("cannot configure worker pool")?;
    }
    Ok(())
}

/// Flag value if given, else the config value, else `None`.
fn resolve<T>(flag: Option<T>, cfg: &Config, section: &str, key: &str) -> CliResult<Option<T>>
where
    T: FromStr,
    T::Err: Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => cfg.get_parsed(section, key).map_err(Failure::Usage),
    }
}

fn defaulted<T>(flag: Option<T>, cfg: &Config, section: &str, key: &str, default: T) -> CliResult<T>
where
    T: FromStr,
    T::Err: Display,
{
    Ok(resolve(flag, cfg, section, key)?.unwrap_or(default))
}

fn required<T>(flag: Option<T>, cfg: &Config, section: &str, key: &str) -> CliResult<T>
where
    T: FromStr,
    T::Err: Display,
{
    resolve(flag, cfg, section, key)?.ok_or_else(|| {
        Failure::Usage(anyhow!(
            "missing --{} (or config key [{section}] {key})",
            key.replace('_', "-")
        ))
    })
}

fn write_run_config(dir: &Path, sections: &[(&str, Vec<(String, String)>)]) -> CliResult<()> {
    std::fs::write(dir.join("run_config.txt"), config::render(sections))
        .context("cannot write run_config.txt")?;
    Ok(())
}

fn kv(pairs: &[(&str, String)]) -> Vec<(String, String)> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

// --- synth ---------------------------------------------------------------

fn synth_config_from(a: &SynthArgs, cfg: &Config) -> CliResult<SynthConfig> {
    let sc = SynthConfig {
        n_subjects: required(a.subjects, cfg, "synth", "subjects")?,
        samples_per_subject: defaulted(a.samples, cfg, "synth", "samples", 9)?,
        n_features: required(a.features, cfg, "synth", "features")?,
        n_informative: required(a.informative, cfg, "synth", "informative")?,
        effect_size: defaulted(a.effect, cfg, "synth", "effect", 1.5)?,
        subject_effect_std: defaulted(a.subject_std, cfg, "synth", "subject_std", 1.0)?,
        n_redundant_copies: defaulted(a.copies, cfg, "synth", "copies", 0)?,
        rho: defaulted(a.rho, cfg, "synth", "rho", 0.8)?,
        seed: defaulted(a.seed, cfg, "synth", "seed", 0)?,
    };
    sc.validate().map_err(|e| Failure::Usage(e.into()))?;
    Ok(sc)
}

fn synth_section(sc: &SynthConfig, out: Option<&Path>) -> (&'static str, Vec<(String, String)>) {
    let mut pairs = vec![
        ("subjects", sc.n_subjects.to_string()),
        ("samples", sc.samples_per_subject.to_string()),
        ("features", sc.n_features.to_string()),
        ("informative", sc.n_informative.to_string()),
        ("effect", sc.effect_size.to_string()),
        ("subject_std", sc.subject_effect_std.to_string()),
        ("copies", sc.n_redundant_copies.to_string()),
        ("rho", sc.rho.to_string()),
        ("seed", sc.seed.to_string()),
    ];
    if let Some(out) = out {
        pairs.insert(0, ("out", out.display().to_string()));
    }
    ("synth", kv(&pairs))
}

fn cmd_synth(a: SynthArgs, cfg: &Config) -> CliResult<()> {
    let out: PathBuf = defaulted(a.out.clone(), cfg, "synth", "out", PathBuf::from("synth_out"))?;
    let sc = synth_config_from(&a, cfg)?;
    let (dataset, truth) = generate(&sc)?;
    std::fs::create_dir_all(&out).context("cannot create output directory")?;
    save_dataset(&dataset, out.join("data.csv"))?;
    truth.write_csv(out.join("ground_truth.csv"))?;
    write_run_config(&out, &[synth_section(&sc, None)])?;
    println!(
        "wrote {} ({} samples x {} features, {} subjects) and {}",
        out.join("data.csv").display(),
        dataset.n_samples(),
        dataset.n_features(),
        dataset.subjects().len(),
        out.join("ground_truth.csv").display()
    );
    Ok(())
}

// --- crossval ------------------------------------------------------------

const DEFAULT_SCHEMES: [&str; 8] = [
    "micmac:knn:knn",
    "micmac:knn:svm",
    "micmac:svm:knn",
    "micmac:svm:svm",
    "mrmr:knn",
    "mrmr:svm",
    "mdrmr:knn",
    "mdrmr:svm",
];

fn selector_config_from(a: &SelectorArgs, cfg: &Config) -> CliResult<SelectorConfig> {
    let mut sel = SelectorConfig::default();
    sel.threshold = defaulted(a.threshold, cfg, "selector", "threshold", sel.threshold)?;
    sel.epsilon = defaulted(a.epsilon, cfg, "selector", "epsilon", sel.epsilon)?;
    sel.max_selected = defaulted(a.max_selected, cfg, "selector", "max_selected", sel.max_selected)?;
    sel.preselect_n = defaulted(a.preselect_n, cfg, "selector", "preselect_n", sel.preselect_n)?;
    sel.validate().map_err(|e| Failure::Usage(e.into()))?;
    Ok(sel)
}

fn selector_section(sel: &SelectorConfig) -> (&'static str, Vec<(String, String)>) {
    (
        "selector",
        kv(&[
            ("threshold", sel.threshold.to_string()),
            ("epsilon", sel.epsilon.to_string()),
            ("max_selected", sel.max_selected.to_string()),
            ("preselect_n", sel.preselect_n.to_string()),
        ]),
    )
}

enum DataSource {
    Path(PathBuf),
    Synth(SynthConfig),
}

/// Exactly one data source: a dataset path (flag or config) or a [synth]
/// section in the config.
fn load_data_source(
    data_flag: Option<PathBuf>,
    section: &str,
    cfg: &Config,
) -> CliResult<(Dataset, DataSource)> {
    let path: Option<PathBuf> = resolve(data_flag, cfg, section, "data")?;
    let has_synth = cfg.get("synth", "subjects").is_some();
    match (path, has_synth) {
        (Some(_), true) => usage(anyhow!(
            "both a dataset path and a [synth] config section were given; pick one data source"
        )),
        (Some(p), false) => {
            let d = load_dataset(&p).with_context(|| format!("loading {}", p.display()))?;
            Ok((d, DataSource::Path(p)))
        }
        (None, true) => {
            let empty = SynthArgs {
                out: None,
                subjects: None,
                samples: None,
                features: None,
                informative: None,
                effect: None,
                subject_std: None,
                copies: None,
                rho: None,
                seed: None,
            };
            let sc = synth_config_from(&empty, cfg)?;
            let (d, _) = generate(&sc)?;
            Ok((d, DataSource::Synth(sc)))
        }
        (None, false) => usage(anyhow!(
            "missing --data (or a config [{section}] data key / [synth] section)"
        )),
    }
}

fn cmd_crossval(a: CrossvalArgs, cfg: &Config) -> CliResult<()> {
    let (dataset, source) = load_data_source(a.data, "crossval", cfg)?;

    let scheme_specs: Vec<String> = if !a.schemes.is_empty() {
        a.schemes
    } else if let Some(s) = cfg.get("crossval", "schemes") {
        s.split(',').map(|p| p.trim().to_string()).collect()
    } else {
        DEFAULT_SCHEMES.iter().map(|s| s.to_string()).collect()
    };
    let schemes: Vec<Scheme> = scheme_specs
        .iter()
        .map(|s| Scheme::parse(s))
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::Usage(e.into()))?;

    let selector = selector_config_from(&a.selector, cfg)?;
    let params = RunParams {
        n_repeats: defaulted(a.repeats, cfg, "crossval", "repeats", 10)?,
        base_seed: defaulted(a.seed, cfg, "crossval", "seed", 0)?,
        n_outer: defaulted(a.outer, cfg, "crossval", "outer", 10)?,
        n_inner: defaulted(a.inner, cfg, "crossval", "inner", 9)?,
        k_max: defaulted(a.k_max, cfg, "crossval", "k_max", selector.preselect_n)?,
        selector,
    };
    let out: PathBuf = defaulted(a.out, cfg, "crossval", "out", PathBuf::from("out"))?;

    let report = run_experiments(&dataset, &schemes, &params)?;
    std::fs::create_dir_all(&out).context("cannot create output directory")?;
    emit_report(&report, &out)?;
    let json = serde_json::to_string_pretty(&report).map_err(micmac::error::Error::from)?;
    std::fs::write(out.join("report.json"), json + "\n").context("cannot write report.json")?;

    let mut crossval_pairs = vec![
        ("schemes", scheme_specs.join(",")),
        ("repeats", params.n_repeats.to_string()),
        ("outer", params.n_outer.to_string()),
        ("inner", params.n_inner.to_string()),
        ("seed", params.base_seed.to_string()),
        ("k_max", params.k_max.to_string()),
        ("out", out.display().to_string()),
    ];
    let mut sections = Vec::new();
    match &source {
        DataSource::Path(p) => crossval_pairs.insert(0, ("data", p.display().to_string())),
        DataSource::Synth(sc) => sections.push(synth_section(sc, None)),
    }
    sections.push(("crossval", kv(&crossval_pairs)));
    sections.push(selector_section(&params.selector));
    write_run_config(&out, &sections)?;

    for s in &report.schemes {
        println!(
            "{}: best {:.3} ± {:.3} at k={}, top-12 {:.3} ± {:.3}{}",
            s.name,
            s.best_acc,
            s.best_std,
            s.best_k,
            s.top12_acc,
            s.top12_std,
            if s.approximate { " (approximate criterion)" } else { "" }
        );
    }
    println!(
        "report written to {} ({:.1} s)",
        out.join("report.csv").display(),
        report.runtime_secs
    );
    Ok(())
}

// --- select --------------------------------------------------------------

fn cmd_select(a: SelectArgs, cfg: &Config) -> CliResult<()> {
    let data: PathBuf = required(a.data, cfg, "select", "data")?;
    let wrapper_name: String = defaulted(a.wrapper, cfg, "select", "wrapper", "knn".into())?;
    let mut selector = selector_config_from(&a.selector, cfg)?;
    selector.wrapper = match wrapper_name.as_str() {
        "knn" => micmac::learners::LearnerConfig::knn(),
        "svm" => micmac::learners::LearnerConfig::svm(),
        other => return usage(anyhow!("unknown wrapper {other:?}; valid wrappers: knn, svm")),
    };
    let seed: u64 = defaulted(a.seed, cfg, "select", "seed", 0)?;
    let n_outer: usize = defaulted(a.outer, cfg, "select", "outer", 10)?;
    let n_inner: usize = defaulted(a.inner, cfg, "select", "inner", 9)?;
    let out: PathBuf = defaulted(a.out, cfg, "select", "out", PathBuf::from("trace.csv"))?;

    let dataset = load_dataset(&data).with_context(|| format!("loading {}", data.display()))?;
    let subjects = dataset.subjects().to_vec();
    let labels: Vec<u8> = subjects
        .iter()
        .map(|s| dataset.subject_label(s).unwrap())
        .collect();
    let plan = cv::make_fold_plan(&subjects, &labels, n_outer, n_inner, seed)?;
    let outer = &plan.outer[0];
    let inner = &outer.inner[0];

    let tv_rows = dataset.rows_of_subjects(&outer.train_val_subjects);
    let f0 = selectors::preselect_rf(&dataset, &tv_rows, &selector)?;
    let train_rows = dataset.rows_of_subjects(&inner.train_subjects);
    let val_rows = dataset.rows_of_subjects(&inner.val_subjects);
    let trace = selectors::micmac_select(&dataset, &train_rows, &val_rows, &f0, &selector)?;
    trace.write_csv(&out, dataset.feature_names())?;

    println!(
        "selected {} features on outer fold 0 / inner fold 0 (stopped: {})",
        trace.len(),
        trace.termination.as_str()
    );
    for (i, &col) in trace.selected.iter().enumerate() {
        let merit = trace.merits[i]
            .map(|m| format!("{m:.4}"))
            .unwrap_or_else(|| "seed".into());
        println!(
            "  {:>3}. {}  merit={merit}  phi={:.4}",
            i + 1,
            dataset.feature_names()[col],
            trace.phi_after[i]
        );
    }
    println!("trace written to {}", out.display());
    Ok(())
}

// --- compare -------------------------------------------------------------

fn load_report(path: &Path) -> CliResult<ExperimentReport> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let report: ExperimentReport = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse {}", path.display()))?;
    Ok(report)
}

fn cmd_compare(a: CompareArgs, cfg: &Config) -> CliResult<()> {
    let out: PathBuf = defaulted(a.out, cfg, "compare", "out", PathBuf::from("tukey.csv"))?;
    let use_top12 = match a.metric.as_str() {
        "best" => false,
        "top12" => true,
        other => return usage(anyhow!("unknown metric {other:?}; valid metrics: best, top12")),
    };

    let mut names = Vec::new();
    let mut values = Vec::new();
    for path in &a.reports {
        let report = load_report(path)?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        for s in &report.schemes {
            names.push((stem.clone(), s.name.clone()));
            values.push(if use_top12 {
                s.per_experiment_top12.clone()
            } else {
                s.per_experiment_best.clone()
            });
        }
    }
    if names.len() < 2 {
        return usage(anyhow!("need ≥ 2 groups; got {} scheme group(s)", names.len()));
    }
    // scheme names alone when unambiguous, otherwise file-stem qualified
    let scheme_only: Vec<&String> = names.iter().map(|(_, s)| s).collect();
    let unique = scheme_only.len()
        == scheme_only.iter().collect::<std::collections::HashSet<_>>().len();
    let group_names: Vec<String> = names
        .iter()
        .map(|(stem, s)| if unique { s.clone() } else { format!("{stem}:{s}") })
        .collect();

    let sizes: Vec<usize> = values.iter().map(Vec::len).collect();
    if sizes.iter().any(|&n| n != sizes[0]) {
        log::warn!("groups have unequal repeat counts {sizes:?}; using the Tukey-Kramer correction");
    }
    let groups = GroupSamples::new(group_names, values)?;
    let pairs = tukey_hsd(&groups)?;
    emit_tukey(&pairs, &out)?;
    for p in &pairs {
        println!("{} vs {}: q={:.3} p={:.4}", p.group_a, p.group_b, p.q, p.p);
    }
    println!("tukey table written to {}", out.display());
    Ok(())
}

// --- report --------------------------------------------------------------

fn cmd_report(a: ReportArgs, cfg: &Config) -> CliResult<()> {
    let out: PathBuf = defaulted(a.out, cfg, "report", "out", PathBuf::from("out"))?;
    let report = load_report(&a.report)?;
    let written = emit_report(&report, &out)?;
    println!("{} files written to {}", written.len(), out.display());
    Ok(())
}
