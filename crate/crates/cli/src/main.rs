use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use actlearn::eval::{
    cross_validate, generate_traces, inject_noise, replay_validate, score_domain, Ablation,
    Builtin, GeneratorSpec, NoiseKind, NoiseSpec, XvalConfig,
};
use actlearn::model::{learn_domain, LearnConfig};
use actlearn::noise::{discretise_fluents, filter_logical_noise, stable_hash};
use actlearn::transitions::{build_dataset, group_transitions};
use actlearn::{
    parse_plan_trace, parse_reference_domain, serialize_domain, write_plan_trace, Domain, PlanTrace,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("{0}")]
    Pipeline(String),
    /// The run completed but `--require-valid` was not met.
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Input { .. } => 3,
            CliError::Pipeline(_) | CliError::Invalid(_) => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn pipeline<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Pipeline(e.to_string())
}

#[derive(Parser)]
#[command(
    name = "actlearn",
    version,
    about = "Learn numeric planning action models from noisy plan traces"
)]
struct Cli {
    /// Worker threads for per-action pipelines and folds (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a PDDL domain from a directory of plan traces.
    Learn {
        #[arg(long)]
        traces: PathBuf,
        /// Where to write the learned domain.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        learn: LearnArgs,
        /// Write the report JSON here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write corrupted copies of a directory of traces.
    InjectNoise {
        #[arg(long)]
        traces: PathBuf,
        /// Fraction of state elements to corrupt, in [0, 1].
        #[arg(long)]
        pct: f64,
        #[arg(long, value_enum, default_value = "mixed")]
        kind: Kind,
        #[arg(long, env = "ACTLEARN_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a learned domain against a reference domain.
    Evaluate {
        #[arg(long)]
        learned: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Replay traces with a domain and check they reach their recorded final states.
    Validate {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Exit with status 1 unless every trace replays.
        #[arg(long)]
        require_valid: bool,
    },
    /// k-fold cross-validation, optionally with noise and an ablation arm.
    Xval {
        #[arg(long)]
        traces: PathBuf,
        /// Reference domain for precision, recall and F-score.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Fraction of training state elements to corrupt.
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long, value_enum, default_value = "mixed")]
        kind: Kind,
        /// Also run with these stages switched off.
        #[arg(long, value_enum)]
        ablation: Option<AblationArg>,
        #[command(flatten)]
        learn: LearnArgs,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        require_valid: bool,
    },
    /// Generate random-walk traces from a built-in domain.
    GenTraces {
        #[arg(long, value_enum)]
        domain: BuiltinArg,
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, env = "ACTLEARN_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        min_length: usize,
        #[arg(long, default_value_t = 20)]
        max_length: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write the generating domain as PDDL.
        #[arg(long)]
        reference_out: Option<PathBuf>,
    },
    /// Dump the dataset of one action as CSV.
    InspectDataset {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        action: String,
        #[arg(long, value_enum, default_value = "raw")]
        stage: Stage,
        #[command(flatten)]
        learn: LearnArgs,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct LearnArgs {
    /// Relative frequency below which a logical value is erased.
    #[arg(long, default_value_t = 0.05)]
    logical_threshold: f64,
    /// Weight of (1 - silhouette) in the clustering quality.
    #[arg(long, default_value_t = 0.6)]
    alpha: f64,
    /// Weight of the normalised deviation in the clustering quality.
    #[arg(long, default_value_t = 0.4)]
    beta: f64,
    /// Clustering quality at or below which a partition is accepted.
    #[arg(long, default_value_t = 0.05)]
    acceptance: f64,
    /// Support ratio below which refinement drops a feature.
    #[arg(long, default_value_t = 0.05)]
    irrelevance: f64,
    /// Error at or below which a regressed expression is accepted.
    #[arg(long, default_value_t = 0.02)]
    sr_threshold: f64,
    /// Regression budget in seconds-equivalent of node expansions.
    #[arg(long, default_value_t = 300.0)]
    sr_timeout: f64,
    #[arg(long, env = "ACTLEARN_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    skip_filters: bool,
    #[arg(long)]
    skip_refinement: bool,
    #[arg(long, default_value = "learned")]
    domain_name: String,
}

impl LearnArgs {
    fn config(&self) -> LearnConfig {
        let mut c = LearnConfig {
            domain_name: self.domain_name.clone(),
            ..LearnConfig::default()
        };
        c.filter.logical_threshold = self.logical_threshold;
        c.filter.quality.alpha = self.alpha;
        c.filter.quality.beta = self.beta;
        c.filter.quality.acceptance = self.acceptance;
        c.filter.seed = self.seed;
        c.refine.irrelevance_ratio = self.irrelevance;
        c.regression.acceptance_threshold = self.sr_threshold;
        c.regression.timeout_seconds = self.sr_timeout;
        c.skip_filters = self.skip_filters;
        c.skip_refinement = self.skip_refinement;
        c
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    LogicalOutlier,
    NumericOutlier,
    NumericRandom,
    Mixed,
}

impl From<Kind> for NoiseKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::LogicalOutlier => NoiseKind::LogicalOutlier,
            Kind::NumericOutlier => NoiseKind::NumericOutlier,
            Kind::NumericRandom => NoiseKind::NumericRandom,
            Kind::Mixed => NoiseKind::Mixed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AblationArg {
    Filters,
    Refinement,
    Both,
}

impl From<AblationArg> for Ablation {
    fn from(a: AblationArg) -> Self {
        match a {
            AblationArg::Filters => Ablation::Filters,
            AblationArg::Refinement => Ablation::Refinement,
            AblationArg::Both => Ablation::Both,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BuiltinArg {
    Rover,
    Transport,
    Blocks,
}

impl From<BuiltinArg> for Builtin {
    fn from(b: BuiltinArg) -> Self {
        match b {
            BuiltinArg::Rover => Builtin::Rover,
            BuiltinArg::Transport => Builtin::Transport,
            BuiltinArg::Blocks => Builtin::Blocks,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Stage {
    /// As lifted from the traces.
    Raw,
    /// After the logical frequency filter.
    Filtered,
    /// After the filter and fluent discretisation.
    Discretised,
}

/// Trace files of a directory in name order; hidden files are skipped.
fn trace_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        let hidden = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with('.'));
        if path.is_file() && !hidden {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn read_traces(dir: &Path) -> Result<Vec<(PathBuf, PlanTrace)>, CliError> {
    let files = trace_files(dir)?;
    if files.is_empty() {
        return Err(CliError::Input {
            path: dir.to_path_buf(),
            message: "no trace files".into(),
        });
    }
    files
        .into_iter()
        .map(|p| {
            let text = fs::read_to_string(&p).map_err(io_err(&p))?;
            let t = parse_plan_trace(&text).map_err(|e| CliError::Input {
                path: p.clone(),
                message: e.to_string(),
            })?;
            Ok((p, t))
        })
        .collect()
}

fn read_domain(path: &Path) -> Result<Domain, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_reference_domain(&text).map_err(|e| CliError::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, contents).map_err(io_err(path))
}

fn emit_json(value: &serde_json::Value, path: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(pipeline)?;
    text.push('\n');
    match path {
        Some(p) => write(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(
        || p.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    )
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(pipeline)?;
    }
    match cli.command {
        Command::Learn {
            traces,
            out,
            learn,
            report,
        } => {
            let traces: Vec<PlanTrace> =
                read_traces(&traces)?.into_iter().map(|(_, t)| t).collect();
            let cfg = learn.config();
            let (domain, stages) = learn_domain(&traces, &cfg).map_err(pipeline)?;
            write(&out, &serialize_domain(&domain))?;
            emit_json(
                &json!({ "config": cfg, "traces": traces.len(), "stages": stages }),
                report.as_deref(),
            )
        }
        Command::InjectNoise {
            traces,
            pct,
            kind,
            seed,
            out,
        } => {
            if !(0.0..=1.0).contains(&pct) {
                return Err(CliError::Input {
                    path: traces,
                    message: format!("--pct {pct} is outside [0, 1]"),
                });
            }
            let files = read_traces(&traces)?;
            let clean: Vec<PlanTrace> = files.iter().map(|(_, t)| t.clone()).collect();
            let noisy = inject_noise(&clean, &NoiseSpec::new(pct, kind.into(), seed));
            for ((path, _), t) in files.iter().zip(&noisy) {
                write(&out.join(file_name(path)), &write_plan_trace(t))?;
            }
            Ok(())
        }
        Command::Evaluate {
            learned,
            reference,
            report,
        } => {
            let score = score_domain(&read_domain(&learned)?, &read_domain(&reference)?);
            emit_json(
                &serde_json::to_value(score).map_err(pipeline)?,
                report.as_deref(),
            )
        }
        Command::Validate {
            domain,
            traces,
            report,
            require_valid,
        } => {
            let d = read_domain(&domain)?;
            let mut rows = Vec::new();
            let mut valid = 0;
            for (path, t) in read_traces(&traces)? {
                let outcome = replay_validate(&d, &t)
                    .map_err(|e| CliError::Pipeline(format!("{}: {e}", path.display())))?;
                valid += usize::from(outcome.valid);
                rows.push(json!({
                    "trace": file_name(&path),
                    "valid": outcome.valid,
                    "failure": outcome.failure.map(|f| f.to_string()),
                }));
            }
            let validity = valid == rows.len();
            emit_json(
                &json!({ "validity": validity, "valid_traces": valid, "total": rows.len(), "traces": rows }),
                report.as_deref(),
            )?;
            if require_valid && !validity {
                return Err(CliError::Invalid(format!(
                    "{} of {} traces failed to replay",
                    rows.len() - valid,
                    rows.len()
                )));
            }
            Ok(())
        }
        Command::Xval {
            traces,
            reference,
            k,
            noise,
            kind,
            ablation,
            learn,
            report,
            require_valid,
        } => {
            let traces: Vec<PlanTrace> =
                read_traces(&traces)?.into_iter().map(|(_, t)| t).collect();
            let reference = reference.as_deref().map(read_domain).transpose()?;
            if let Some(p) = noise.filter(|p| !(0.0..=1.0).contains(p)) {
                return Err(CliError::Pipeline(format!("--noise {p} is outside [0, 1]")));
            }
            let cfg = XvalConfig {
                k,
                seed: learn.seed,
                learn: learn.config(),
                noise: noise.map(|p| NoiseSpec::new(p, kind.into(), learn.seed)),
                ablation: ablation.map(Into::into),
            };
            let fold_report =
                cross_validate(&traces, reference.as_ref(), &cfg).map_err(pipeline)?;
            emit_json(
                &serde_json::to_value(&fold_report).map_err(pipeline)?,
                report.as_deref(),
            )?;
            if require_valid && !fold_report.validity {
                return Err(CliError::Invalid(
                    "some test traces failed to replay".into(),
                ));
            }
            Ok(())
        }
        Command::GenTraces {
            domain,
            n,
            seed,
            min_length,
            max_length,
            out,
            reference_out,
        } => {
            let builtin: Builtin = domain.into();
            let spec = GeneratorSpec::new(builtin).with_length(min_length, max_length);
            let traces = generate_traces(&spec, n, seed).map_err(pipeline)?;
            let width = n.saturating_sub(1).to_string().len().max(3);
            fs::create_dir_all(&out).map_err(io_err(&out))?;
            for (i, t) in traces.iter().enumerate() {
                write(
                    &out.join(format!("{}-{i:0width$}.trace", builtin.name())),
                    &write_plan_trace(t),
                )?;
            }
            if let Some(p) = reference_out {
                write(&p, &serialize_domain(&spec.domain))?;
            }
            Ok(())
        }
        Command::InspectDataset {
            traces,
            action,
            stage,
            learn,
            out,
        } => {
            let traces: Vec<PlanTrace> =
                read_traces(&traces)?.into_iter().map(|(_, t)| t).collect();
            let groups = group_transitions(&traces);
            let transitions = groups
                .get(&action)
                .ok_or_else(|| CliError::Pipeline(format!("no transitions of action {action}")))?;
            let arity = transitions.first().map_or(0, |t| t.action.args.len());
            let mut data = build_dataset(&action, arity, transitions).map_err(pipeline)?;
            let cfg = learn.config();
            if !matches!(stage, Stage::Raw) {
                data = filter_logical_noise(&data, cfg.filter.logical_threshold).0;
            }
            if matches!(stage, Stage::Discretised) {
                let mut filter = cfg.filter;
                filter.seed ^= stable_hash(&action);
                data = discretise_fluents(&data, &filter).0;
            }
            let csv = data.to_csv().map_err(pipeline)?;
            match out {
                Some(p) => write(&p, &csv),
                None => {
                    print!("{csv}");
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("actlearn: {e}");
            ExitCode::from(e.code())
        }
    }
}
