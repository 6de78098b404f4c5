use std::collections::BTreeMap;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use aucad_core::config::{ConfigFileError, PipelineConfig};
use aucad_core::metrics::{build_prompt, cohens_kappa};
use aucad_core::pairs::read_jsonl;
use aucad_core::pipeline::{self, PipelineError};
use aucad_core::review::AnnotationRecord;
use aucad_review_service::{ServiceConfig, DEFAULT_PORT};

/// Builds and evaluates log-statement alignment datasets from issue trackers.
#[derive(Parser)]
#[command(name = "aucad", version)]
struct Cli {
    /// TOML pipeline configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Read tracker pages and forge payloads from the fixtures directory.
    #[arg(long, global = true)]
    offline: bool,
    /// Fixture root with `tracker/` and `forge/` subdirectories.
    #[arg(long, global = true)]
    fixtures: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Collect log-related issues.
    Mine {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Resolve issue links to commit bundles.
    Link {
        #[arg(long)]
        issues: Option<PathBuf>,
        #[arg(long)]
        bundles: Option<PathBuf>,
    },
    /// Extract log statement changes from commit bundles.
    Extract {
        #[arg(long)]
        bundles: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build, filter and export dataset entries.
    Build(BuildArgs),
    /// Run mine, link, extract and build.
    Run,
    /// Score model responses against a benchmark corpus.
    Eval {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        responses: PathBuf,
        #[arg(long)]
        level_matrix: Option<PathBuf>,
        #[arg(long, default_value = "report.json")]
        out: PathBuf,
    },
    /// Cohen's kappa between two annotators of a label journal.
    Kappa {
        #[arg(long)]
        journal: PathBuf,
        #[arg(long)]
        first: Option<String>,
        #[arg(long)]
        second: Option<String>,
    },
    /// Print the recommendation prompt for a code file.
    Prompt { file: PathBuf },
    /// Serve the review API (and a static UI bundle).
    ReviewServe(ServeArgs),
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    changes: Option<PathBuf>,
    #[arg(long)]
    issues: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Evaluation corpus to exclude (repeatable).
    #[arg(long = "corpus")]
    corpora: Vec<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    entries: PathBuf,
    #[arg(long)]
    issues: Option<PathBuf>,
    #[arg(long, default_value = "labels.jsonl")]
    journal: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "ann1,ann2")]
    annotators: Vec<String>,
    #[arg(long)]
    per_annotator: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    adjudicator: Option<String>,
    #[arg(long, default_value = "reviewed.jsonl")]
    export: PathBuf,
    #[arg(long = "static")]
    static_dir: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
    #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
    host: IpAddr,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure { code: e.exit_code() as u8, message: e.to_string() }
    }
}

impl From<ConfigFileError> for Failure {
    fn from(e: ConfigFileError) -> Self {
        match &e {
            ConfigFileError::Io { path, .. } if !path.exists() => {
                PipelineError::MissingInput(path.clone()).into()
            }
            _ => PipelineError::Config(e).into(),
        }
    }
}

fn stage_failure(e: impl std::fmt::Display) -> Failure {
    PipelineError::Stage(e.to_string()).into()
}

fn print<T: Serialize>(value: &T) -> Result<(), Failure> {
    println!("{}", serde_json::to_string_pretty(value).map_err(stage_failure)?);
    Ok(())
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, Failure> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if cli.offline {
        config.offline = true;
    }
    if let Some(f) = &cli.fixtures {
        config.fixtures = Some(f.clone());
    }
    Ok(config)
}

fn require(path: &Path) -> Result<(), Failure> {
    if path.exists() {
        Ok(())
    } else {
        Err(PipelineError::MissingInput(path.to_path_buf()).into())
    }
}

#[derive(Serialize)]
struct KappaSummary {
    stage: &'static str,
    annotators: (String, String),
    subset_size: usize,
    stats: Option<aucad_core::metrics::KappaStats>,
}

fn kappa(journal: &Path, first: Option<String>, second: Option<String>) -> Result<KappaSummary, Failure> {
    require(journal)?;
    let records: Vec<AnnotationRecord> = read_jsonl(journal).map_err(stage_failure)?;
    let mut current: BTreeMap<(&str, &str), bool> = BTreeMap::new();
    for r in &records {
        current.insert((r.entry_id.as_str(), r.annotator.as_str()), r.relevant);
    }
    let mut names: Vec<&str> = records.iter().map(|r| r.annotator.as_str()).collect();
    names.sort();
    names.dedup();
    let pick = |given: Option<String>, i: usize| given.or_else(|| names.get(i).map(|s| s.to_string()));
    let (Some(a), Some(b)) = (pick(first, 0), pick(second, 1)) else {
        return Err(PipelineError::Config(ConfigFileError::Invalid("journal names fewer than two annotators".into())).into());
    };
    let mut la = Vec::new();
    let mut lb = Vec::new();
    let entries: std::collections::BTreeSet<&str> = current.keys().map(|(e, _)| *e).collect();
    for e in entries {
        if let (Some(x), Some(y)) = (current.get(&(e, a.as_str())), current.get(&(e, b.as_str()))) {
            la.push(*x);
            lb.push(*y);
        }
    }
    Ok(KappaSummary { stage: "kappa", subset_size: la.len(), stats: cohens_kappa(&la, &lb).ok(), annotators: (a, b) })
}

fn serve(config: &PipelineConfig, args: ServeArgs) -> Result<(), Failure> {
    require(&args.entries)?;
    if let Some(i) = &args.issues {
        require(i)?;
    }
    let service = ServiceConfig {
        entries: args.entries,
        issues: args.issues,
        journal: args.journal,
        annotators: args.annotators,
        per_annotator: args.per_annotator,
        seed: args.seed.unwrap_or(config.seed),
        adjudicator: args.adjudicator,
        export_path: args.export,
        static_dir: args.static_dir,
    };
    let addr = SocketAddr::new(args.host, args.port);
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(stage_failure)?;
    eprintln!("serving review API on http://{addr}");
    runtime.block_on(aucad_review_service::serve(&service, addr)).map_err(stage_failure)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut config = load_config(&cli)?;
    let paths = &mut config.paths;
    match cli.command {
        Command::Mine { out } => {
            if let Some(p) = out {
                paths.issues = p;
            }
            print(&pipeline::run_mine(&config)?)
        }
        Command::Link { issues, bundles } => {
            paths.issues = issues.unwrap_or(paths.issues.clone());
            paths.bundles = bundles.unwrap_or(paths.bundles.clone());
            print(&pipeline::run_link(&config)?)
        }
        Command::Extract { bundles, out } => {
            paths.bundles = bundles.unwrap_or(paths.bundles.clone());
            paths.changes = out.unwrap_or(paths.changes.clone());
            print(&pipeline::run_extract(&config)?)
        }
        Command::Build(args) => {
            paths.changes = args.changes.unwrap_or(paths.changes.clone());
            paths.issues = args.issues.unwrap_or(paths.issues.clone());
            paths.entries = args.out.unwrap_or(paths.entries.clone());
            paths.eval_corpora.extend(args.corpora);
            print(&pipeline::run_build(&config)?)
        }
        Command::Run => print(&pipeline::run_all(&config)?),
        Command::Eval { truth, responses, level_matrix, out } => {
            print(&pipeline::run_eval(&config, &truth, &responses, level_matrix.as_deref(), &out)?)
        }
        Command::Kappa { journal, first, second } => print(&kappa(&journal, first, second)?),
        Command::Prompt { file } => {
            require(&file)?;
            let code = std::fs::read_to_string(&file).map_err(stage_failure)?;
            print!("{}", build_prompt(code.trim_end_matches('\n')));
            Ok(())
        }
        Command::ReviewServe(args) => serve(&config, args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
