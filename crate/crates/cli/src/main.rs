//! `termsuggest` — build and query co-occurrence term suggestion indices
//! from OAI-PMH endpoints or local `oai_dc` XML files, and serve them
//! over HTTP.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::Settings;

#[derive(Debug, Parser)]
#[command(
    name = "termsuggest",
    version,
    about = "Domain-specific search term suggestions from harvested metadata",
    propagate_version = true
)]
struct Cli {
    /// Data directory holding repositories, snapshots, jobs, and keys.
    #[arg(long, global = true, value_name = "DIR")]
    data_dir: Option<PathBuf>,

    /// Configuration file (TOML key-value format).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Human)]
    format: OutputFormat,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    /// Plain text for people.
    Human,
    /// JSON, one document per invocation.
    Json,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)] // parsed once, never stored
enum Command {
    /// Register a repository from an OAI-PMH endpoint or local XML files.
    Register(RegisterArgs),
    /// Run the harvest-process-publish job for a repository.
    Schedule(ScheduleArgs),
    /// Show the state of a repository (by id or name) or a job (by id).
    Status(StatusArgs),
    /// Rank related target terms for a query term.
    Suggest(SuggestArgs),
    /// Build and publish offline from local files, without network.
    Ingest(IngestArgs),
    /// Dump the full recommendation table of the published snapshot.
    Export(ExportArgs),
    /// Manage API keys for the HTTP service.
    Keys(KeysArgs),
    /// Run the HTTP suggestion service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct RegisterArgs {
    /// Repository name, unique per owner.
    pub name: String,
    /// OAI-PMH base URL to harvest from.
    #[arg(long, value_name = "URL", conflicts_with = "files")]
    pub endpoint: Option<url::Url>,
    /// Local oai_dc XML files to ingest instead of an endpoint.
    #[arg(long, value_name = "FILE", num_args = 1..)]
    pub files: Vec<PathBuf>,
    /// Metadata format requested from the endpoint (only oai_dc).
    #[arg(long, default_value = "oai_dc")]
    pub metadata_prefix: String,
    /// OAI set to harvest selectively.
    #[arg(long, value_name = "SET")]
    pub set: Option<String>,
    /// Selective harvest lower bound (YYYY-MM-DD or RFC 3339).
    #[arg(long, value_name = "DATESTAMP")]
    pub from: Option<String>,
    /// Selective harvest upper bound.
    #[arg(long, value_name = "DATESTAMP")]
    pub until: Option<String>,
    /// Retries per request after the initial attempt.
    #[arg(long, default_value_t = 3)]
    pub max_retries: u32,
    /// Base backoff delay between retries, in milliseconds.
    #[arg(long, default_value_t = 250)]
    pub backoff_ms: u64,
    /// Source (free text) elements; repeat the flag. Default: title,
    /// description.
    #[arg(long = "source-element", value_name = "ELEMENT")]
    pub source_elements: Vec<String>,
    /// Target (controlled term) element.
    #[arg(long, default_value = "subject", value_name = "ELEMENT")]
    pub target_element: String,
    /// Keep only values tagged with this language (untagged always pass).
    #[arg(long, value_name = "TAG")]
    pub language_filter: Option<String>,
    /// Keep the original casing of terms and tokens.
    #[arg(long)]
    pub no_lowercase: bool,
    /// Minimum token length in characters.
    #[arg(long, default_value_t = 2)]
    pub min_token_length: usize,
    /// Stopword file (one term per line, # comments) replacing the
    /// bundled English list.
    #[arg(long, value_name = "FILE")]
    pub stopwords: Option<PathBuf>,
    /// Do not treat punctuation as a token boundary.
    #[arg(long)]
    pub keep_punctuation: bool,
    /// Owning user recorded on the repository.
    #[arg(long, default_value = "local")]
    pub owner: String,
    /// Allow keyless access to this repository's suggest endpoint.
    #[arg(long)]
    pub anonymous_suggest: bool,
    /// Do not retain harvested records for reprocessing.
    #[arg(long)]
    pub no_retain_raw: bool,
    /// Skip the Identify probe of the endpoint.
    #[arg(long)]
    pub no_validate: bool,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    /// Repository id or name.
    pub repo: String,
    /// Remove a stale job lock left by a crashed process first.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct StatusArgs {
    /// Job id, repository id, or repository name.
    pub target: String,
}

#[derive(Debug, Args)]
pub struct SuggestArgs {
    /// Repository id or name.
    pub repo: String,
    /// Query term; multi-word queries aggregate per-token rankings.
    pub term: String,
    /// Maximum number of suggestions.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Relatedness metric: jaccard, dice, or nwd.
    #[arg(long, default_value = "jaccard")]
    pub metric: String,
    /// Drop target terms seen in fewer than this many documents.
    #[arg(long, default_value_t = 1)]
    pub min_df: u64,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Repository id or name.
    pub repo: String,
    /// oai_dc XML files to build from.
    #[arg(required = true, value_name = "FILE")]
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Repository id or name.
    pub repo: String,
    /// Relatedness metric: jaccard, dice, or nwd.
    #[arg(long, default_value = "jaccard")]
    pub metric: String,
}

#[derive(Debug, Args)]
pub struct KeysArgs {
    #[command(subcommand)]
    pub action: KeysAction,
    /// Admin credential; falls back to TERMSUGGEST_ADMIN_TOKEN or the
    /// config file.
    #[arg(long, global = true, value_name = "TOKEN")]
    pub admin_token: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum KeysAction {
    /// Issue a new API key; the plaintext is printed exactly once.
    Issue {
        #[arg(long)]
        owner: String,
    },
    /// Revoke a key by its key id.
    Revoke { key_id: String },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Listen address, e.g. 127.0.0.1:8080 (port 0 picks a free port).
    #[arg(long, value_name = "ADDR")]
    pub listen: Option<std::net::SocketAddr>,
    /// Worker threads for background jobs.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Per-key request budget per second.
    #[arg(long, value_name = "N")]
    pub rate_limit: Option<u32>,
}

/// Operational failures exit 1; usage problems exit 2 with a synopsis on
/// stderr, matching clap's own exit code for parse errors.
pub enum CliError {
    Usage { message: String, usage: &'static str },
    Op(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Op(e)
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();

    let cli = Cli::parse();
    let settings = match Settings::load(cli.config.as_deref()) {
        Ok(mut settings) => {
            if let Some(dir) = &cli.data_dir {
                settings.data_dir = dir.clone();
            }
            settings
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };

    let result = match cli.command {
        Command::Register(args) => commands::register(&settings, cli.format, args),
        Command::Schedule(args) => commands::schedule(&settings, cli.format, args),
        Command::Status(args) => commands::status(&settings, cli.format, args),
        Command::Suggest(args) => commands::suggest(&settings, cli.format, args),
        Command::Ingest(args) => commands::ingest(&settings, cli.format, args),
        Command::Export(args) => commands::export(&settings, cli.format, args),
        Command::Keys(args) => commands::keys(&settings, cli.format, args),
        Command::Serve(args) => commands::serve(&settings, args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage { message, usage }) => {
            eprintln!("error: {message}");
            eprintln!("Usage: {usage}");
            ExitCode::from(2)
        }
        Err(CliError::Op(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
