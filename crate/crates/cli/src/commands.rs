//! Subcommand implementations. Every command works directly against the
//! data directory; `serve` additionally exposes the same operations over
//! HTTP.

use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};

use termsuggest_core::engine::{resolve_metric, CooccurrenceIndex, SimilarityMetric};
use termsuggest_core::metadata::{parse_datestamp, DcElement, FieldMapping};
use termsuggest_core::repo::{EndpointConfig, RepoSource, RepositoryRecord, SnapshotId};
use termsuggest_core::store::{FsStorage, Serving, Storage};
use termsuggest_core::text::{PipelineConfig, StopwordList};
use termsuggest_harvest::OaiClient;
use termsuggest_pipeline::{Job, JobStage, PipelineOptions, Scheduler};
use termsuggest_service::wire::{ExportResponse, SuggestResponse, SuggestionItem};
use termsuggest_service::{AppState, KeyStore, RateLimiter};

use crate::config::Settings;
use crate::{
    CliError, ExportArgs, IngestArgs, KeysAction, KeysArgs, OutputFormat, RegisterArgs,
    ScheduleArgs, ServeArgs, StatusArgs, SuggestArgs,
};

const SUGGEST_USAGE: &str =
    "termsuggest suggest <REPO> <TERM> [--k <N>] [--metric jaccard|dice|nwd] [--min-df <N>]";
const REGISTER_USAGE: &str =
    "termsuggest register <NAME> (--endpoint <URL> | --files <FILE>...) [options]";

fn usage(message: impl Into<String>, usage: &'static str) -> CliError {
    CliError::Usage {
        message: message.into(),
        usage,
    }
}

fn open_storage(settings: &Settings) -> Result<Arc<FsStorage>> {
    Ok(Arc::new(
        FsStorage::open(&settings.data_dir)
            .with_context(|| format!("cannot open data directory {}", settings.data_dir.display()))?,
    ))
}

fn build_scheduler(settings: &Settings, storage: Arc<FsStorage>) -> Scheduler {
    Scheduler::new(
        storage,
        Arc::new(Serving::new()),
        PipelineOptions {
            workers: settings.workers,
            job_timeout: settings.job_timeout,
        },
    )
}

/// Accepts a repository id or a unique repository name.
fn resolve_repo(storage: &FsStorage, target: &str) -> Result<RepositoryRecord> {
    if let Ok(record) = storage.get_repository(target) {
        return Ok(record);
    }
    let matches: Vec<RepositoryRecord> = storage
        .list_repositories()?
        .into_iter()
        .filter(|r| r.name == target)
        .collect();
    match matches.len() {
        0 => bail!("no repository with id or name '{target}'"),
        1 => Ok(matches.into_iter().next().unwrap()),
        n => bail!("repository name '{target}' is ambiguous ({n} owners use it); use the id"),
    }
}

fn parse_element(name: &str) -> Result<DcElement, CliError> {
    DcElement::from_str(name).map_err(|e| usage(e.to_string(), REGISTER_USAGE))
}

fn emit_json<T: serde::Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("output types serialize")
    );
}

fn load_published(
    storage: &FsStorage,
    record: &RepositoryRecord,
) -> Result<(SnapshotId, CooccurrenceIndex)> {
    let id = storage
        .published_snapshot(&record.repo_id)?
        .ok_or_else(|| {
            anyhow!(
                "repository '{}' has no published snapshot yet; run `termsuggest schedule {}` or `termsuggest ingest {} <files>` first",
                record.name,
                record.name,
                record.name
            )
        })?;
    let index = storage.load_snapshot(&id)?;
    Ok((id, index))
}

fn metric_by_name(name: &str, usage_text: &'static str) -> Result<&'static dyn SimilarityMetric, CliError> {
    resolve_metric(name).ok_or_else(|| {
        usage(
            format!("unknown metric '{name}'; valid metrics: jaccard, dice, nwd"),
            usage_text,
        )
    })
}

// ---------------------------------------------------------------- register

pub fn register(
    settings: &Settings,
    format: OutputFormat,
    args: RegisterArgs,
) -> Result<(), CliError> {
    if args.name.trim().is_empty() {
        return Err(usage("repository name must not be empty", REGISTER_USAGE));
    }

    let source = match (&args.endpoint, args.files.is_empty()) {
        (Some(url), true) => {
            let mut config = EndpointConfig::new(url.clone());
            config.metadata_prefix = args.metadata_prefix.clone();
            config.set_spec = args.set.clone();
            config.max_retries = args.max_retries;
            config.backoff_base = Duration::from_millis(args.backoff_ms);
            if let Some(from) = &args.from {
                config.from = Some(
                    parse_datestamp(from).map_err(|e| usage(e.to_string(), REGISTER_USAGE))?,
                );
            }
            if let Some(until) = &args.until {
                config.until = Some(
                    parse_datestamp(until).map_err(|e| usage(e.to_string(), REGISTER_USAGE))?,
                );
            }
            config
                .validate()
                .map_err(|e| usage(e.to_string(), REGISTER_USAGE))?;
            if !args.no_validate {
                let description = OaiClient::new(config.clone())
                    .map_err(|e| anyhow!(e))?
                    .identify()
                    .map_err(|e| anyhow!("endpoint validation failed: {e}"))?;
                eprintln!(
                    "validated endpoint: {} (protocol {})",
                    description.name, description.protocol_version
                );
            }
            RepoSource::Endpoint(config)
        }
        (None, false) => {
            for path in &args.files {
                if !path.is_file() {
                    return Err(CliError::Op(anyhow!(
                        "file '{}' does not exist or is not a file",
                        path.display()
                    )));
                }
            }
            RepoSource::Files {
                paths: args.files.clone(),
            }
        }
        _ => {
            return Err(usage(
                "exactly one of --endpoint or --files is required",
                REGISTER_USAGE,
            ))
        }
    };

    let source_elements = if args.source_elements.is_empty() {
        vec![DcElement::Title, DcElement::Description]
    } else {
        args.source_elements
            .iter()
            .map(|name| parse_element(name))
            .collect::<Result<Vec<_>, CliError>>()?
    };
    let target_element = parse_element(&args.target_element)?;
    let mapping = FieldMapping::new(source_elements, target_element, args.language_filter.clone())
        .map_err(|e| usage(e.to_string(), REGISTER_USAGE))?;

    let mut pipeline = PipelineConfig {
        lowercase: !args.no_lowercase,
        min_token_length: args.min_token_length,
        strip_punctuation: !args.keep_punctuation,
        ..PipelineConfig::default()
    };
    if let Some(path) = &args.stopwords {
        pipeline.stopwords = StopwordList::from_file(path)
            .with_context(|| format!("cannot read stopword file {}", path.display()))
            .map_err(CliError::Op)?;
    }
    pipeline
        .validate()
        .map_err(|e| usage(e, REGISTER_USAGE))?;

    let storage = open_storage(settings)?;
    let repo_id = format!("r-{}", &uuid::Uuid::new_v4().simple().to_string()[..12]);
    let mut record = RepositoryRecord::new(
        repo_id,
        args.name.trim(),
        &args.owner,
        source,
        mapping,
        pipeline,
    );
    record.allow_anonymous_suggest = args.anonymous_suggest;
    record.retain_raw = !args.no_retain_raw;
    storage
        .create_repository(&record)
        .map_err(|e| CliError::Op(e.into()))?;

    match format {
        OutputFormat::Human => {
            println!("repo_id: {}", record.repo_id);
            println!("name: {}", record.name);
            println!("owner: {}", record.owner);
            println!("status: {}", record.status);
        }
        OutputFormat::Json => emit_json(&termsuggest_service::wire::RepositoryView::from_record(
            &record,
        )),
    }
    Ok(())
}

// ---------------------------------------------------------------- schedule

fn print_job_human(job: &Job) {
    println!("job: {}", job.job_id);
    println!("repository: {}", job.repo_id);
    println!("stage: {}", job.stage);
    println!("harvested: {}", job.records_harvested);
    println!("processed: {}", job.records_processed);
    if let Some(snapshot) = &job.snapshot {
        println!("snapshot: {snapshot}");
    }
    if let Some(error) = &job.error {
        println!("error: {error}");
    }
    for warning in &job.warnings {
        println!("warning: {warning}");
    }
}

fn run_job_to_end(
    scheduler: &Scheduler,
    repo_id: &str,
    source_override: Option<RepoSource>,
    format: OutputFormat,
) -> Result<(), CliError> {
    let job = scheduler
        .schedule_with_source(repo_id, source_override)
        .map_err(|e| CliError::Op(e.into()))?;
    if format == OutputFormat::Human {
        println!("job: {}", job.job_id);
    }
    let mut last_stage = job.stage;
    let done = loop {
        let status = scheduler
            .job_status(&job.job_id)
            .map_err(|e| CliError::Op(e.into()))?;
        if status.stage != last_stage && format == OutputFormat::Human {
            eprintln!("stage: {}", status.stage);
            last_stage = status.stage;
        }
        if status.stage.is_terminal() {
            break status;
        }
        std::thread::sleep(Duration::from_millis(25));
    };
    match format {
        OutputFormat::Human => print_job_human(&done),
        OutputFormat::Json => emit_json(&done),
    }
    if done.stage == JobStage::Failed {
        return Err(CliError::Op(anyhow!(
            "job {} failed: {}",
            done.job_id,
            done.error.unwrap_or_else(|| "unknown error".to_string())
        )));
    }
    Ok(())
}

pub fn schedule(
    settings: &Settings,
    format: OutputFormat,
    args: ScheduleArgs,
) -> Result<(), CliError> {
    let storage = open_storage(settings)?;
    let record = resolve_repo(&storage, &args.repo)?;
    if args.force {
        storage
            .force_release_job_lock(&record.repo_id)
            .map_err(|e| CliError::Op(e.into()))?;
    }
    let scheduler = build_scheduler(settings, storage);
    run_job_to_end(&scheduler, &record.repo_id, None, format)
}

pub fn ingest(settings: &Settings, format: OutputFormat, args: IngestArgs) -> Result<(), CliError> {
    for path in &args.files {
        if !path.is_file() {
            return Err(CliError::Op(anyhow!(
                "file '{}' does not exist or is not a file",
                path.display()
            )));
        }
    }
    let storage = open_storage(settings)?;
    let record = resolve_repo(&storage, &args.repo)?;
    let scheduler = build_scheduler(settings, storage);
    run_job_to_end(
        &scheduler,
        &record.repo_id,
        Some(RepoSource::Files {
            paths: args.files.clone(),
        }),
        format,
    )
}

// ------------------------------------------------------------------ status

pub fn status(settings: &Settings, format: OutputFormat, args: StatusArgs) -> Result<(), CliError> {
    let storage = open_storage(settings)?;
    if let Some(json) = storage
        .get_job_record(&args.target)
        .map_err(|e| CliError::Op(e.into()))?
    {
        let job: Job = serde_json::from_str(&json)
            .map_err(|e| CliError::Op(anyhow!("corrupt job record: {e}")))?;
        match format {
            OutputFormat::Human => print_job_human(&job),
            OutputFormat::Json => emit_json(&job),
        }
        return Ok(());
    }
    let record = resolve_repo(&storage, &args.target)?;
    match format {
        OutputFormat::Human => {
            println!("repository: {}", record.repo_id);
            println!("name: {}", record.name);
            println!("owner: {}", record.owner);
            println!("status: {}", record.status);
            match &record.published_snapshot {
                Some(id) => println!("published_snapshot: {id}"),
                None => println!("published_snapshot: none"),
            }
            if let Some(error) = &record.last_error {
                println!("last_error: {error}");
            }
        }
        OutputFormat::Json => emit_json(&termsuggest_service::wire::RepositoryView::from_record(
            &record,
        )),
    }
    Ok(())
}

// ----------------------------------------------------------------- suggest

pub fn suggest(
    settings: &Settings,
    format: OutputFormat,
    args: SuggestArgs,
) -> Result<(), CliError> {
    if args.term.trim().is_empty() {
        return Err(usage("the query term must not be empty", SUGGEST_USAGE));
    }
    if args.k == 0 {
        return Err(usage("--k must be at least 1", SUGGEST_USAGE));
    }
    let metric = metric_by_name(&args.metric, SUGGEST_USAGE)?;

    let storage = open_storage(settings)?;
    let record = resolve_repo(&storage, &args.repo)?;
    let tokens = termsuggest_core::text::tokenize_free_text(&args.term, &record.pipeline);
    if tokens.is_empty() {
        return Err(usage(
            "the query term is empty after normalization",
            SUGGEST_USAGE,
        ));
    }
    let (snapshot, index) = load_published(&storage, &record)?;
    let min_df = args.min_df.max(1);
    let result = if tokens.len() == 1 {
        index.recommend(&tokens[0], args.k, metric, min_df)
    } else {
        index.recommend_multi(&tokens, args.k, metric, min_df)
    };

    match format {
        OutputFormat::Human => {
            for item in &result.recommendations {
                println!("{} {:.3}", item.term, item.score);
            }
            if !result.query_in_corpus {
                eprintln!("term not in corpus");
            }
        }
        OutputFormat::Json => {
            // Identical wire shape to the HTTP service.
            let response = SuggestResponse {
                query: tokens.join(" "),
                repo_id: record.repo_id.clone(),
                metric: metric.name().to_string(),
                snapshot,
                corpus_size: index.n_docs(),
                term_found: result.query_in_corpus,
                suggestions: result
                    .recommendations
                    .iter()
                    .map(SuggestionItem::from)
                    .collect(),
            };
            emit_json(&response);
        }
    }
    Ok(())
}

// ------------------------------------------------------------------ export

pub fn export(settings: &Settings, format: OutputFormat, args: ExportArgs) -> Result<(), CliError> {
    let metric = metric_by_name(&args.metric, "termsuggest export <REPO> [--metric <M>]")?;
    let storage = open_storage(settings)?;
    let record = resolve_repo(&storage, &args.repo)?;
    let (snapshot, index) = load_published(&storage, &record)?;
    let rows = termsuggest_service::wire::export_rows(&index, metric);
    match format {
        OutputFormat::Human => {
            println!("# source\ttarget\tscore\tdf_source\tdf_target\tdf_joint");
            for row in &rows {
                println!(
                    "{}\t{}\t{:.6}\t{}\t{}\t{}",
                    row.source, row.target, row.score, row.df_source, row.df_target, row.df_joint
                );
            }
        }
        OutputFormat::Json => emit_json(&ExportResponse {
            repo_id: record.repo_id.clone(),
            snapshot,
            metric: metric.name().to_string(),
            corpus_size: index.n_docs(),
            rows,
        }),
    }
    Ok(())
}

// -------------------------------------------------------------------- keys

#[derive(serde::Serialize)]
struct IssuedKeyOutput {
    key_id: String,
    owner: String,
    api_key: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    admin_token: Option<String>,
}

pub fn keys(settings: &Settings, format: OutputFormat, args: KeysArgs) -> Result<(), CliError> {
    // The data directory must exist before the key store opens in it.
    let storage = open_storage(settings)?;
    let store = KeyStore::open(storage.root()).map_err(|e| CliError::Op(e.into()))?;

    // Resolve the admin credential, bootstrapping it on first use.
    let mut created_admin = None;
    let admin_token = match args.admin_token.clone().or_else(|| settings.admin_token.clone()) {
        Some(token) => token,
        None => {
            if let Some(token) = store.ensure_admin().map_err(|e| CliError::Op(e.into()))? {
                eprintln!("created admin credential: {token}");
                eprintln!("store it now; key operations require it and it is never shown again");
                created_admin = Some(token.clone());
                token
            } else {
                return Err(CliError::Op(anyhow!(
                    "an admin credential is required: pass --admin-token or set TERMSUGGEST_ADMIN_TOKEN"
                )));
            }
        }
    };

    match args.action {
        KeysAction::Issue { owner } => {
            let issued = store
                .issue(&admin_token, &owner)
                .map_err(|e| CliError::Op(e.into()))?;
            match format {
                OutputFormat::Human => {
                    println!("key_id: {}", issued.key_id);
                    println!("owner: {}", issued.owner);
                    println!("api_key: {}", issued.plaintext);
                    eprintln!("store the api_key now; it is shown only once");
                }
                OutputFormat::Json => emit_json(&IssuedKeyOutput {
                    key_id: issued.key_id,
                    owner: issued.owner,
                    api_key: issued.plaintext,
                    admin_token: created_admin,
                }),
            }
        }
        KeysAction::Revoke { key_id } => {
            store
                .revoke(&admin_token, &key_id)
                .map_err(|e| CliError::Op(e.into()))?;
            match format {
                OutputFormat::Human => println!("revoked: {key_id}"),
                OutputFormat::Json => {
                    emit_json(&serde_json::json!({ "revoked": key_id }))
                }
            }
        }
    }
    Ok(())
}

// ------------------------------------------------------------------- serve

pub fn serve(settings: &Settings, args: ServeArgs) -> Result<(), CliError> {
    let storage = open_storage(settings)?;
    let serving = Arc::new(Serving::new());
    let scheduler = Arc::new(Scheduler::new(
        storage.clone(),
        serving.clone(),
        PipelineOptions {
            workers: args.workers.unwrap_or(settings.workers),
            job_timeout: settings.job_timeout,
        },
    ));
    let keys = Arc::new(KeyStore::open(storage.root()).map_err(|e| CliError::Op(e.into()))?);
    let limiter = Arc::new(RateLimiter::per_second(
        args.rate_limit.unwrap_or(settings.rate_limit_per_sec),
    ));
    let state = AppState {
        storage,
        serving,
        scheduler,
        keys,
        limiter,
    };
    let listen = args.listen.unwrap_or(settings.listen);
    termsuggest_service::run_blocking(listen, state, |addr| {
        println!("listening on http://{addr}");
        let _ = std::io::stdout().flush();
    })
    .map_err(|e| CliError::Op(anyhow!("service failed: {e}")))
}
