//! Operator configuration: a TOML file overridden by `TERMSUGGEST_*`
//! environment variables, overridden by command-line flags.
//!
//! Recognized keys (file and environment):
//!
//! | file key             | environment variable            |
//! |----------------------|---------------------------------|
//! | `data_dir`           | `TERMSUGGEST_DATA_DIR`          |
//! | `listen`             | `TERMSUGGEST_LISTEN`            |
//! | `workers`            | `TERMSUGGEST_WORKERS`           |
//! | `rate_limit_per_sec` | `TERMSUGGEST_RATE_LIMIT_PER_SEC`|
//! | `job_timeout_secs`   | `TERMSUGGEST_JOB_TIMEOUT_SECS`  |
//! | `admin_token`        | `TERMSUGGEST_ADMIN_TOKEN`       |

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSettings {
    data_dir: Option<PathBuf>,
    listen: Option<String>,
    workers: Option<usize>,
    rate_limit_per_sec: Option<u32>,
    job_timeout_secs: Option<u64>,
    admin_token: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub data_dir: PathBuf,
    pub listen: SocketAddr,
    pub workers: usize,
    pub rate_limit_per_sec: u32,
    pub job_timeout: Option<Duration>,
    pub admin_token: Option<String>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            data_dir: PathBuf::from("./termsuggest-data"),
            listen: "127.0.0.1:8080".parse().expect("static address"),
            workers: 2,
            rate_limit_per_sec: 100,
            job_timeout: None,
            admin_token: None,
        }
    }
}

fn env_var(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.is_empty())
}

impl Settings {
    /// Loads the file (when present), then applies environment
    /// overrides. Flag overrides are applied by the caller.
    pub fn load(config_path: Option<&Path>) -> Result<Settings> {
        let mut settings = Settings::default();

        let path = config_path
            .map(PathBuf::from)
            .or_else(|| env_var("TERMSUGGEST_CONFIG").map(PathBuf::from));
        if let Some(path) = path {
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("cannot read config file {}", path.display()))?;
            let file: FileSettings = toml::from_str(&text)
                .with_context(|| format!("cannot parse config file {}", path.display()))?;
            if let Some(dir) = file.data_dir {
                settings.data_dir = dir;
            }
            if let Some(listen) = file.listen {
                settings.listen = listen
                    .parse()
                    .with_context(|| format!("bad listen address '{listen}' in config"))?;
            }
            if let Some(workers) = file.workers {
                settings.workers = workers.max(1);
            }
            if let Some(rate) = file.rate_limit_per_sec {
                settings.rate_limit_per_sec = rate.max(1);
            }
            if let Some(secs) = file.job_timeout_secs {
                settings.job_timeout = (secs > 0).then(|| Duration::from_secs(secs));
            }
            settings.admin_token = file.admin_token;
        }

        if let Some(dir) = env_var("TERMSUGGEST_DATA_DIR") {
            settings.data_dir = PathBuf::from(dir);
        }
        if let Some(listen) = env_var("TERMSUGGEST_LISTEN") {
            settings.listen = listen
                .parse()
                .with_context(|| format!("bad TERMSUGGEST_LISTEN '{listen}'"))?;
        }
        if let Some(workers) = env_var("TERMSUGGEST_WORKERS") {
            settings.workers = workers
                .parse::<usize>()
                .with_context(|| format!("bad TERMSUGGEST_WORKERS '{workers}'"))?
                .max(1);
        }
        if let Some(rate) = env_var("TERMSUGGEST_RATE_LIMIT_PER_SEC") {
            settings.rate_limit_per_sec = rate
                .parse::<u32>()
                .with_context(|| format!("bad TERMSUGGEST_RATE_LIMIT_PER_SEC '{rate}'"))?
                .max(1);
        }
        if let Some(secs) = env_var("TERMSUGGEST_JOB_TIMEOUT_SECS") {
            let secs: u64 = secs
                .parse()
                .with_context(|| format!("bad TERMSUGGEST_JOB_TIMEOUT_SECS '{secs}'"))?;
            settings.job_timeout = (secs > 0).then(|| Duration::from_secs(secs));
        }
        if let Some(token) = env_var("TERMSUGGEST_ADMIN_TOKEN") {
            settings.admin_token = Some(token);
        }
        Ok(settings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_settings_parse_and_apply() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.toml");
        std::fs::write(
            &path,
            "data_dir = \"/tmp/ts\"\nlisten = \"127.0.0.1:9999\"\nworkers = 4\nrate_limit_per_sec = 10\njob_timeout_secs = 60\n",
        )
        .unwrap();
        let settings = Settings::load(Some(&path)).unwrap();
        assert_eq!(settings.data_dir, PathBuf::from("/tmp/ts"));
        assert_eq!(settings.listen.port(), 9999);
        assert_eq!(settings.workers, 4);
        assert_eq!(settings.rate_limit_per_sec, 10);
        assert_eq!(settings.job_timeout, Some(Duration::from_secs(60)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.toml");
        std::fs::write(&path, "no_such_key = 1\n").unwrap();
        assert!(Settings::load(Some(&path)).is_err());
    }
}
