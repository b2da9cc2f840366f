//! Blocking OAI-PMH client: `Identify` and `ListRecords` with resumption
//! token paging, 503 Retry-After handling, and exponential backoff on
//! transient failures. Requests to one endpoint are strictly sequential;
//! tokens are stateful on the server side.

use std::time::Duration;

use termsuggest_core::metadata::format_datestamp;
use termsuggest_core::repo::EndpointConfig;

use crate::error::HarvestError;
use crate::stream::HarvestStream;
use crate::xml::{parse_identify, parse_list_records, HarvestPage, RepositoryDescription};

/// Upper bound honored for a server-sent Retry-After.
pub const RETRY_AFTER_CAP: Duration = Duration::from_secs(300);
/// Upper bound for one computed backoff delay.
const BACKOFF_CAP: Duration = Duration::from_secs(60);
const REQUEST_TIMEOUT: Duration = Duration::from_secs(30);

/// Exponential backoff: `base * 2^retry`, capped. Non-decreasing in the
/// retry number.
pub fn backoff_delay(base: Duration, retry: u32) -> Duration {
    base.saturating_mul(1u32 << retry.min(16)).min(BACKOFF_CAP)
}

enum Attempt {
    Body(String),
    /// Worth retrying: connection trouble or a 5xx answer. Carries the
    /// server-requested delay for 503 responses.
    Transient {
        error: HarvestError,
        retry_after: Option<Duration>,
    },
    Fatal(HarvestError),
}

pub struct OaiClient {
    config: EndpointConfig,
    http: reqwest::blocking::Client,
}

impl OaiClient {
    pub fn new(config: EndpointConfig) -> Result<Self, HarvestError> {
        config.validate()?;
        let http = reqwest::blocking::Client::builder()
            .timeout(REQUEST_TIMEOUT)
            .connect_timeout(Duration::from_secs(10))
            .build()
            .map_err(|source| HarvestError::Network {
                url: config.base_url.to_string(),
                source,
            })?;
        Ok(OaiClient { config, http })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    /// Validates the endpoint via the `Identify` verb.
    pub fn identify(&self) -> Result<RepositoryDescription, HarvestError> {
        let body = self.get_with_retry(&[("verb", "Identify".to_string())])?;
        parse_identify(&body)
    }

    /// Fetches one `ListRecords` page, either the first (no token) or a
    /// continuation.
    pub fn list_records_page(&self, token: Option<&str>) -> Result<HarvestPage, HarvestError> {
        let params = match token {
            Some(token) => vec![
                ("verb", "ListRecords".to_string()),
                ("resumptionToken", token.to_string()),
            ],
            None => {
                let mut params = vec![
                    ("verb", "ListRecords".to_string()),
                    ("metadataPrefix", self.config.metadata_prefix.clone()),
                ];
                if let Some(set) = &self.config.set_spec {
                    params.push(("set", set.clone()));
                }
                if let Some(from) = &self.config.from {
                    params.push(("from", format_datestamp(from)));
                }
                if let Some(until) = &self.config.until {
                    params.push(("until", format_datestamp(until)));
                }
                params
            }
        };
        let body = self.get_with_retry(&params)?;
        parse_list_records(&body)
    }

    /// Follows resumption tokens through the whole selective harvest.
    pub fn harvest_all(self) -> HarvestStream {
        HarvestStream::new(self)
    }

    fn get_with_retry(&self, params: &[(&str, String)]) -> Result<String, HarvestError> {
        let mut retry = 0u32;
        loop {
            match self.try_get(params) {
                Attempt::Body(body) => return Ok(body),
                Attempt::Fatal(error) => return Err(error),
                Attempt::Transient { error, retry_after } => {
                    if retry >= self.config.max_retries {
                        return Err(HarvestError::RetriesExhausted {
                            attempts: retry + 1,
                            last: Box::new(error),
                        });
                    }
                    let delay = match retry_after {
                        Some(wait) => wait.min(RETRY_AFTER_CAP),
                        None => backoff_delay(self.config.backoff_base, retry),
                    };
                    tracing::debug!(
                        url = %self.config.base_url,
                        retry,
                        ?delay,
                        %error,
                        "retrying OAI request"
                    );
                    std::thread::sleep(delay);
                    retry += 1;
                }
            }
        }
    }

    fn try_get(&self, params: &[(&str, String)]) -> Attempt {
        let url = self.config.base_url.clone();
        let response = match self.http.get(url.clone()).query(params).send() {
            Ok(response) => response,
            Err(source) => {
                return Attempt::Transient {
                    error: HarvestError::Network {
                        url: url.to_string(),
                        source,
                    },
                    retry_after: None,
                }
            }
        };
        let status = response.status();
        if status.as_u16() == 503 {
            let retry_after = response
                .headers()
                .get("Retry-After")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<u64>().ok())
                .map(Duration::from_secs);
            return Attempt::Transient {
                error: HarvestError::HttpStatus {
                    status: 503,
                    url: url.to_string(),
                },
                retry_after,
            };
        }
        if status.is_server_error() {
            return Attempt::Transient {
                error: HarvestError::HttpStatus {
                    status: status.as_u16(),
                    url: url.to_string(),
                },
                retry_after: None,
            };
        }
        if !status.is_success() {
            return Attempt::Fatal(HarvestError::HttpStatus {
                status: status.as_u16(),
                url: url.to_string(),
            });
        }
        match response.text() {
            Ok(body) => Attempt::Body(body),
            Err(source) => Attempt::Transient {
                error: HarvestError::Network {
                    url: url.to_string(),
                    source,
                },
                retry_after: None,
            },
        }
    }
}
