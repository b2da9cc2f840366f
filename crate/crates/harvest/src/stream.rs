//! Lazy record stream over a full selective harvest.
//!
//! Follows resumption tokens page by page. When the endpoint rejects a
//! token mid-harvest the stream restarts once from the beginning and
//! deduplicates by identifier, so every record is yielded exactly once; a
//! second rejection aborts. Within a buffered page, duplicate identifiers
//! keep the latest datestamp. Records already handed to the consumer
//! cannot be retracted, so later occurrences of a yielded identifier are
//! skipped.

use std::collections::{HashSet, VecDeque};

use termsuggest_core::metadata::RawRecord;

use crate::client::OaiClient;
use crate::error::HarvestError;

pub struct HarvestStream {
    client: OaiClient,
    buffer: VecDeque<RawRecord>,
    token: Option<String>,
    /// False until the first page arrives; a fresh (re)start fetches
    /// without a token.
    started: bool,
    finished: bool,
    restarted: bool,
    yielded: HashSet<String>,
    complete_list_size: Option<u64>,
}

impl HarvestStream {
    pub(crate) fn new(client: OaiClient) -> Self {
        HarvestStream {
            client,
            buffer: VecDeque::new(),
            token: None,
            started: false,
            finished: false,
            restarted: false,
            yielded: HashSet::new(),
            complete_list_size: None,
        }
    }

    /// The size advertised by the endpoint, when it sent one.
    pub fn complete_list_size(&self) -> Option<u64> {
        self.complete_list_size
    }

    fn fetch_next_page(&mut self) -> Option<HarvestError> {
        let token = if self.started {
            match &self.token {
                Some(token) => Some(token.clone()),
                None => {
                    self.finished = true;
                    return None;
                }
            }
        } else {
            None
        };
        let page = match self.client.list_records_page(token.as_deref()) {
            Ok(page) => page,
            Err(HarvestError::BadResumptionToken { .. }) if self.started => {
                if self.restarted {
                    self.finished = true;
                    return Some(HarvestError::RestartLoop);
                }
                tracing::info!("resumption token rejected; restarting harvest from the beginning");
                self.restarted = true;
                self.started = false;
                self.token = None;
                return self.fetch_next_page();
            }
            Err(error) => {
                self.finished = true;
                return Some(error);
            }
        };
        self.started = true;
        self.token = page.resumption_token.clone();
        if let Some(size) = page.complete_list_size {
            self.complete_list_size = Some(size);
        }
        if self.token.is_none() {
            self.finished = true;
        }

        // Keep the latest datestamp among same-page duplicates, skip
        // identifiers already delivered.
        let mut batch: Vec<RawRecord> = Vec::with_capacity(page.records.len());
        for record in page.records {
            if self.yielded.contains(&record.identifier) {
                continue;
            }
            match batch.iter_mut().find(|r| r.identifier == record.identifier) {
                Some(existing) => {
                    if record.datestamp >= existing.datestamp {
                        *existing = record;
                    }
                }
                None => batch.push(record),
            }
        }
        for record in batch {
            self.yielded.insert(record.identifier.clone());
            self.buffer.push_back(record);
        }
        None
    }
}

impl Iterator for HarvestStream {
    type Item = Result<RawRecord, HarvestError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(record) = self.buffer.pop_front() {
                return Some(Ok(record));
            }
            if self.finished {
                return None;
            }
            if let Some(error) = self.fetch_next_page() {
                return Some(Err(error));
            }
        }
    }
}
