//! In-process mock OAI-PMH endpoint for tests.
//!
//! Serves `Identify` and `ListRecords` over real HTTP on a loopback port
//! with configurable failure behavior: paged responses with resumption
//! tokens, a one-shot expiring token, a one-shot 503 with Retry-After,
//! permanent 500s, or a non-XML body. Requests are handled sequentially
//! on one thread, matching the protocol's stateful-token model.

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use chrono::{TimeZone, Utc};
use url::Url;

use termsuggest_core::metadata::{escape_xml, format_datestamp, RawRecord};
use termsuggest_core::repo::EndpointConfig;

use crate::xml::record_xml;

pub struct MockOaiServerBuilder {
    records: Vec<RawRecord>,
    page_size: usize,
    name: String,
    fail_with_500: bool,
    serve_html: bool,
    expire_first_token: bool,
    retry_after_once: Option<u64>,
    page_delay: Duration,
}

impl Default for MockOaiServerBuilder {
    fn default() -> Self {
        MockOaiServerBuilder {
            records: Vec::new(),
            page_size: 2,
            name: "TestRepo".to_string(),
            fail_with_500: false,
            serve_html: false,
            expire_first_token: false,
            retry_after_once: None,
            page_delay: Duration::ZERO,
        }
    }
}

impl MockOaiServerBuilder {
    pub fn records(mut self, records: Vec<RawRecord>) -> Self {
        self.records = records;
        self
    }

    pub fn page_size(mut self, page_size: usize) -> Self {
        self.page_size = page_size.max(1);
        self
    }

    pub fn name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Answer every request with HTTP 500.
    pub fn failing(mut self) -> Self {
        self.fail_with_500 = true;
        self
    }

    /// Answer every request with an HTML body instead of XML.
    pub fn html(mut self) -> Self {
        self.serve_html = true;
        self
    }

    /// Reject the first presented resumption token with
    /// `badResumptionToken`, then behave normally.
    pub fn expire_first_token(mut self) -> Self {
        self.expire_first_token = true;
        self
    }

    /// Answer the first `ListRecords` request with 503 and the given
    /// Retry-After, then behave normally.
    pub fn retry_after_once(mut self, seconds: u64) -> Self {
        self.retry_after_once = Some(seconds);
        self
    }

    /// Delay every `ListRecords` response; used to keep jobs observably
    /// in flight.
    pub fn page_delay(mut self, delay: Duration) -> Self {
        self.page_delay = delay;
        self
    }

    pub fn build(self) -> MockOaiServer {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind loopback listener");
        listener
            .set_nonblocking(true)
            .expect("nonblocking listener");
        let addr = listener.local_addr().expect("local addr");
        let state = Arc::new(ServerState {
            stop: AtomicBool::new(false),
            records: self.records,
            page_size: self.page_size,
            name: self.name,
            fail_with_500: AtomicBool::new(self.fail_with_500),
            serve_html: self.serve_html,
            expire_next_token: AtomicBool::new(self.expire_first_token),
            retry_after_once: Mutex::new(self.retry_after_once),
            page_delay: self.page_delay,
            log: Mutex::new(Vec::new()),
            base_url: format!("http://{addr}/oai"),
        });
        let thread_state = state.clone();
        let handle = std::thread::spawn(move || serve(listener, thread_state));
        MockOaiServer {
            addr,
            state,
            handle: Some(handle),
        }
    }
}

struct ServerState {
    stop: AtomicBool,
    records: Vec<RawRecord>,
    page_size: usize,
    name: String,
    fail_with_500: AtomicBool,
    serve_html: bool,
    expire_next_token: AtomicBool,
    retry_after_once: Mutex<Option<u64>>,
    page_delay: Duration,
    log: Mutex<Vec<String>>,
    base_url: String,
}

pub struct MockOaiServer {
    addr: SocketAddr,
    state: Arc<ServerState>,
    handle: Option<JoinHandle<()>>,
}

impl MockOaiServer {
    pub fn builder() -> MockOaiServerBuilder {
        MockOaiServerBuilder::default()
    }

    /// A server preloaded with records, two per page.
    pub fn serving(records: Vec<RawRecord>) -> Self {
        Self::builder().records(records).build()
    }

    pub fn url(&self) -> Url {
        Url::parse(&format!("http://{}/oai", self.addr)).expect("loopback url")
    }

    /// Endpoint configuration pointed at this server with test-friendly
    /// retry settings.
    pub fn endpoint_config(&self) -> EndpointConfig {
        EndpointConfig {
            max_retries: 2,
            backoff_base: Duration::from_millis(1),
            ..EndpointConfig::new(self.url())
        }
    }

    /// Every query string received so far.
    pub fn request_log(&self) -> Vec<String> {
        self.state.log.lock().unwrap().clone()
    }

    pub fn requests_containing(&self, needle: &str) -> usize {
        self.request_log()
            .iter()
            .filter(|line| line.contains(needle))
            .count()
    }

    /// Toggle permanent-failure mode at runtime.
    pub fn set_failing(&self, failing: bool) {
        self.state.fail_with_500.store(failing, Ordering::SeqCst);
    }
}

impl Drop for MockOaiServer {
    fn drop(&mut self) {
        self.state.stop.store(true, Ordering::SeqCst);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn serve(listener: TcpListener, state: Arc<ServerState>) {
    while !state.stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, _)) => {
                let _ = handle_connection(stream, &state);
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                std::thread::sleep(Duration::from_millis(2));
            }
            Err(_) => break,
        }
    }
}

fn handle_connection(stream: TcpStream, state: &Arc<ServerState>) -> std::io::Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_read_timeout(Some(Duration::from_secs(5)))?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    // Drain headers; requests are bodyless GETs.
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 || line == "\r\n" || line == "\n" {
            break;
        }
    }
    let query = request_line
        .split_whitespace()
        .nth(1)
        .and_then(|path| path.split_once('?').map(|(_, q)| q.to_string()))
        .unwrap_or_default();
    state.log.lock().unwrap().push(query.clone());
    let params: Vec<(String, String)> = query
        .split('&')
        .filter(|kv| !kv.is_empty())
        .map(|kv| match kv.split_once('=') {
            Some((k, v)) => (percent_decode(k), percent_decode(v)),
            None => (percent_decode(kv), String::new()),
        })
        .collect();
    let param = |name: &str| {
        params
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    };

    let mut stream = stream;
    if state.fail_with_500.load(Ordering::SeqCst) {
        return write_response(&mut stream, "500 Internal Server Error", "text/plain", "boom", &[]);
    }
    if state.serve_html {
        return write_response(
            &mut stream,
            "200 OK",
            "text/html",
            "<!DOCTYPE html><html><body><p>not an OAI repository</body></html>",
            &[],
        );
    }
    match param("verb") {
        Some("Identify") => {
            let body = identify_xml(state);
            write_response(&mut stream, "200 OK", "text/xml", &body, &[])
        }
        Some("ListRecords") => {
            if !state.page_delay.is_zero() {
                std::thread::sleep(state.page_delay);
            }
            if let Some(seconds) = state.retry_after_once.lock().unwrap().take() {
                let header = format!("Retry-After: {seconds}");
                return write_response(
                    &mut stream,
                    "503 Service Unavailable",
                    "text/plain",
                    "try later",
                    &[&header],
                );
            }
            let body = list_records_xml(state, param("resumptionToken"));
            write_response(&mut stream, "200 OK", "text/xml", &body, &[])
        }
        _ => {
            let body = error_xml(state, "badVerb", "unsupported verb");
            write_response(&mut stream, "200 OK", "text/xml", &body, &[])
        }
    }
}

fn write_response(
    stream: &mut TcpStream,
    status: &str,
    content_type: &str,
    body: &str,
    extra_headers: &[&str],
) -> std::io::Result<()> {
    let mut response = format!(
        "HTTP/1.1 {status}\r\nContent-Type: {content_type}\r\nContent-Length: {}\r\nConnection: close\r\n",
        body.len()
    );
    for header in extra_headers {
        response.push_str(header);
        response.push_str("\r\n");
    }
    response.push_str("\r\n");
    response.push_str(body);
    stream.write_all(response.as_bytes())?;
    stream.flush()
}

fn envelope(state: &ServerState, verb: &str, content: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <OAI-PMH xmlns=\"http://www.openarchives.org/OAI/2.0/\">\n\
         <responseDate>{}</responseDate>\n\
         <request verb=\"{verb}\">{}</request>\n\
         {content}\n\
         </OAI-PMH>\n",
        format_datestamp(&Utc::now()),
        escape_xml(&state.base_url),
    )
}

fn error_xml(state: &ServerState, code: &str, message: &str) -> String {
    envelope(
        state,
        "ListRecords",
        &format!("<error code=\"{code}\">{}</error>", escape_xml(message)),
    )
}

fn identify_xml(state: &ServerState) -> String {
    let earliest = state
        .records
        .iter()
        .map(|r| r.datestamp)
        .min()
        .unwrap_or_else(|| Utc.with_ymd_and_hms(2000, 1, 1, 0, 0, 0).unwrap());
    let content = format!(
        "<Identify>\n\
         <repositoryName>{}</repositoryName>\n\
         <baseURL>{}</baseURL>\n\
         <protocolVersion>2.0</protocolVersion>\n\
         <earliestDatestamp>{}</earliestDatestamp>\n\
         <deletedRecord>transient</deletedRecord>\n\
         <granularity>YYYY-MM-DDThh:mm:ssZ</granularity>\n\
         </Identify>",
        escape_xml(&state.name),
        escape_xml(&state.base_url),
        format_datestamp(&earliest),
    );
    envelope(state, "Identify", &content)
}

fn list_records_xml(state: &ServerState, token: Option<&str>) -> String {
    let cursor = match token {
        Some(token) => {
            if state.expire_next_token.swap(false, Ordering::SeqCst) {
                return error_xml(state, "badResumptionToken", "token expired");
            }
            match token.strip_prefix('c').and_then(|t| t.parse::<usize>().ok()) {
                Some(cursor) if cursor < state.records.len() => cursor,
                _ => return error_xml(state, "badResumptionToken", "unknown token"),
            }
        }
        None => 0,
    };
    if state.records.is_empty() {
        return error_xml(state, "noRecordsMatch", "the selection is empty");
    }
    let end = (cursor + state.page_size).min(state.records.len());
    let mut content = String::from("<ListRecords>\n");
    for record in &state.records[cursor..end] {
        content.push_str(&record_xml(record));
    }
    if end < state.records.len() {
        content.push_str(&format!(
            "<resumptionToken completeListSize=\"{}\">c{end}</resumptionToken>\n",
            state.records.len()
        ));
    }
    content.push_str("</ListRecords>");
    envelope(state, "ListRecords", &content)
}

fn percent_decode(text: &str) -> String {
    let bytes = text.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'%' if i + 2 < bytes.len() => {
                let hex = std::str::from_utf8(&bytes[i + 1..i + 3]).ok();
                match hex.and_then(|h| u8::from_str_radix(h, 16).ok()) {
                    Some(byte) => {
                        out.push(byte);
                        i += 3;
                    }
                    None => {
                        out.push(b'%');
                        i += 1;
                    }
                }
            }
            b'+' => {
                out.push(b' ');
                i += 1;
            }
            byte => {
                out.push(byte);
                i += 1;
            }
        }
    }
    String::from_utf8_lossy(&out).into_owned()
}
