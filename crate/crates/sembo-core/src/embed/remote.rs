//! Minimal HTTP/1.1 client for a remote embedding service.
//!
//! Protocol: `POST {endpoint}/v1/embed` with JSON body
//! `{"model": string, "texts": [string]}`; the service answers
//! `{"dim": int, "embeddings": [[number]]}`. Non-2xx statuses are failures.
//! Plain http only; embedding services are expected to sit on localhost or
//! behind a local proxy.

use std::io::{Read, Write};
use std::net::TcpStream;
use std::time::Duration;

use serde::Deserialize;

use crate::error::EmbedError;

const MAX_ATTEMPTS: u32 = 3;
const BACKOFF_BASE: Duration = Duration::from_millis(50);

#[derive(Debug, Clone)]
pub struct RemoteClient {
    host: String,
    path_prefix: String,
    model: String,
    timeout: Duration,
}

#[derive(Deserialize)]
struct EmbedResponse {
    dim: usize,
    embeddings: Vec<Vec<f64>>,
}

impl RemoteClient {
    pub fn new(endpoint: &str, model: &str, timeout: Duration) -> Result<Self, EmbedError> {
        if timeout.is_zero() {
            return Err(EmbedError::Config("timeout must be positive".into()));
        }
        let rest = endpoint.strip_prefix("http://").ok_or_else(|| {
            EmbedError::Config(format!(
                "endpoint {endpoint:?} must start with http:// (https is not supported)"
            ))
        })?;
        let (host, path) = match rest.find('/') {
            Some(i) => (&rest[..i], rest[i..].trim_end_matches('/')),
            None => (rest, ""),
        };
        if host.is_empty() {
            return Err(EmbedError::Config(format!("endpoint {endpoint:?} has no host")));
        }
        Ok(Self {
            host: host.to_string(),
            path_prefix: path.to_string(),
            model: model.to_string(),
            timeout,
        })
    }

    /// Embed a batch, preserving order. Transport errors and non-2xx
    /// responses are retried with exponential backoff, up to 3 attempts.
    pub fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbedError> {
        if texts.is_empty() || texts.iter().any(|t| t.is_empty()) {
            return Err(EmbedError::EmptyBatch);
        }
        let body = serde_json::json!({ "model": self.model, "texts": texts }).to_string();

        let mut last_err = None;
        for attempt in 0..MAX_ATTEMPTS {
            if attempt > 0 {
                std::thread::sleep(BACKOFF_BASE * 2u32.pow(attempt - 1));
            }
            match self.post(&body) {
                Ok((status, resp_body)) if (200..300).contains(&status) => {
                    return self.parse(texts.len(), &resp_body);
                }
                Ok((status, resp_body)) => {
                    let mut excerpt: String = resp_body.chars().take(200).collect();
                    if excerpt.is_empty() {
                        excerpt = "<empty body>".into();
                    }
                    last_err = Some(EmbedError::Remote { status, body_excerpt: excerpt });
                }
                Err(e) => last_err = Some(e),
            }
        }
        Err(last_err.expect("at least one attempt ran"))
    }

    fn parse(&self, expected: usize, body: &str) -> Result<Vec<Vec<f64>>, EmbedError> {
        let resp: EmbedResponse = serde_json::from_str(body)
            .map_err(|e| EmbedError::Protocol(format!("response is not valid JSON: {e}")))?;
        if resp.embeddings.len() != expected {
            return Err(EmbedError::Protocol(format!(
                "expected {expected} embeddings, got {}",
                resp.embeddings.len()
            )));
        }
        for (i, e) in resp.embeddings.iter().enumerate() {
            if e.len() != resp.dim {
                return Err(EmbedError::Protocol(format!(
                    "embedding {i} has dimension {} but the batch reports dim {}",
                    e.len(),
                    resp.dim
                )));
            }
            if e.iter().any(|v| !v.is_finite()) {
                return Err(EmbedError::Protocol(format!("embedding {i} has non-finite entries")));
            }
        }
        Ok(resp.embeddings)
    }

    fn post(&self, body: &str) -> Result<(u16, String), EmbedError> {
        let addr = self
            .host
            .parse::<std::net::SocketAddr>()
            .map(|a| vec![a])
            .or_else(|_| {
                std::net::ToSocketAddrs::to_socket_addrs(&self.host).map(|it| it.collect())
            })
            .map_err(|e| EmbedError::Protocol(format!("cannot resolve {}: {e}", self.host)))?;
        let Some(addr) = addr.first().copied() else {
            return Err(EmbedError::Protocol(format!("no address for {}", self.host)));
        };
        let mut stream = TcpStream::connect_timeout(&addr, self.timeout)
            .map_err(|e| map_timeout(e, self.timeout))?;
        stream.set_read_timeout(Some(self.timeout))?;
        stream.set_write_timeout(Some(self.timeout))?;

        let request = format!(
            "POST {}/v1/embed HTTP/1.1\r\nHost: {}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
            self.path_prefix,
            self.host,
            body.len(),
            body
        );
        stream.write_all(request.as_bytes()).map_err(|e| map_timeout(e, self.timeout))?;

        let mut raw = Vec::new();
        stream.read_to_end(&mut raw).map_err(|e| map_timeout(e, self.timeout))?;
        parse_response(&raw)
    }
}

fn map_timeout(e: std::io::Error, timeout: Duration) -> EmbedError {
    match e.kind() {
        std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock => EmbedError::Timeout(timeout),
        _ => EmbedError::Protocol(format!("transport: {e}")),
    }
}

fn parse_response(raw: &[u8]) -> Result<(u16, String), EmbedError> {
    let text = String::from_utf8_lossy(raw);
    let Some((head, body)) = text.split_once("\r\n\r\n") else {
        return Err(EmbedError::Protocol("malformed HTTP response".into()));
    };
    let status_line = head.lines().next().unwrap_or("");
    let mut parts = status_line.split_whitespace();
    let _version = parts.next();
    let status: u16 = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| EmbedError::Protocol(format!("bad status line {status_line:?}")))?;
    let content_length = head
        .lines()
        .skip(1)
        .find_map(|l| {
            let (name, value) = l.split_once(':')?;
            name.eq_ignore_ascii_case("content-length").then(|| value.trim().parse::<usize>().ok())?
        });
    let body = match content_length {
        Some(n) if n <= body.len() => body[..n].to_string(),
        _ => body.to_string(),
    };
    Ok((status, body))
}
