//! In-process embedding service stub.
//!
//! Serves the remote protocol on a loopback port, answering with
//! [`hash_embed`](super::hashed::hash_embed) vectors. Used by the test
//! suites and handy for trying the remote path without a real model server.

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use serde::Deserialize;

use super::hashed::hash_embed;

pub struct StubServer {
    addr: std::net::SocketAddr,
    shutdown: Arc<AtomicBool>,
    requests: Arc<AtomicUsize>,
    handle: Option<JoinHandle<()>>,
}

#[derive(Deserialize)]
struct EmbedRequest {
    #[allow(dead_code)]
    model: String,
    texts: Vec<String>,
}

impl StubServer {
    /// Start a stub on an ephemeral loopback port. The first `fail_times`
    /// requests are answered with HTTP 500.
    pub fn start(dim: usize, ngram: usize, fail_times: usize) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let shutdown = Arc::new(AtomicBool::new(false));
        let requests = Arc::new(AtomicUsize::new(0));
        let shutdown_in = shutdown.clone();
        let requests_in = requests.clone();
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if shutdown_in.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                let n = requests_in.fetch_add(1, Ordering::SeqCst);
                let _ = handle_connection(stream, dim, ngram, n < fail_times);
            }
        });
        Ok(Self { addr, shutdown, requests, handle: Some(handle) })
    }

    pub fn endpoint(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        // Wake the accept loop.
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn handle_connection(mut stream: TcpStream, dim: usize, ngram: usize, fail: bool) -> std::io::Result<()> {
    stream.set_read_timeout(Some(std::time::Duration::from_secs(5)))?;
    let mut buf = Vec::new();
    let mut chunk = [0u8; 4096];
    let body_start;
    loop {
        let n = stream.read(&mut chunk)?;
        if n == 0 {
            return Ok(());
        }
        buf.extend_from_slice(&chunk[..n]);
        if let Some(pos) = find_header_end(&buf) {
            body_start = pos;
            break;
        }
        if buf.len() > 1 << 22 {
            return Ok(());
        }
    }
    let head = String::from_utf8_lossy(&buf[..body_start]).to_string();
    let content_length = head
        .lines()
        .find_map(|l| {
            let (name, value) = l.split_once(':')?;
            name.eq_ignore_ascii_case("content-length").then(|| value.trim().parse::<usize>().ok())?
        })
        .unwrap_or(0);
    while buf.len() < body_start + content_length {
        let n = stream.read(&mut chunk)?;
        if n == 0 {
            break;
        }
        buf.extend_from_slice(&chunk[..n]);
    }

    if fail {
        return respond(&mut stream, 500, "{\"error\":\"injected failure\"}");
    }
    let body = &buf[body_start..(body_start + content_length).min(buf.len())];
    let Ok(req) = serde_json::from_slice::<EmbedRequest>(body) else {
        return respond(&mut stream, 400, "{\"error\":\"bad request\"}");
    };
    let embeddings: Vec<Vec<f64>> = req.texts.iter().map(|t| hash_embed(t, dim, ngram)).collect();
    let payload = serde_json::json!({ "dim": dim, "embeddings": embeddings }).to_string();
    respond(&mut stream, 200, &payload)
}

fn find_header_end(buf: &[u8]) -> Option<usize> {
    buf.windows(4).position(|w| w == b"\r\n\r\n").map(|p| p + 4)
}

fn respond(stream: &mut TcpStream, status: u16, body: &str) -> std::io::Result<()> {
    let reason = match status {
        200 => "OK",
        400 => "Bad Request",
        _ => "Internal Server Error",
    };
    let response = format!(
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    stream.write_all(response.as_bytes())
}
