//! Client for predictors served out of process.
//!
//! The wire format is newline-delimited JSON over the stdio of a spawned
//! subprocess or over a TCP socket:
//!
//! ```text
//! -> {"type":"hello","protocol":1}
//! <- {"type":"hello_ack","protocol":1,"name":"..."}
//! -> {"type":"predict","request_id":7,"classes":3,
//!     "context":{"x":[[...],...],"y":[0,2,...]},"query":{"x":[[...],...]}}
//! <- {"type":"proba","request_id":7,"p":[[...],...]}
//! <- {"type":"error","request_id":7,"message":"..."}
//! ```
//!
//! Unknown fields are ignored. Requests on one connection are sequential.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::{check_inputs, Predictor, ProbabilityMatrix};
use crate::error::{Error, Result};

pub const PROTOCOL_VERSION: u32 = 1;

fn default_timeout() -> f64 {
    300.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    /// `host:port` of a listening server.
    Tcp(String),
    /// Program and arguments; the server speaks the protocol on its stdio.
    Subprocess(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalConfig {
    pub endpoint: Endpoint,
    /// Per-request timeout in seconds.
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextPayload {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryPayload {
    pub x: Vec<Vec<f64>>,
}

/// Every message of the protocol, in either direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Hello {
        protocol: u32,
    },
    HelloAck {
        protocol: u32,
        #[serde(default)]
        name: String,
    },
    Predict {
        request_id: u64,
        classes: usize,
        context: ContextPayload,
        query: QueryPayload,
    },
    Proba {
        request_id: u64,
        p: Vec<Vec<f64>>,
    },
    Error {
        #[serde(default)]
        request_id: Option<u64>,
        message: String,
    },
}

fn rows_of(m: ArrayView2<'_, f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

pub struct ExternalPredictor {
    name: String,
    writer: Box<dyn Write + Send>,
    lines: Receiver<std::io::Result<String>>,
    child: Option<Child>,
    socket: Option<TcpStream>,
    timeout: Duration,
    next_id: u64,
    broken: bool,
}

impl ExternalPredictor {
    /// Open the connection and complete the handshake.
    pub fn connect(cfg: &ExternalConfig) -> Result<Self> {
        let timeout = Duration::from_secs_f64(cfg.timeout_secs.max(0.0));
        let mut socket = None;
        let (writer, reader, child): (Box<dyn Write + Send>, Box<dyn std::io::Read + Send>, _) =
            match &cfg.endpoint {
                Endpoint::Tcp(addr) => {
                    let stream = TcpStream::connect(addr)
                        .map_err(|e| Error::Protocol(format!("connect {addr}: {e}")))?;
                    stream.set_nodelay(true).ok();
                    let clone = || stream.try_clone().map_err(|e| Error::Protocol(e.to_string()));
                    let read_half = clone()?;
                    socket = Some(clone()?);
                    (Box::new(stream), Box::new(read_half), None)
                }
                Endpoint::Subprocess(argv) => {
                    let (program, args) = argv.split_first().ok_or_else(|| {
                        Error::Protocol("empty subprocess command".into())
                    })?;
                    let mut child = Command::new(program)
                        .args(args)
                        .stdin(Stdio::piped())
                        .stdout(Stdio::piped())
                        .spawn()
                        .map_err(|e| Error::Protocol(format!("spawn {program}: {e}")))?;
                    let stdin = child.stdin.take().expect("piped stdin");
                    let stdout = child.stdout.take().expect("piped stdout");
                    (Box::new(stdin), Box::new(stdout), Some(child))
                }
            };
        let mut predictor = Self::handshake(writer, reader, child, timeout)?;
        predictor.socket = socket;
        Ok(predictor)
    }

    /// Run the protocol over an already-open byte stream pair.
    pub fn from_streams(
        writer: Box<dyn Write + Send>,
        reader: Box<dyn std::io::Read + Send>,
        timeout: Duration,
    ) -> Result<Self> {
        Self::handshake(writer, reader, None, timeout)
    }

    fn handshake(
        writer: Box<dyn Write + Send>,
        reader: Box<dyn std::io::Read + Send>,
        child: Option<Child>,
        timeout: Duration,
    ) -> Result<Self> {
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(reader).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        let mut predictor = ExternalPredictor {
            name: String::new(),
            writer,
            lines: rx,
            child,
            socket: None,
            timeout,
            next_id: 0,
            broken: false,
        };
        predictor.send(&Message::Hello {
            protocol: PROTOCOL_VERSION,
        })?;
        match predictor.receive()? {
            Message::HelloAck { protocol, name } if protocol == PROTOCOL_VERSION => {
                predictor.name = name;
                Ok(predictor)
            }
            Message::HelloAck { protocol, .. } => Err(Error::Protocol(format!(
                "server speaks protocol {protocol}, expected {PROTOCOL_VERSION}"
            ))),
            other => Err(Error::Protocol(format!(
                "expected hello_ack, got {other:?}"
            ))),
        }
    }

    pub fn server_name(&self) -> &str {
        &self.name
    }

    fn send(&mut self, msg: &Message) -> Result<()> {
        let mut line = serde_json::to_string(msg)?;
        line.push('\n');
        let res = self
            .writer
            .write_all(line.as_bytes())
            .and_then(|_| self.writer.flush());
        res.map_err(|e| {
            self.broken = true;
            Error::Protocol(format!("write failed: {e}"))
        })
    }

    fn receive(&mut self) -> Result<Message> {
        loop {
            let line = match self.lines.recv_timeout(self.timeout) {
                Ok(Ok(line)) => line,
                Ok(Err(e)) => {
                    self.broken = true;
                    return Err(Error::Protocol(format!("read failed: {e}")));
                }
                Err(RecvTimeoutError::Timeout) => {
                    self.broken = true;
                    return Err(Error::Timeout(self.timeout));
                }
                Err(RecvTimeoutError::Disconnected) => {
                    self.broken = true;
                    return Err(Error::Protocol("server closed the connection".into()));
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            return serde_json::from_str(&line)
                .map_err(|e| Error::Protocol(format!("malformed message {line:?}: {e}")));
        }
    }
}

impl Predictor for ExternalPredictor {
    fn name(&self) -> String {
        format!("external:{}", self.name)
    }

    fn predict_proba(
        &mut self,
        context_x: ArrayView2<'_, f64>,
        context_y: &[usize],
        queries: ArrayView2<'_, f64>,
        n_classes: usize,
    ) -> Result<ProbabilityMatrix> {
        check_inputs(context_x, context_y, queries, n_classes)?;
        if self.broken {
            return Err(Error::Protocol("connection is no longer usable".into()));
        }
        let request_id = self.next_id;
        self.next_id += 1;
        self.send(&Message::Predict {
            request_id,
            classes: n_classes,
            context: ContextPayload {
                x: rows_of(context_x),
                y: context_y.to_vec(),
            },
            query: QueryPayload {
                x: rows_of(queries),
            },
        })?;
        match self.receive()? {
            Message::Proba { request_id: id, p } if id == request_id => {
                if p.len() != queries.nrows() {
                    return Err(Error::InvalidProbabilities(format!(
                        "expected {} rows, got {}",
                        queries.nrows(),
                        p.len()
                    )));
                }
                ProbabilityMatrix::from_rows(&p, n_classes)
            }
            Message::Proba { request_id: id, .. } => {
                self.broken = true;
                Err(Error::Protocol(format!(
                    "response for request {id}, expected {request_id}"
                )))
            }
            Message::Error { message, .. } => Err(Error::Protocol(format!(
                "server error on request {request_id}: {message}"
            ))),
            other => {
                self.broken = true;
                Err(Error::Protocol(format!("unexpected message {other:?}")))
            }
        }
    }
}

impl Drop for ExternalPredictor {
    fn drop(&mut self) {
        // unblocks the reader thread, which holds its own handle
        if let Some(socket) = &self.socket {
            let _ = socket.shutdown(std::net::Shutdown::Both);
        }
        if let Some(child) = self.child.as_mut() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}
