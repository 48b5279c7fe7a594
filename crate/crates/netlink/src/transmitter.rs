//! Transmitter process: power controller and gain medium behind a TCP listener.
//!
//! Purely reactive. Accepts one receiver, answers each FEEDBACK with a BEAM,
//! and keeps its last beam between feedbacks.

use std::net::{SocketAddr, TcpListener, TcpStream};

use adlc_core::{transmitter_respond, BeamCommand, FeedbackMessage, SimConfig};
use log::{info, warn};

use crate::error::{fault_code, NetError, ProtocolError};
use crate::frame::{WireBody, WireMessage};
use crate::stream::{write_message, FrameReader};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmitterSummary {
    pub feedbacks_handled: u64,
    pub last_command: BeamCommand,
}

pub struct TransmitterServer {
    listener: TcpListener,
    config: SimConfig,
}

impl TransmitterServer {
    pub fn bind(endpoint: &str, config: SimConfig) -> Result<Self, NetError> {
        let listener = TcpListener::bind(endpoint).map_err(|source| NetError::Bind {
            endpoint: endpoint.to_string(),
            source,
        })?;
        Ok(Self { listener, config })
    }

    pub fn local_addr(&self) -> std::io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Serves a single receiver connection to completion.
    pub fn serve_one(self) -> Result<TransmitterSummary, NetError> {
        let (stream, peer) = self.listener.accept()?;
        info!("receiver connected from {peer}");
        Session::new(stream, self.config)?.run()
    }
}

/// Binds `endpoint`, serves one receiver, and returns when it terminates.
pub fn run_transmitter(endpoint: &str, config: SimConfig) -> Result<TransmitterSummary, NetError> {
    TransmitterServer::bind(endpoint, config)?.serve_one()
}

struct Session {
    reader: FrameReader<TcpStream>,
    writer: TcpStream,
    config: SimConfig,
    out_seq: u64,
    last_in_seq: Option<u64>,
    greeted: bool,
    summary: TransmitterSummary,
}

impl Session {
    fn new(stream: TcpStream, config: SimConfig) -> Result<Self, NetError> {
        stream.set_nodelay(true)?;
        let writer = stream.try_clone()?;
        Ok(Self {
            reader: FrameReader::new(stream),
            writer,
            config,
            out_seq: 0,
            last_in_seq: None,
            greeted: false,
            summary: TransmitterSummary {
                feedbacks_handled: 0,
                last_command: BeamCommand::idle(&config.laser),
            },
        })
    }

    fn send(&mut self, body: WireBody) -> Result<(), NetError> {
        self.out_seq += 1;
        write_message(&mut self.writer, &WireMessage::new(self.out_seq, body))
    }

    /// Sends FAULT, closes, and returns the error.
    fn fail(&mut self, err: ProtocolError) -> NetError {
        warn!("protocol fault: {err}");
        let _ = self.send(WireBody::Fault { code: err.fault_code(), text: err.to_string() });
        let _ = self.writer.shutdown(std::net::Shutdown::Both);
        NetError::Protocol(err)
    }

    fn run(mut self) -> Result<TransmitterSummary, NetError> {
        loop {
            let msg = match self.reader.read_message() {
                Ok(Some(msg)) => msg,
                Ok(None) | Err(NetError::Disconnected) => {
                    warn!("receiver disconnected without TERMINATE");
                    return Err(NetError::Disconnected);
                }
                Err(NetError::Protocol(e)) => return Err(self.fail(e)),
                Err(e) => return Err(e),
            };
            if let Some(last) = self.last_in_seq {
                if msg.seq <= last {
                    return Err(self.fail(ProtocolError::Sequence { last, got: msg.seq }));
                }
            }
            self.last_in_seq = Some(msg.seq);

            match msg.body {
                WireBody::Hello { .. } if !self.greeted => {
                    self.greeted = true;
                    self.send(WireBody::Hello { role: "transmitter".into() })?;
                }
                _ if !self.greeted => return Err(self.fail(ProtocolError::Unexpected("pre-handshake"))),
                WireBody::Feedback { desired_power_density_w_per_cm2, timestamp_s } => {
                    let feedback =
                        FeedbackMessage::from_density(msg.seq, desired_power_density_w_per_cm2, timestamp_s, &self.config.beam);
                    let command = match transmitter_respond(&self.config.laser, &feedback) {
                        Ok(c) => c,
                        Err(e) => {
                            let _ = self.send(WireBody::Fault { code: fault_code::MODEL, text: e.to_string() });
                            return Err(NetError::PeerFault { code: fault_code::MODEL, text: e.to_string() });
                        }
                    };
                    self.summary.feedbacks_handled += 1;
                    self.summary.last_command = command;
                    self.send(WireBody::Beam {
                        in_reply_to: msg.seq,
                        laser_power_w: command.laser_power_w,
                        stimulation_current_a: command.stimulation_current_a,
                    })?;
                }
                WireBody::Terminate => {
                    info!("receiver terminated after {} feedback messages", self.summary.feedbacks_handled);
                    return Ok(self.summary);
                }
                WireBody::Fault { code, text } => {
                    warn!("receiver reported fault {code}: {text}");
                    return Err(NetError::PeerFault { code, text });
                }
                WireBody::Hello { .. } => return Err(self.fail(ProtocolError::Unexpected("HELLO"))),
                WireBody::Beam { .. } => return Err(self.fail(ProtocolError::Unexpected("BEAM"))),
            }
        }
    }
}
