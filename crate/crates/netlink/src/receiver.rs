//! Receiver process: owns the battery and the simulation clock, and sources
//! its beam from a remote transmitter.

use std::net::TcpStream;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread::JoinHandle;
use std::time::Duration;

use adlc_core::{BeamCommand, FeedbackMessage, SimConfig, SimFault, Simulation, Trace, Transmitter};
use log::{debug, warn};

use crate::error::{fault_code, NetError, ProtocolError};
use crate::frame::{WireBody, WireMessage};
use crate::stream::{write_message, FrameReader};

/// [`Transmitter`] backed by a TCP connection.
///
/// A reader thread decodes incoming frames into a channel; every protocol
/// decision is made on the simulation thread.
pub struct RemoteTransmitter {
    writer: TcpStream,
    inbox: Receiver<Result<WireMessage, NetError>>,
    reader: Option<JoinHandle<()>>,
    out_seq: u64,
    last_in_seq: u64,
    timeout: Duration,
    grace_steps: u32,
    missed: u32,
}

impl RemoteTransmitter {
    /// Connects and performs the HELLO exchange.
    pub fn connect(endpoint: &str, config: &SimConfig) -> Result<Self, NetError> {
        let stream = TcpStream::connect(endpoint).map_err(|source| NetError::Connect {
            endpoint: endpoint.to_string(),
            source,
        })?;
        stream.set_nodelay(true)?;
        let read_half = stream.try_clone()?;
        let (tx, inbox) = mpsc::channel();
        let reader = std::thread::spawn(move || {
            let mut frames = FrameReader::new(read_half);
            loop {
                let item = match frames.read_message() {
                    Ok(Some(msg)) => Ok(msg),
                    Ok(None) => Err(NetError::Disconnected),
                    Err(e) => Err(e),
                };
                let stop = item.is_err();
                if tx.send(item).is_err() || stop {
                    break;
                }
            }
        });
        let mut remote = Self {
            writer: stream,
            inbox,
            reader: Some(reader),
            out_seq: 0,
            last_in_seq: 0,
            timeout: Duration::from_millis(config.network.beam_timeout_ms),
            grace_steps: config.network.grace_steps,
            missed: 0,
        };
        remote.handshake()?;
        Ok(remote)
    }

    fn handshake(&mut self) -> Result<(), NetError> {
        self.send(WireBody::Hello { role: "receiver".into() })?;
        match self.inbox.recv_timeout(self.timeout) {
            Ok(Ok(msg)) => match msg.body {
                WireBody::Hello { .. } => {
                    self.last_in_seq = msg.seq;
                    Ok(())
                }
                WireBody::Fault { code, text } => Err(NetError::PeerFault { code, text }),
                _ => Err(NetError::Handshake(format!("expected HELLO, got {}", msg.kind()))),
            },
            Ok(Err(e)) => Err(e),
            Err(_) => Err(NetError::Handshake("no HELLO from transmitter".into())),
        }
    }

    fn send(&mut self, body: WireBody) -> Result<(), NetError> {
        self.out_seq += 1;
        write_message(&mut self.writer, &WireMessage::new(self.out_seq, body))
    }

    fn link_fault(&mut self, code: u16, message: String, time_s: f64, notify_peer: bool) -> SimFault {
        warn!("link fault {code}: {message}");
        if notify_peer {
            let _ = self.send(WireBody::Fault { code, text: message.clone() });
        }
        SimFault::Link { time_s, code, message }
    }

    fn protocol_fault(&mut self, err: ProtocolError, time_s: f64) -> SimFault {
        self.link_fault(err.fault_code(), err.to_string(), time_s, true)
    }
}

impl Transmitter for RemoteTransmitter {
    fn command(&mut self, msg: &FeedbackMessage, time_s: f64) -> Result<Option<BeamCommand>, SimFault> {
        let sent = self.out_seq + 1;
        if let Err(e) = self.send(WireBody::Feedback {
            desired_power_density_w_per_cm2: msg.desired_power_density_w_per_cm2,
            timestamp_s: msg.timestamp_s,
        }) {
            return Err(self.link_fault(fault_code::DISCONNECTED, e.to_string(), time_s, false));
        }

        loop {
            let incoming = match self.inbox.recv_timeout(self.timeout) {
                Ok(item) => item,
                Err(RecvTimeoutError::Timeout) => {
                    self.missed += 1;
                    if self.missed > self.grace_steps {
                        let text = format!("no BEAM for {} consecutive steps", self.missed);
                        return Err(self.link_fault(fault_code::TIMEOUT, text, time_s, true));
                    }
                    debug!("BEAM for feedback {sent} late; holding previous beam");
                    return Ok(None);
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(self.link_fault(fault_code::DISCONNECTED, "reader stopped".into(), time_s, false));
                }
            };
            let reply = match incoming {
                Ok(reply) => reply,
                Err(NetError::Protocol(e)) => return Err(self.protocol_fault(e, time_s)),
                Err(e) => return Err(self.link_fault(fault_code::DISCONNECTED, e.to_string(), time_s, false)),
            };
            if reply.seq <= self.last_in_seq {
                let err = ProtocolError::Sequence { last: self.last_in_seq, got: reply.seq };
                return Err(self.protocol_fault(err, time_s));
            }
            self.last_in_seq = reply.seq;
            match reply.body {
                WireBody::Beam { in_reply_to, laser_power_w, stimulation_current_a } => {
                    if in_reply_to < sent {
                        // Late answer to an earlier feedback; keep waiting for ours.
                        continue;
                    }
                    self.missed = 0;
                    return Ok(Some(BeamCommand { stimulation_current_a, laser_power_w }));
                }
                WireBody::Fault { code, text } => return Err(self.link_fault(code, text, time_s, false)),
                _ => return Err(self.protocol_fault(ProtocolError::Unexpected(reply.kind()), time_s)),
            }
        }
    }

    fn finish(&mut self, trace: &Trace) {
        match &trace.fault {
            None => {
                if let Err(e) = self.send(WireBody::Terminate) {
                    warn!("could not send TERMINATE: {e}");
                }
            }
            Some(SimFault::Link { .. }) => {}
            Some(other) => {
                let _ = self.send(WireBody::Fault { code: fault_code::SIMULATION, text: other.to_string() });
            }
        }
        let _ = self.writer.shutdown(std::net::Shutdown::Both);
        if let Some(handle) = self.reader.take() {
            let _ = handle.join();
        }
    }
}

/// Connects to a transmitter and runs the closed loop with the remote beam.
pub fn run_receiver(endpoint: &str, config: &SimConfig) -> Result<Trace, NetError> {
    config.validate().map_err(|e| NetError::Handshake(e.to_string()))?;
    let remote = RemoteTransmitter::connect(endpoint, config)?;
    let sim = Simulation::new(*config, remote).map_err(|e| NetError::Handshake(e.to_string()))?;
    Ok(sim.run())
}
