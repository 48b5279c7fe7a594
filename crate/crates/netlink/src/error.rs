use thiserror::Error;

/// Codes carried by FAULT frames.
pub mod fault_code {
    /// Payload is not valid JSON or misses a required field.
    pub const MALFORMED: u16 = 1;
    /// Length prefix exceeds the payload cap.
    pub const OVERSIZED: u16 = 2;
    pub const UNKNOWN_KIND: u16 = 3;
    /// A sequence number did not strictly increase.
    pub const SEQUENCE: u16 = 4;
    /// A valid message arrived in the wrong direction or state.
    pub const UNEXPECTED_KIND: u16 = 5;
    /// No BEAM within the grace period.
    pub const TIMEOUT: u16 = 6;
    /// The controller rejected a command.
    pub const MODEL: u16 = 7;
    /// The peer closed the connection before TERMINATE.
    pub const DISCONNECTED: u16 = 8;
    /// The receiver's simulation faulted (for example, unreachable power).
    pub const SIMULATION: u16 = 9;
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("malformed payload: {0}")]
    Malformed(String),
    #[error("frame length {0} exceeds the 65536-byte cap")]
    Oversized(usize),
    #[error("unknown message kind `{0}`")]
    UnknownKind(String),
    #[error("cannot encode message: {0}")]
    Encode(String),
    #[error("sequence number {got} does not follow {last}")]
    Sequence { last: u64, got: u64 },
    #[error("unexpected {0} message")]
    Unexpected(&'static str),
}

impl ProtocolError {
    pub fn fault_code(&self) -> u16 {
        match self {
            ProtocolError::Malformed(_) | ProtocolError::Encode(_) => fault_code::MALFORMED,
            ProtocolError::Oversized(_) => fault_code::OVERSIZED,
            ProtocolError::UnknownKind(_) => fault_code::UNKNOWN_KIND,
            ProtocolError::Sequence { .. } => fault_code::SEQUENCE,
            ProtocolError::Unexpected(_) => fault_code::UNEXPECTED_KIND,
        }
    }
}

#[derive(Debug, Error)]
pub enum NetError {
    #[error("cannot connect to {endpoint}: {source}")]
    Connect {
        endpoint: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot listen on {endpoint}: {source}")]
    Bind {
        endpoint: String,
        #[source]
        source: std::io::Error,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("protocol error: {0}")]
    Protocol(#[from] ProtocolError),
    #[error("peer sent FAULT {code}: {text}")]
    PeerFault { code: u16, text: String },
    #[error("peer disconnected before TERMINATE")]
    Disconnected,
    #[error("handshake failed: {0}")]
    Handshake(String),
}
