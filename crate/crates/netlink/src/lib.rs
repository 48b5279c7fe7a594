//! Networked feedback loop: the transmitter (power controller, gain medium)
//! and the receiver (PV panel, DC-DC, battery, power monitor) as two
//! processes joined by a length-prefixed JSON protocol over TCP.
//!
//! Message flow on one connection:
//!
//! ```text
//! receiver                      transmitter
//!   HELLO        ------------->
//!                <-------------  HELLO
//!   FEEDBACK     ------------->
//!                <-------------  BEAM (in_reply_to = FEEDBACK seq)
//!   ...
//!   TERMINATE    ------------->
//! ```
//!
//! Either side may send FAULT (codes in [`fault_code`]) and close.

pub mod error;
pub mod frame;
pub mod receiver;
pub mod stream;
pub mod transmitter;

pub use error::{fault_code, NetError, ProtocolError};
pub use frame::{decode_frame, encode_frame, Decoded, WireBody, WireMessage, MAX_PAYLOAD};
pub use receiver::{run_receiver, RemoteTransmitter};
pub use stream::{write_message, FrameReader};
pub use transmitter::{run_transmitter, TransmitterServer, TransmitterSummary};
