//! Length-prefixed JSON frames.
//!
//! Wire layout: a 4-byte little-endian payload length, then the payload, a
//! UTF-8 JSON object with lexicographically sorted keys. Payloads are capped
//! at [`MAX_PAYLOAD`] bytes.

use std::collections::BTreeMap;

use serde_json::{Number, Value};

use crate::error::ProtocolError;

pub const MAX_PAYLOAD: usize = 65_536;
pub const PREFIX_LEN: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum WireBody {
    /// Opening handshake; `role` is "receiver" or "transmitter".
    Hello { role: String },
    /// Receiver -> transmitter.
    Feedback {
        desired_power_density_w_per_cm2: f64,
        timestamp_s: f64,
    },
    /// Transmitter -> receiver, answering the FEEDBACK with seq `in_reply_to`.
    Beam {
        in_reply_to: u64,
        laser_power_w: f64,
        stimulation_current_a: f64,
    },
    Fault { code: u16, text: String },
    Terminate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WireMessage {
    pub seq: u64,
    pub body: WireBody,
}

impl WireMessage {
    pub fn new(seq: u64, body: WireBody) -> Self {
        Self { seq, body }
    }

    pub fn kind(&self) -> &'static str {
        match self.body {
            WireBody::Hello { .. } => "HELLO",
            WireBody::Feedback { .. } => "FEEDBACK",
            WireBody::Beam { .. } => "BEAM",
            WireBody::Fault { .. } => "FAULT",
            WireBody::Terminate => "TERMINATE",
        }
    }

    fn to_json(&self) -> Result<String, ProtocolError> {
        let mut map: BTreeMap<&'static str, Value> = BTreeMap::new();
        map.insert("kind", Value::from(self.kind()));
        map.insert("seq", Value::from(self.seq));
        match &self.body {
            WireBody::Hello { role } => {
                map.insert("role", Value::from(role.as_str()));
            }
            WireBody::Feedback { desired_power_density_w_per_cm2, timestamp_s } => {
                map.insert("desired_power_density_w_per_cm2", finite(*desired_power_density_w_per_cm2)?);
                map.insert("timestamp_s", finite(*timestamp_s)?);
            }
            WireBody::Beam { in_reply_to, laser_power_w, stimulation_current_a } => {
                map.insert("in_reply_to", Value::from(*in_reply_to));
                map.insert("laser_power_w", finite(*laser_power_w)?);
                map.insert("stimulation_current_a", finite(*stimulation_current_a)?);
            }
            WireBody::Fault { code, text } => {
                map.insert("code", Value::from(*code));
                map.insert("text", Value::from(text.as_str()));
            }
            WireBody::Terminate => {}
        }
        Ok(serde_json::to_string(&map).expect("map of JSON values serializes"))
    }

    fn from_json(payload: &[u8]) -> Result<Self, ProtocolError> {
        let value: Value = serde_json::from_slice(payload).map_err(|e| ProtocolError::Malformed(e.to_string()))?;
        let Value::Object(mut obj) = value else {
            return Err(ProtocolError::Malformed("payload is not a JSON object".into()));
        };
        let kind = match obj.remove("kind") {
            Some(Value::String(s)) => s,
            _ => return Err(ProtocolError::Malformed("missing string field `kind`".into())),
        };
        let seq = take_u64(&mut obj, "seq")?;
        let body = match kind.as_str() {
            "HELLO" => WireBody::Hello { role: take_string(&mut obj, "role")? },
            "FEEDBACK" => WireBody::Feedback {
                desired_power_density_w_per_cm2: take_f64(&mut obj, "desired_power_density_w_per_cm2")?,
                timestamp_s: take_f64(&mut obj, "timestamp_s")?,
            },
            "BEAM" => WireBody::Beam {
                in_reply_to: take_u64(&mut obj, "in_reply_to")?,
                laser_power_w: take_f64(&mut obj, "laser_power_w")?,
                stimulation_current_a: take_f64(&mut obj, "stimulation_current_a")?,
            },
            "FAULT" => {
                let code = take_u64(&mut obj, "code")?;
                WireBody::Fault {
                    code: u16::try_from(code).map_err(|_| ProtocolError::Malformed("fault code exceeds u16".into()))?,
                    text: take_string(&mut obj, "text")?,
                }
            }
            "TERMINATE" => WireBody::Terminate,
            _ => return Err(ProtocolError::UnknownKind(kind)),
        };
        if let Some(extra) = obj.keys().next() {
            return Err(ProtocolError::Malformed(format!("unexpected field `{extra}` in {kind}")));
        }
        Ok(Self { seq, body })
    }
}

fn finite(x: f64) -> Result<Value, ProtocolError> {
    Number::from_f64(x)
        .map(Value::Number)
        .ok_or_else(|| ProtocolError::Encode(format!("non-finite number {x}")))
}

fn take_u64(obj: &mut serde_json::Map<String, Value>, key: &str) -> Result<u64, ProtocolError> {
    obj.remove(key)
        .and_then(|v| v.as_u64())
        .ok_or_else(|| ProtocolError::Malformed(format!("missing unsigned integer field `{key}`")))
}

fn take_f64(obj: &mut serde_json::Map<String, Value>, key: &str) -> Result<f64, ProtocolError> {
    obj.remove(key)
        .and_then(|v| v.as_f64())
        .ok_or_else(|| ProtocolError::Malformed(format!("missing numeric field `{key}`")))
}

fn take_string(obj: &mut serde_json::Map<String, Value>, key: &str) -> Result<String, ProtocolError> {
    match obj.remove(key) {
        Some(Value::String(s)) => Ok(s),
        _ => Err(ProtocolError::Malformed(format!("missing string field `{key}`"))),
    }
}

/// Serializes `msg` into one frame.
pub fn encode_frame(msg: &WireMessage) -> Result<Vec<u8>, ProtocolError> {
    let payload = msg.to_json()?;
    if payload.len() > MAX_PAYLOAD {
        return Err(ProtocolError::Oversized(payload.len()));
    }
    let mut out = Vec::with_capacity(PREFIX_LEN + payload.len());
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(payload.as_bytes());
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decoded {
    /// A complete message occupying the first `consumed` bytes.
    Message { msg: WireMessage, consumed: usize },
    /// The buffer holds only part of a frame; at least `needed` bytes in total are required.
    NeedMore { needed: usize },
}

/// Decodes the frame at the start of `buf`.
pub fn decode_frame(buf: &[u8]) -> Result<Decoded, ProtocolError> {
    if buf.len() < PREFIX_LEN {
        return Ok(Decoded::NeedMore { needed: PREFIX_LEN });
    }
    let len = u32::from_le_bytes([buf[0], buf[1], buf[2], buf[3]]) as usize;
    if len > MAX_PAYLOAD {
        return Err(ProtocolError::Oversized(len));
    }
    let total = PREFIX_LEN + len;
    if buf.len() < total {
        return Ok(Decoded::NeedMore { needed: total });
    }
    let msg = WireMessage::from_json(&buf[PREFIX_LEN..total])?;
    Ok(Decoded::Message { msg, consumed: total })
}
