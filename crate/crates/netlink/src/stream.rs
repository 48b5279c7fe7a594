use std::io::{ErrorKind, Read, Write};

use crate::error::NetError;
use crate::frame::{decode_frame, encode_frame, Decoded, WireMessage};

/// Incremental frame reader over a byte stream.
#[derive(Debug)]
pub struct FrameReader<R> {
    inner: R,
    buf: Vec<u8>,
}

impl<R: Read> FrameReader<R> {
    pub fn new(inner: R) -> Self {
        Self { inner, buf: Vec::new() }
    }

    /// Next message, or `None` on a clean end of stream between frames.
    pub fn read_message(&mut self) -> Result<Option<WireMessage>, NetError> {
        let mut chunk = [0u8; 4096];
        loop {
            if let Decoded::Message { msg, consumed } = decode_frame(&self.buf)? {
                self.buf.drain(..consumed);
                return Ok(Some(msg));
            }
            let n = match self.inner.read(&mut chunk) {
                Ok(n) => n,
                Err(e) if e.kind() == ErrorKind::Interrupted => continue,
                Err(e) => return Err(e.into()),
            };
            if n == 0 {
                return if self.buf.is_empty() {
                    Ok(None)
                } else {
                    Err(NetError::Disconnected)
                };
            }
            self.buf.extend_from_slice(&chunk[..n]);
        }
    }
}

pub fn write_message<W: Write>(out: &mut W, msg: &WireMessage) -> Result<(), NetError> {
    out.write_all(&encode_frame(msg)?)?;
    out.flush()?;
    Ok(())
}
