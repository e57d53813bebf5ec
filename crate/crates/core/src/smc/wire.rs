//! Newline-delimited JSON framing for the encrypted-matching protocol.
//!
//! Every frame is `{"v":1,"type":…,"sid":…,"payload":{…}}`. Big integers
//! (moduli, ciphertexts) travel as lowercase hex strings.
//!
//! Enrollment: `HELLO → HELLO`, `ENROLL → DECISION`.
//! Authentication: `HELLO → HELLO`, `AUTH_START → DIST_BLINDED`,
//! `SIGN_REPLY | ERROR → DECISION`.
//!
//! Paillier decryption under the wrong key does not fail, it returns an
//! unrelated residue. `DIST_BLINDED` therefore carries a challenge
//! ciphertext whose plaintext the claimant must echo back.

use std::io::{BufRead, Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PROTOCOL_VERSION: u32 = 1;

/// Longest accepted frame, in bytes.
pub const MAX_FRAME: usize = 16 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MessageType {
    Hello,
    Enroll,
    AuthStart,
    DistBlinded,
    SignReply,
    Decision,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    VersionMismatch,
    UnknownId,
    KeyMismatch,
    Malformed,
    DecryptionFailure,
    LengthMismatch,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("peer speaks protocol version {0}, expected {PROTOCOL_VERSION}")]
    VersionMismatch(u32),
    #[error("no template enrolled under id {0:?}")]
    UnknownId(String),
    #[error("announced public key does not match the enrolled template")]
    KeyMismatch,
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("expected {expected:?}, received {found:?}")]
    Unexpected { expected: MessageType, found: MessageType },
    #[error("peer closed the connection")]
    Closed,
    #[error("peer reported {code:?}: {message}")]
    Remote { code: ErrorCode, message: String },
}

impl ProtocolError {
    /// Wire code used when reporting this error to the peer.
    pub fn code(&self) -> ErrorCode {
        match self {
            Self::VersionMismatch(_) => ErrorCode::VersionMismatch,
            Self::UnknownId(_) => ErrorCode::UnknownId,
            Self::KeyMismatch => ErrorCode::KeyMismatch,
            Self::Malformed(_) | Self::Unexpected { .. } | Self::Closed => ErrorCode::Malformed,
            Self::Remote { code, .. } => *code,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub v: u32,
    #[serde(rename = "type")]
    pub kind: MessageType,
    pub sid: String,
    pub payload: serde_json::Value,
}

impl Message {
    pub fn new<P: Serialize>(kind: MessageType, sid: &str, payload: &P) -> Self {
        Self {
            v: PROTOCOL_VERSION,
            kind,
            sid: sid.to_owned(),
            payload: serde_json::to_value(payload).expect("payload types serialize infallibly"),
        }
    }

    pub fn error(sid: &str, code: ErrorCode, message: impl Into<String>) -> Self {
        Self::new(MessageType::Error, sid, &ErrorPayload { code, message: message.into() })
    }

    pub fn payload<P: DeserializeOwned>(&self) -> Result<P, ProtocolError> {
        serde_json::from_value(self.payload.clone()).map_err(|e| ProtocolError::Malformed(e.to_string()))
    }

    /// Payload of a message that must be of type `expected`; an `ERROR`
    /// frame surfaces as [`ProtocolError::Remote`].
    pub fn expect<P: DeserializeOwned>(&self, expected: MessageType) -> Result<P, ProtocolError> {
        if self.kind == MessageType::Error && expected != MessageType::Error {
            let e: ErrorPayload = self.payload()?;
            return Err(ProtocolError::Remote { code: e.code, message: e.message });
        }
        if self.kind != expected {
            return Err(ProtocolError::Unexpected { expected, found: self.kind });
        }
        self.payload()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HelloPayload {
    /// Claimant's public modulus, hex.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pubkey: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnrollPayload {
    pub id: String,
    pub elements: Vec<String>,
    pub sum_squares: String,
    pub theta: u64,
    /// Largest value any feature may take.
    pub max_feature: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthStartPayload {
    pub id: String,
    pub probe: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistBlindedPayload {
    pub c: String,
    /// `E(v)` for a fresh random `v`; the claimant proves key possession by returning `v`.
    pub check: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignReplyPayload {
    pub negative: bool,
    pub check: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionPayload {
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorPayload {
    pub code: ErrorCode,
    pub message: String,
}

pub fn write_message<W: Write>(w: &mut W, msg: &Message) -> crate::Result<()> {
    let mut line = serde_json::to_vec(msg)?;
    line.push(b'\n');
    w.write_all(&line)?;
    w.flush()?;
    Ok(())
}

/// Reads one frame. Version is checked before the body is interpreted.
pub fn read_message<R: BufRead>(r: &mut R) -> crate::Result<Message> {
    let mut line = String::new();
    let n = Read::take(&mut *r, MAX_FRAME as u64 + 1).read_line(&mut line)?;
    if n == 0 {
        return Err(ProtocolError::Closed.into());
    }
    if n > MAX_FRAME {
        return Err(ProtocolError::Malformed("frame too long".into()).into());
    }
    let raw: serde_json::Value =
        serde_json::from_str(&line).map_err(|e| ProtocolError::Malformed(e.to_string()))?;
    match raw.get("v").and_then(serde_json::Value::as_u64) {
        Some(v) if v == PROTOCOL_VERSION as u64 => {}
        Some(v) => return Err(ProtocolError::VersionMismatch(v as u32).into()),
        None => return Err(ProtocolError::Malformed("missing version".into()).into()),
    }
    serde_json::from_value(raw).map_err(|e| ProtocolError::Malformed(e.to_string()).into())
}
