//! Device side of the encrypted-matching protocol over TCP.
//!
//! One thread per connection. The template store is shared behind a
//! read/write lock; enrollments take the write lock and are persisted before
//! the lock is released.

use std::collections::BTreeMap;
use std::io::{BufReader, BufWriter};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::thread::JoinHandle;
use std::time::Duration;

use num_bigint::{BigUint, RandBigInt};
use num_traits::Num;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};
use crate::smc::matching::{blind, encrypted_distance, Blinding, EncryptedTemplate, DEFAULT_MAX_BLINDING};
use crate::smc::paillier::{Ciphertext, PublicKey};
use crate::smc::wire::{
    read_message, write_message, AuthStartPayload, DecisionPayload, DistBlindedPayload, EnrollPayload, ErrorCode,
    ErrorPayload, HelloPayload, Message, MessageType, ProtocolError, SignReplyPayload,
};

/// One enrolled template, as persisted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredRecord {
    pub pubkey: String,
    pub elements: Vec<String>,
    pub sum_squares: String,
    pub theta: u64,
    pub max_feature: u64,
}

impl StoredRecord {
    pub fn public_key(&self) -> Result<PublicKey> {
        Ok(PublicKey::new(parse_hex(&self.pubkey)?))
    }

    pub fn template(&self) -> Result<EncryptedTemplate> {
        Ok(EncryptedTemplate {
            elements: self.elements.iter().map(|e| Ciphertext::from_hex(e)).collect::<Result<_>>()?,
            sum_squares: Ciphertext::from_hex(&self.sum_squares)?,
        })
    }

    /// Upper bound on the squared distance to any admissible probe.
    pub fn max_distance(&self) -> u64 {
        (self.elements.len() as u64).saturating_mul(self.max_feature.saturating_mul(self.max_feature))
    }
}

pub(crate) fn parse_hex(s: &str) -> Result<BigUint> {
    BigUint::from_str_radix(s, 16).map_err(|_| Error::Parse(format!("invalid hex integer {s:?}")))
}

/// Templates keyed by claimant id, optionally backed by a JSON file.
#[derive(Debug, Default)]
pub struct TemplateStore {
    path: Option<PathBuf>,
    records: BTreeMap<String, StoredRecord>,
}

impl TemplateStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens `path`, starting empty if it does not exist yet.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let records = match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => BTreeMap::new(),
            Err(e) => return Err(e.into()),
        };
        Ok(Self { path: Some(path), records })
    }

    pub fn get(&self, id: &str) -> Option<&StoredRecord> {
        self.records.get(id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn insert(&mut self, id: String, record: StoredRecord) -> Result<()> {
        self.records.insert(id, record);
        self.persist()
    }

    fn persist(&self) -> Result<()> {
        let Some(path) = &self.path else { return Ok(()) };
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, serde_json::to_vec_pretty(&self.records)?)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }
}

#[derive(Debug, Default)]
pub struct ServerStats {
    pub sessions: AtomicU64,
    pub enrollments: AtomicU64,
    pub accepts: AtomicU64,
    pub rejects: AtomicU64,
    pub protocol_failures: AtomicU64,
}

impl ServerStats {
    pub fn protocol_failures(&self) -> u64 {
        self.protocol_failures.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    /// Seeds per-session randomness; `None` draws from the OS.
    pub seed: Option<u64>,
    pub max_blinding: u64,
    pub read_timeout: Duration,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self { seed: None, max_blinding: DEFAULT_MAX_BLINDING, read_timeout: Duration::from_secs(30) }
    }
}

struct Shared {
    store: RwLock<TemplateStore>,
    stats: ServerStats,
    config: ServerConfig,
    sessions: AtomicU64,
}

/// Running server; dropping it shuts the listener down.
pub struct ServerHandle {
    addr: SocketAddr,
    shared: Arc<Shared>,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn stats(&self) -> &ServerStats {
        &self.shared.stats
    }

    pub fn enrolled(&self) -> usize {
        self.shared.store.read().expect("store lock poisoned").len()
    }

    pub fn shutdown(mut self) {
        self.stop_listener();
    }

    /// Blocks until the listener stops (for foreground serving).
    pub fn join(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    fn stop_listener(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // Wake the blocking accept.
        let _ = TcpStream::connect(self.addr);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if self.thread.is_some() {
            self.stop_listener();
        }
    }
}

pub fn serve(addr: impl ToSocketAddrs, store: TemplateStore, config: ServerConfig) -> Result<ServerHandle> {
    let listener = TcpListener::bind(addr)?;
    let addr = listener.local_addr()?;
    let shared = Arc::new(Shared { store: RwLock::new(store), stats: ServerStats::default(), config, sessions: AtomicU64::new(0) });
    let stop = Arc::new(AtomicBool::new(false));
    let thread = {
        let shared = Arc::clone(&shared);
        let stop = Arc::clone(&stop);
        std::thread::spawn(move || {
            for conn in listener.incoming() {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                match conn {
                    Ok(stream) => {
                        let shared = Arc::clone(&shared);
                        std::thread::spawn(move || handle_connection(stream, &shared));
                    }
                    Err(e) => log::warn!("accept failed: {e}"),
                }
            }
        })
    };
    log::info!("listening on {addr}");
    Ok(ServerHandle { addr, shared, stop, thread: Some(thread) })
}

fn session_rng(shared: &Shared) -> StreamRng {
    let index = shared.sessions.fetch_add(1, Ordering::SeqCst);
    match shared.config.seed {
        Some(seed) => rng::substream(seed, "smc-session", index),
        None => StreamRng::from_entropy(),
    }
}

fn handle_connection(stream: TcpStream, shared: &Shared) {
    let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_default();
    if let Err(e) = stream.set_read_timeout(Some(shared.config.read_timeout)) {
        log::warn!("{peer}: cannot set timeout: {e}");
    }
    let Ok(write_half) = stream.try_clone() else { return };
    let mut reader = BufReader::new(stream);
    let mut writer = BufWriter::new(write_half);
    shared.stats.sessions.fetch_add(1, Ordering::SeqCst);
    let mut session = Session { shared, rng: session_rng(shared), sid: String::new(), pubkey: None };

    loop {
        let msg = match read_message(&mut reader) {
            Ok(m) => m,
            Err(Error::Protocol(ProtocolError::Closed)) => break,
            Err(e) => {
                log::warn!("{peer}: {e}");
                let code = match &e {
                    Error::Protocol(p) => p.code(),
                    _ => ErrorCode::Malformed,
                };
                let _ = write_message(&mut writer, &Message::error(&session.sid, code, e.to_string()));
                break;
            }
        };
        session.sid = msg.sid.clone();
        let reply = match session.step(&msg, &mut reader, &mut writer) {
            Ok(reply) => reply,
            Err(e) => {
                log::warn!("{peer} [{}]: {e}", session.sid);
                let code = match &e {
                    Error::Protocol(p) => p.code(),
                    Error::LengthMismatch { .. } => ErrorCode::LengthMismatch,
                    Error::Parse(_) | Error::Json(_) => ErrorCode::Malformed,
                    _ => ErrorCode::Internal,
                };
                Message::error(&session.sid, code, e.to_string())
            }
        };
        if let Err(e) = write_message(&mut writer, &reply) {
            log::warn!("{peer}: write failed: {e}");
            break;
        }
    }
}

struct Session<'a> {
    shared: &'a Shared,
    rng: StreamRng,
    sid: String,
    pubkey: Option<PublicKey>,
}

impl Session<'_> {
    fn step(
        &mut self,
        msg: &Message,
        reader: &mut BufReader<TcpStream>,
        writer: &mut BufWriter<TcpStream>,
    ) -> Result<Message> {
        match msg.kind {
            MessageType::Hello => {
                let hello: HelloPayload = msg.payload()?;
                self.pubkey = hello.pubkey.as_deref().map(parse_hex).transpose()?.map(PublicKey::new);
                Ok(Message::new(MessageType::Hello, &self.sid, &HelloPayload { pubkey: None }))
            }
            MessageType::Enroll => self.enroll(msg.payload()?),
            MessageType::AuthStart => self.authenticate(msg.payload()?, reader, writer),
            other => Err(ProtocolError::Malformed(format!("unexpected {other:?} from claimant")).into()),
        }
    }

    fn announced_key(&self) -> Result<&PublicKey> {
        self.pubkey.as_ref().ok_or_else(|| ProtocolError::Malformed("HELLO with a public key must come first".into()).into())
    }

    fn enroll(&mut self, p: EnrollPayload) -> Result<Message> {
        let pk = self.announced_key()?;
        let record = StoredRecord {
            pubkey: pk.modulus().to_str_radix(16),
            elements: p.elements,
            sum_squares: p.sum_squares,
            theta: p.theta,
            max_feature: p.max_feature,
        };
        record.template()?;
        Blinding::max_factor(pk, record.max_distance(), record.theta, self.shared.config.max_blinding)?;
        self.shared.store.write().expect("store lock poisoned").insert(p.id.clone(), record)?;
        self.shared.stats.enrollments.fetch_add(1, Ordering::SeqCst);
        log::info!("[{}] enrolled {:?}", self.sid, p.id);
        Ok(Message::new(MessageType::Decision, &self.sid, &DecisionPayload { accepted: true }))
    }

    fn authenticate(
        &mut self,
        p: AuthStartPayload,
        reader: &mut BufReader<TcpStream>,
        writer: &mut BufWriter<TcpStream>,
    ) -> Result<Message> {
        let record = self
            .shared
            .store
            .read()
            .expect("store lock poisoned")
            .get(&p.id)
            .cloned()
            .ok_or_else(|| ProtocolError::UnknownId(p.id.clone()))?;
        let pk = record.public_key()?;
        if self.announced_key()? != &pk {
            return Err(ProtocolError::KeyMismatch.into());
        }
        if p.probe.iter().any(|&d| d > record.max_feature) {
            return Err(ProtocolError::Malformed(format!("probe values must not exceed {}", record.max_feature)).into());
        }
        let template = record.template()?;
        let distance = encrypted_distance(&pk, &template, &p.probe, &mut self.rng)?;
        let blinding =
            Blinding::draw(&pk, record.max_distance(), record.theta, self.shared.config.max_blinding, &mut self.rng)?;
        let c = blind(&pk, &distance, record.theta, blinding, &mut self.rng)?;
        let challenge = self.rng.gen_biguint_below(pk.modulus());
        let check = pk.encrypt(&challenge, &mut self.rng);
        let payload = DistBlindedPayload { c: c.to_hex(), check: check.to_hex() };
        write_message(writer, &Message::new(MessageType::DistBlinded, &self.sid, &payload))?;

        let reply = read_message(reader)?;
        let accepted = match reply.kind {
            MessageType::SignReply => {
                let sign: SignReplyPayload = reply.payload()?;
                if parse_hex(&sign.check).ok().as_ref() == Some(&challenge) {
                    sign.negative
                } else {
                    self.shared.stats.protocol_failures.fetch_add(1, Ordering::SeqCst);
                    log::warn!("[{}] {}; rejecting", self.sid, Error::DecryptionFailure);
                    false
                }
            }
            MessageType::Error => {
                let e: ErrorPayload = reply.payload()?;
                self.shared.stats.protocol_failures.fetch_add(1, Ordering::SeqCst);
                log::warn!("[{}] claimant reported {:?}: {}; rejecting", self.sid, e.code, e.message);
                false
            }
            other => {
                return Err(ProtocolError::Unexpected { expected: MessageType::SignReply, found: other }.into());
            }
        };
        let counter = if accepted { &self.shared.stats.accepts } else { &self.shared.stats.rejects };
        counter.fetch_add(1, Ordering::SeqCst);
        log::info!("[{}] {:?}: {}", self.sid, p.id, if accepted { "accept" } else { "reject" });
        Ok(Message::new(MessageType::Decision, &self.sid, &DecisionPayload { accepted }))
    }
}
