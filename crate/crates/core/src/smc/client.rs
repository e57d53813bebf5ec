//! Claimant side of the encrypted-matching protocol.

use std::io::{BufReader, BufWriter};
use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use rand::Rng;

use crate::error::Result;
use crate::smc::matching::{claimant_sign, encrypt_template};
use crate::smc::paillier::{Ciphertext, Keypair, PublicKey};
use crate::smc::wire::{
    read_message, write_message, AuthStartPayload, DecisionPayload, DistBlindedPayload, EnrollPayload, ErrorCode,
    HelloPayload, Message, MessageType, SignReplyPayload,
};

#[derive(Debug, Clone, Default)]
pub struct ClientOptions {
    /// Public key to announce instead of the keypair's own. Lets tests play
    /// a claimant whose private key does not match the enrolled template.
    pub announce: Option<PublicKey>,
    pub timeout: Option<Duration>,
}

struct Connection {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
    sid: String,
}

impl Connection {
    fn open<A: ToSocketAddrs, R: Rng + ?Sized>(addr: A, timeout: Option<Duration>, rng: &mut R) -> Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_read_timeout(Some(timeout.unwrap_or(Duration::from_secs(60))))?;
        let writer = BufWriter::new(stream.try_clone()?);
        Ok(Self { reader: BufReader::new(stream), writer, sid: format!("{:016x}", rng.gen::<u64>()) })
    }

    fn send<P: serde::Serialize>(&mut self, kind: MessageType, payload: &P) -> Result<()> {
        write_message(&mut self.writer, &Message::new(kind, &self.sid, payload))
    }

    fn receive<P: serde::de::DeserializeOwned>(&mut self, kind: MessageType) -> Result<P> {
        Ok(read_message(&mut self.reader)?.expect(kind)?)
    }

    fn hello(&mut self, pk: &PublicKey) -> Result<()> {
        self.send(MessageType::Hello, &HelloPayload { pubkey: Some(pk.modulus().to_str_radix(16)) })?;
        self.receive::<HelloPayload>(MessageType::Hello)?;
        Ok(())
    }
}

/// Encrypts `features` under `pk` and stores them on the device as `id`.
#[allow(clippy::too_many_arguments)]
pub fn enroll_remote<A: ToSocketAddrs, R: Rng + ?Sized>(
    addr: A,
    id: &str,
    pk: &PublicKey,
    features: &[u64],
    theta: u64,
    max_feature: u64,
    rng: &mut R,
) -> Result<()> {
    let mut conn = Connection::open(addr, None, rng)?;
    conn.hello(pk)?;
    let t = encrypt_template(pk, features, rng);
    conn.send(
        MessageType::Enroll,
        &EnrollPayload {
            id: id.to_owned(),
            elements: t.elements.iter().map(Ciphertext::to_hex).collect(),
            sum_squares: t.sum_squares.to_hex(),
            theta,
            max_feature,
        },
    )?;
    conn.receive::<DecisionPayload>(MessageType::Decision)?;
    Ok(())
}

/// Runs one authentication and returns the device's decision.
pub fn authenticate_remote<A: ToSocketAddrs, R: Rng + ?Sized>(
    addr: A,
    id: &str,
    probe: &[u64],
    keypair: &Keypair,
    options: &ClientOptions,
    rng: &mut R,
) -> Result<bool> {
    let mut conn = Connection::open(addr, options.timeout, rng)?;
    conn.hello(options.announce.as_ref().unwrap_or(keypair.public()))?;
    conn.send(MessageType::AuthStart, &AuthStartPayload { id: id.to_owned(), probe: probe.to_vec() })?;
    let blinded: DistBlindedPayload = conn.receive(MessageType::DistBlinded)?;
    let reply = Ciphertext::from_hex(&blinded.c).and_then(|c| claimant_sign(keypair, &c)).and_then(|negative| {
        let check = keypair.decrypt(&Ciphertext::from_hex(&blinded.check)?)?;
        Ok(SignReplyPayload { negative, check: check.to_str_radix(16) })
    });
    match reply {
        Ok(reply) => conn.send(MessageType::SignReply, &reply)?,
        Err(e) => {
            log::warn!("cannot decrypt blinded distance: {e}");
            let msg = Message::error(&conn.sid, ErrorCode::DecryptionFailure, e.to_string());
            write_message(&mut conn.writer, &msg)?;
        }
    }
    let decision: DecisionPayload = conn.receive(MessageType::Decision)?;
    Ok(decision.accepted)
}
