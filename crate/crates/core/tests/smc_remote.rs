use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;

use biosec::error::Error;
use biosec::smc::wire::{ErrorCode, ProtocolError};
use biosec::smc::{authenticate_remote, enroll_remote, serve, ClientOptions, Keypair, ServerConfig, TemplateStore};
use biosec::rng;

fn config() -> ServerConfig {
    ServerConfig { seed: Some(11), ..ServerConfig::default() }
}

#[test]
fn decisions_follow_the_squared_distance() {
    let server = serve("127.0.0.1:0", TemplateStore::in_memory(), config()).unwrap();
    let kp = Keypair::generate(128, 1).unwrap();
    let mut r = rng::stream(1, "remote");
    enroll_remote(server.addr(), "alice", kp.public(), &[1, 0, 1, 1, 0], 1, 1, &mut r).unwrap();
    assert_eq!(server.enrolled(), 1);
    let opts = ClientOptions::default();
    // distance 0 and 1 accept, 2 rejects at theta = 1
    assert!(authenticate_remote(server.addr(), "alice", &[1, 0, 1, 1, 0], &kp, &opts, &mut r).unwrap());
    assert!(authenticate_remote(server.addr(), "alice", &[1, 0, 1, 1, 1], &kp, &opts, &mut r).unwrap());
    assert!(!authenticate_remote(server.addr(), "alice", &[0, 0, 1, 1, 1], &kp, &opts, &mut r).unwrap());
    assert_eq!(server.stats().protocol_failures(), 0);
}

#[test]
fn a_claimant_without_the_private_key_is_rejected() {
    let server = serve("127.0.0.1:0", TemplateStore::in_memory(), config()).unwrap();
    let owner = Keypair::generate(128, 2).unwrap();
    let thief = Keypair::generate(128, 3).unwrap();
    let mut r = rng::stream(2, "thief");
    enroll_remote(server.addr(), "bob", owner.public(), &[1, 1, 0, 0], 0, 1, &mut r).unwrap();
    // announcing the owner's key gets past the key check, but the thief
    // cannot decrypt the challenge
    let opts = ClientOptions { announce: Some(owner.public().clone()), ..ClientOptions::default() };
    assert!(!authenticate_remote(server.addr(), "bob", &[1, 1, 0, 0], &thief, &opts, &mut r).unwrap());
    assert!(server.stats().protocol_failures() > 0);

    // announcing its own key is refused outright
    let err = authenticate_remote(server.addr(), "bob", &[1, 1, 0, 0], &thief, &ClientOptions::default(), &mut r).unwrap_err();
    assert!(matches!(err, Error::Protocol(ProtocolError::Remote { code: ErrorCode::KeyMismatch, .. })), "{err}");
}

#[test]
fn unknown_ids_and_bad_versions_are_reported() {
    let server = serve("127.0.0.1:0", TemplateStore::in_memory(), config()).unwrap();
    let kp = Keypair::generate(64, 4).unwrap();
    let mut r = rng::stream(4, "errors");
    let err = authenticate_remote(server.addr(), "nobody", &[0, 1], &kp, &ClientOptions::default(), &mut r).unwrap_err();
    assert!(matches!(err, Error::Protocol(ProtocolError::Remote { code: ErrorCode::UnknownId, .. })), "{err}");

    let mut stream = TcpStream::connect(server.addr()).unwrap();
    stream.write_all(b"{\"v\":2,\"type\":\"HELLO\",\"sid\":\"x\",\"payload\":{}}\n").unwrap();
    let mut line = String::new();
    BufReader::new(stream).read_line(&mut line).unwrap();
    let reply: serde_json::Value = serde_json::from_str(&line).unwrap();
    assert_eq!(reply["type"], "ERROR");
    assert_eq!(reply["payload"]["code"], "version_mismatch");
}

#[test]
fn templates_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("store.json");
    let kp = Keypair::generate(64, 5).unwrap();
    let mut r = rng::stream(5, "persist");
    {
        let server = serve("127.0.0.1:0", TemplateStore::open(&path).unwrap(), config()).unwrap();
        enroll_remote(server.addr(), "carol", kp.public(), &[0, 1, 1], 0, 1, &mut r).unwrap();
        server.shutdown();
    }
    let server = serve("127.0.0.1:0", TemplateStore::open(&path).unwrap(), config()).unwrap();
    assert_eq!(server.enrolled(), 1);
    assert!(authenticate_remote(server.addr(), "carol", &[0, 1, 1], &kp, &ClientOptions::default(), &mut r).unwrap());
}

#[test]
fn concurrent_sessions() {
    let server = serve("127.0.0.1:0", TemplateStore::in_memory(), config()).unwrap();
    let kp = Keypair::generate(64, 6).unwrap();
    let mut r = rng::stream(6, "concurrent");
    enroll_remote(server.addr(), "dave", kp.public(), &[1, 0, 0, 1], 0, 1, &mut r).unwrap();
    let addr = server.addr();
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..8u64)
            .map(|i| {
                let kp = &kp;
                s.spawn(move || {
                    let mut r = rng::substream(6, "client", i);
                    let probe = if i % 2 == 0 { vec![1, 0, 0, 1] } else { vec![0, 1, 1, 0] };
                    authenticate_remote(addr, "dave", &probe, kp, &ClientOptions::default(), &mut r).unwrap() == (i % 2 == 0)
                })
            })
            .collect();
        assert!(handles.into_iter().all(|h| h.join().unwrap()));
    });
}
