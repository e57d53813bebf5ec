//! Matching over additively homomorphic ciphertexts.

pub mod client;
pub mod matching;
pub mod paillier;
pub mod server;
pub mod wire;

pub use client::{authenticate_remote, enroll_remote, ClientOptions};
pub use matching::{
    blind, claimant_sign, compare_local, encrypt_template, encrypted_distance, features_of, Blinding,
    EncryptedTemplate,
};
pub use paillier::{Ciphertext, Keypair, PublicKey};
pub use server::{serve, ServerConfig, ServerHandle, StoredRecord, TemplateStore};
