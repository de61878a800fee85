//! Learning to decrypt polyalphabetic ciphers with a recurrent network.
//!
//! This crate implements three classical ciphers (Vigenere, Autokey, and
//! the Wehrmacht Enigma), a one-hot encoding that frames decryption and
//! known-plaintext key recovery as character-level sequence transduction,
//! an LSTM trained from scratch with exact backpropagation through time,
//! and analysis tools for measuring how the trained models generalize.
//!
//! Everything downstream of the experiment seed is deterministic: data
//! synthesis, initialization, batch order, and parallel gradient reduction
//! all produce bit-identical results for a fixed seed and configuration.

pub mod alphabet;
pub mod analysis;
pub mod cipher;
pub mod datagen;
pub mod encoding;
pub mod enigma;
pub mod error;
pub mod nn;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
