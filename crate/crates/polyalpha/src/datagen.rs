//! Seeded on-the-fly synthesis of training and evaluation data.
//!
//! No dataset ever touches disk: every example is a pure function of
//! `(seed, stream, example index)`, so the full training stream replays
//! bit-identically on any platform and any thread count. Example `i` of a
//! stream draws its message first and its key second, which lets a
//! fixed-key evaluation set share its messages with the random-key set at
//! the same indices.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alphabet::{letter, KeyPhrase, MAX_KEY_LEN};
use crate::cipher::{autokey_decrypt, autokey_encrypt, vigenere_decrypt, vigenere_encrypt};
use crate::encoding::{
    assemble_batch, build_attack_sample, build_decryption_sample, Batch, Sample,
};
use crate::enigma::{enigma_decrypt, enigma_encrypt, EnigmaConfig, ReflectorId, RotorId};
use crate::error::{Error, Result};
use crate::rng::{substream, tag, SplitMix64};

/// Cipher selector for data generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CipherKind {
    Vigenere,
    Autokey,
    Enigma,
}

impl CipherKind {
    pub fn encrypt(self, key: &KeyPhrase, plaintext: &str) -> Result<String> {
        match self {
            CipherKind::Vigenere => vigenere_encrypt(key, plaintext),
            CipherKind::Autokey => autokey_encrypt(key, plaintext),
            CipherKind::Enigma => enigma_encrypt(&enigma_machine(), key.as_str(), plaintext),
        }
    }

    pub fn decrypt(self, key: &KeyPhrase, ciphertext: &str) -> Result<String> {
        match self {
            CipherKind::Vigenere => vigenere_decrypt(key, ciphertext),
            CipherKind::Autokey => autokey_decrypt(key, ciphertext),
            CipherKind::Enigma => enigma_decrypt(&enigma_machine(), key.as_str(), ciphertext),
        }
    }
}

/// Machine settings fixed for all Enigma data: reflector A, rotors
/// I-II-III, rings (2, 14, 8), no plugboard. Messages are keyed only by
/// the three rotor start positions.
pub fn enigma_machine() -> EnigmaConfig {
    EnigmaConfig::new([RotorId::I, RotorId::II, RotorId::III], ReflectorId::A, [2, 14, 8])
}

/// Which learning task samples are built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Map (key, ciphertext) to (key, plaintext).
    Decrypt,
    /// Map aligned (plaintext, ciphertext) pairs to the key.
    Attack,
}

/// Data-synthesis settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub cipher: CipherKind,
    pub task: Task,
    /// Message length for every generated sample.
    pub message_len: usize,
    /// Inclusive key-length range; Enigma requires exactly 3.
    pub key_len_min: usize,
    pub key_len_max: usize,
    /// Keys never emitted by key draws (exact-string match).
    pub holdout_keys: Vec<String>,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            cipher: CipherKind::Vigenere,
            task: Task::Decrypt,
            message_len: 14,
            key_len_min: 1,
            key_len_max: MAX_KEY_LEN,
            holdout_keys: vec!["KEY".to_string()],
            seed: 0,
        }
    }
}

impl GenConfig {
    /// Model input width for this task.
    pub fn input_width(&self) -> usize {
        match self.task {
            Task::Decrypt => crate::encoding::DECRYPT_WIDTH,
            Task::Attack => crate::encoding::ATTACK_WIDTH,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.message_len == 0 {
            return Err(Error::InvalidConfig("message_len must be at least 1".into()));
        }
        if self.key_len_min < 1 || self.key_len_max > MAX_KEY_LEN || self.key_len_min > self.key_len_max
        {
            return Err(Error::InvalidConfig(format!(
                "key length range {}..={} must lie within 1..={MAX_KEY_LEN}",
                self.key_len_min, self.key_len_max
            )));
        }
        if self.cipher == CipherKind::Enigma && (self.key_len_min != 3 || self.key_len_max != 3) {
            return Err(Error::InvalidConfig(
                "enigma keys are exactly 3 rotor positions; set key_len_min = key_len_max = 3".into(),
            ));
        }
        for k in &self.holdout_keys {
            k.parse::<KeyPhrase>()
                .map_err(|_| Error::InvalidKey(format!("holdout key {k:?} is not a valid key")))?;
        }
        Ok(())
    }
}

/// Uniform random message of `len` letters.
pub fn random_message(rng: &mut SplitMix64, len: usize) -> String {
    (0..len).map(|_| letter(rng.letter())).collect()
}

/// Random key with length uniform over the configured range, resampled
/// while the drawn string is in the holdout set.
pub fn random_key(rng: &mut SplitMix64, config: &GenConfig) -> KeyPhrase {
    loop {
        let len = config.key_len_min as u64
            + rng.below((config.key_len_max - config.key_len_min + 1) as u64);
        let text: String = (0..len).map(|_| letter(rng.letter())).collect();
        if !config.holdout_keys.iter().any(|h| *h == text) {
            return text.parse().expect("drawn keys are always valid");
        }
    }
}

fn sample_at(
    config: &GenConfig,
    stream: u64,
    index: u64,
    message_len: usize,
    fixed_key: Option<&KeyPhrase>,
) -> Result<Sample> {
    let mut rng = substream(config.seed, stream, index);
    let plaintext = random_message(&mut rng, message_len);
    let key = match fixed_key {
        Some(k) => k.clone(),
        None => random_key(&mut rng, config),
    };
    let ciphertext = config.cipher.encrypt(&key, &plaintext)?;
    match config.task {
        Task::Decrypt => build_decryption_sample(&key, &plaintext, &ciphertext),
        Task::Attack => build_attack_sample(&key, &plaintext, &ciphertext),
    }
}

/// The training-example stream. The cursor counts examples consumed and
/// is the only state; saving and restoring it resumes the stream exactly.
#[derive(Debug, Clone)]
pub struct SampleStream {
    config: GenConfig,
    cursor: u64,
}

impl SampleStream {
    pub fn new(config: GenConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, cursor: 0 })
    }

    pub fn config(&self) -> &GenConfig {
        &self.config
    }

    pub fn cursor(&self) -> u64 {
        self.cursor
    }

    pub fn seek(&mut self, cursor: u64) {
        self.cursor = cursor;
    }

    /// Synthesize the next `batch_size` examples. Examples are built in
    /// parallel from per-index substreams and stacked in index order, so
    /// the result does not depend on the thread count.
    pub fn next_batch(&mut self, batch_size: usize) -> Result<Batch> {
        let start = self.cursor;
        let samples: Vec<Sample> = (0..batch_size as u64)
            .into_par_iter()
            .map(|i| sample_at(&self.config, tag::TRAIN, start + i, self.config.message_len, None))
            .collect::<Result<_>>()?;
        let batch = assemble_batch(&samples)?;
        self.cursor = start + batch_size as u64;
        Ok(batch)
    }
}

/// Fixed evaluation set: example `i` always draws the same message; with
/// `fixed_key` given, every sample uses that key instead of a random one.
pub fn eval_set(config: &GenConfig, count: usize, fixed_key: Option<&KeyPhrase>) -> Result<Vec<Sample>> {
    config.validate()?;
    (0..count as u64)
        .into_par_iter()
        .map(|i| sample_at(config, tag::EVAL, i, config.message_len, fixed_key))
        .collect()
}
