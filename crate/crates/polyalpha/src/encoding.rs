//! One-hot sequence encoding for the decryption and key-recovery tasks.
//!
//! A decryption sample asks the network to map (key, ciphertext) to
//! (key, plaintext): both input and target start with the key padded to
//! six slots, so the model first copies the key and then decrypts. A
//! key-recovery ("attack") sample pairs plaintext and ciphertext
//! characters side by side at each step and asks for the padded key on
//! the first six output steps.

use crate::alphabet::{index_of, symbol, KeyPhrase, ALPHABET_LEN, MAX_KEY_LEN, NULL_SYMBOL};
use crate::error::{Error, Result};

/// Leading time steps reserved for the null-padded key.
pub const KEY_STEPS: usize = MAX_KEY_LEN;

/// Input width for the decryption task: one symbol block.
pub const DECRYPT_WIDTH: usize = ALPHABET_LEN;

/// Input width for the attack task: plaintext block beside ciphertext block.
pub const ATTACK_WIDTH: usize = 2 * ALPHABET_LEN;

/// Row-major `steps x width` matrix of one-hot rows.
#[derive(Debug, Clone, PartialEq)]
pub struct OneHotSeq {
    pub steps: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl OneHotSeq {
    fn zeros(steps: usize, width: usize) -> Self {
        Self { steps, width, data: vec![0.0; steps * width] }
    }

    #[inline]
    pub fn row(&self, t: usize) -> &[f32] {
        &self.data[t * self.width..(t + 1) * self.width]
    }

    #[inline]
    fn set(&mut self, t: usize, offset: usize, sym: usize) {
        self.data[t * self.width + offset + sym] = 1.0;
    }

    /// Decode each 27-wide block of every row by argmax.
    pub fn decode(&self) -> String {
        debug_assert_eq!(self.width % ALPHABET_LEN, 0);
        let mut out = String::with_capacity(self.steps * self.width / ALPHABET_LEN);
        for t in 0..self.steps {
            for block in self.row(t).chunks_exact(ALPHABET_LEN) {
                out.push(decode_symbol(block));
            }
        }
        out
    }
}

/// One-hot 27-vector for a symbol.
pub fn encode_symbol(ch: char) -> Result<[f32; ALPHABET_LEN]> {
    let idx = index_of(ch).ok_or(Error::InvalidText(format!("symbol {ch:?} not in alphabet")))?;
    let mut v = [0.0; ALPHABET_LEN];
    v[idx] = 1.0;
    Ok(v)
}

/// Symbol at the argmax of a real-valued 27-vector; ties break to the
/// lowest index.
pub fn decode_symbol(v: &[f32]) -> char {
    symbol(argmax(v))
}

/// Index of the maximum entry, lowest index on ties.
pub fn argmax(v: &[f32]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Key text padded to six slots with trailing nulls.
pub fn pad_key(key: &KeyPhrase) -> String {
    let mut s = key.as_str().to_string();
    while s.len() < KEY_STEPS {
        s.push(NULL_SYMBOL);
    }
    s
}

/// A training or evaluation example with its source texts retained.
#[derive(Debug, Clone)]
pub struct Sample {
    pub key: String,
    pub plaintext: String,
    pub ciphertext: String,
    pub x: OneHotSeq,
    pub y: OneHotSeq,
}

impl Sample {
    pub fn steps(&self) -> usize {
        self.x.steps
    }
}

fn check_pair(plaintext: &str, ciphertext: &str) -> Result<Vec<(usize, usize)>> {
    if plaintext.len() != ciphertext.len() {
        return Err(Error::InvalidText(format!(
            "plaintext length {} != ciphertext length {}",
            plaintext.len(),
            ciphertext.len()
        )));
    }
    plaintext
        .chars()
        .zip(ciphertext.chars())
        .map(|(p, c)| {
            let pi = index_of(p).filter(|&i| i < 26);
            let ci = index_of(c).filter(|&i| i < 26);
            match (pi, ci) {
                (Some(pi), Some(ci)) => Ok((pi, ci)),
                _ => Err(Error::InvalidText(format!("non-letter in message pair ({p:?}, {c:?})"))),
            }
        })
        .collect()
}

/// Decryption sample: x = key then ciphertext, y = key then plaintext,
/// both `(6 + L) x 27`.
pub fn build_decryption_sample(key: &KeyPhrase, plaintext: &str, ciphertext: &str) -> Result<Sample> {
    let pairs = check_pair(plaintext, ciphertext)?;
    let steps = KEY_STEPS + pairs.len();
    let mut x = OneHotSeq::zeros(steps, DECRYPT_WIDTH);
    let mut y = OneHotSeq::zeros(steps, DECRYPT_WIDTH);
    for (t, ch) in pad_key(key).chars().enumerate() {
        let sym = index_of(ch).expect("padded key is in-alphabet");
        x.set(t, 0, sym);
        y.set(t, 0, sym);
    }
    for (t, &(pi, ci)) in pairs.iter().enumerate() {
        x.set(KEY_STEPS + t, 0, ci);
        y.set(KEY_STEPS + t, 0, pi);
    }
    Ok(Sample {
        key: key.as_str().to_string(),
        plaintext: plaintext.to_string(),
        ciphertext: ciphertext.to_string(),
        x,
        y,
    })
}

/// Attack sample: x rows are plaintext beside ciphertext (`N x 54`), y is
/// the padded key on the first six steps and null afterward (`N x 27`).
/// N = max(L, 6); messages shorter than the key region get all-null rows.
pub fn build_attack_sample(key: &KeyPhrase, plaintext: &str, ciphertext: &str) -> Result<Sample> {
    let pairs = check_pair(plaintext, ciphertext)?;
    let steps = pairs.len().max(KEY_STEPS);
    let mut x = OneHotSeq::zeros(steps, ATTACK_WIDTH);
    let mut y = OneHotSeq::zeros(steps, ALPHABET_LEN);
    for t in 0..steps {
        match pairs.get(t) {
            Some(&(pi, ci)) => {
                x.set(t, 0, pi);
                x.set(t, ALPHABET_LEN, ci);
            }
            None => {
                x.set(t, 0, crate::alphabet::NULL_INDEX);
                x.set(t, ALPHABET_LEN, crate::alphabet::NULL_INDEX);
            }
        }
        let target = if t < KEY_STEPS {
            pad_key(key).as_bytes()[t] as char
        } else {
            NULL_SYMBOL
        };
        y.set(t, 0, index_of(target).expect("padded key is in-alphabet"));
    }
    Ok(Sample {
        key: key.as_str().to_string(),
        plaintext: plaintext.to_string(),
        ciphertext: ciphertext.to_string(),
        x,
        y,
    })
}

/// A stack of same-shape samples, laid out `B x T x D` row-major.
#[derive(Debug, Clone)]
pub struct Batch {
    pub size: usize,
    pub steps: usize,
    pub width: usize,
    pub xs: Vec<f32>,
    pub ys: Vec<f32>,
}

impl Batch {
    #[inline]
    pub fn x_of(&self, b: usize) -> &[f32] {
        let n = self.steps * self.width;
        &self.xs[b * n..(b + 1) * n]
    }

    #[inline]
    pub fn y_of(&self, b: usize) -> &[f32] {
        let n = self.steps * ALPHABET_LEN;
        &self.ys[b * n..(b + 1) * n]
    }
}

/// Stack samples into a batch, preserving order. All samples must share
/// the same step count and input width.
pub fn assemble_batch(samples: &[Sample]) -> Result<Batch> {
    let first = samples.first().ok_or(Error::InvalidConfig("empty batch".into()))?;
    let (steps, width) = (first.x.steps, first.x.width);
    let mut xs = Vec::with_capacity(samples.len() * steps * width);
    let mut ys = Vec::with_capacity(samples.len() * steps * ALPHABET_LEN);
    for s in samples {
        if s.x.steps != steps || s.x.width != width {
            return Err(Error::ShapeMismatch(format!(
                "sample shape {}x{} differs from batch shape {}x{}",
                s.x.steps, s.x.width, steps, width
            )));
        }
        xs.extend_from_slice(&s.x.data);
        ys.extend_from_slice(&s.y.data);
    }
    Ok(Batch { size: samples.len(), steps, width, xs, ys })
}
