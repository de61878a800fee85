//! Wehrmacht Enigma I simulation: rotors I-III, reflectors A/B, plugboard.
//!
//! The machine is keyed by the initial positions of its three rotors, one
//! letter each. Because the signal passes through a reflector, enciphering
//! is self-reciprocal (running the ciphertext through an identically keyed
//! machine returns the plaintext) and no letter ever maps to itself.

use crate::alphabet::{letter, letter_index};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

const WIRING_I: &str = "EKMFLGDQVZNTOWYHXUSPAIBRCJ";
const WIRING_II: &str = "AJDKSIRUXBLHWTMCQGZNPYFVOE";
const WIRING_III: &str = "BDFHJLCPRTXVZNYEIWGAKMUSQO";
const REFLECTOR_A: &str = "EJMZALYXVBWFCRQUONTSPIKHGD";
const REFLECTOR_B: &str = "YRUHQSLDPXNGOKMIEBFZCWVJAT";

/// Interchangeable rotor types, named as on the historical machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RotorId {
    I,
    II,
    III,
}

impl RotorId {
    fn wiring(self) -> &'static str {
        match self {
            RotorId::I => WIRING_I,
            RotorId::II => WIRING_II,
            RotorId::III => WIRING_III,
        }
    }

    /// Position at which this rotor's notch carries the next rotor.
    fn notch(self) -> u8 {
        match self {
            RotorId::I => 16,   // Q
            RotorId::II => 4,   // E
            RotorId::III => 21, // V
        }
    }
}

/// Reflector (Umkehrwalze) variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReflectorId {
    A,
    B,
}

impl ReflectorId {
    fn wiring(self) -> &'static str {
        match self {
            ReflectorId::A => REFLECTOR_A,
            ReflectorId::B => REFLECTOR_B,
        }
    }
}

/// Machine setup fixed for a batch of messages: rotor order (left to
/// right), reflector, ring settings (1-based, left to right), and
/// plugboard pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnigmaConfig {
    pub rotors: [RotorId; 3],
    pub reflector: ReflectorId,
    pub rings: [u8; 3],
    #[serde(default)]
    pub plugboard: Vec<(char, char)>,
}

impl EnigmaConfig {
    pub fn new(rotors: [RotorId; 3], reflector: ReflectorId, rings: [u8; 3]) -> Self {
        Self { rotors, reflector, rings, plugboard: Vec::new() }
    }
}

impl Default for EnigmaConfig {
    /// Rotors I-II-III, reflector B, all rings at 1, empty plugboard.
    fn default() -> Self {
        Self::new([RotorId::I, RotorId::II, RotorId::III], ReflectorId::B, [1, 1, 1])
    }
}

#[derive(Debug, Clone)]
struct Rotor {
    forward: [u8; 26],
    backward: [u8; 26],
    notch: u8,
    ring: u8, // 0-based
    pos: u8,  // 0-based
}

impl Rotor {
    fn new(id: RotorId, ring: u8) -> Result<Self> {
        if !(1..=26).contains(&ring) {
            return Err(Error::InvalidConfig(format!(
                "ring setting {ring} out of range 1..=26"
            )));
        }
        let forward = perm_from_str(id.wiring());
        let mut backward = [0u8; 26];
        for (i, &w) in forward.iter().enumerate() {
            backward[w as usize] = i as u8;
        }
        Ok(Self { forward, backward, notch: id.notch(), ring: ring - 1, pos: 0 })
    }

    #[inline]
    fn offset(&self) -> u8 {
        (self.pos + 26 - self.ring) % 26
    }

    #[inline]
    fn pass_forward(&self, c: u8) -> u8 {
        let off = self.offset();
        (self.forward[((c + off) % 26) as usize] + 26 - off) % 26
    }

    #[inline]
    fn pass_backward(&self, c: u8) -> u8 {
        let off = self.offset();
        (self.backward[((c + off) % 26) as usize] + 26 - off) % 26
    }

    #[inline]
    fn at_notch(&self) -> bool {
        self.pos == self.notch
    }

    #[inline]
    fn advance(&mut self) {
        self.pos = (self.pos + 1) % 26;
    }
}

fn perm_from_str(s: &str) -> [u8; 26] {
    let mut p = [0u8; 26];
    for (i, c) in s.chars().enumerate() {
        p[i] = letter_index(c).expect("wiring tables contain only A-Z");
    }
    p
}

fn plugboard_table(pairs: &[(char, char)]) -> Result<[u8; 26]> {
    let mut table: [u8; 26] = std::array::from_fn(|i| i as u8);
    let mut used = [false; 26];
    for &(a, b) in pairs {
        let (ia, ib) = match (letter_index(a), letter_index(b)) {
            (Some(ia), Some(ib)) if ia != ib => (ia as usize, ib as usize),
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "invalid plugboard pair {a}{b}"
                )))
            }
        };
        if used[ia] || used[ib] {
            return Err(Error::InvalidConfig(format!(
                "plugboard letter reused in pair {a}{b}"
            )));
        }
        used[ia] = true;
        used[ib] = true;
        table[ia] = ib as u8;
        table[ib] = ia as u8;
    }
    Ok(table)
}

/// A configured machine with live rotor positions.
#[derive(Debug, Clone)]
pub struct Enigma {
    rotors: [Rotor; 3], // left, middle, right
    reflector: [u8; 26],
    plugboard: [u8; 26],
}

impl Enigma {
    /// Build a machine and set its rotors to `key` (three letters, leftmost
    /// rotor first).
    pub fn new(config: &EnigmaConfig, key: &str) -> Result<Self> {
        let rotors = [
            Rotor::new(config.rotors[0], config.rings[0])?,
            Rotor::new(config.rotors[1], config.rings[1])?,
            Rotor::new(config.rotors[2], config.rings[2])?,
        ];
        let mut machine = Self {
            rotors,
            reflector: perm_from_str(config.reflector.wiring()),
            plugboard: plugboard_table(&config.plugboard)?,
        };
        machine.set_key(key)?;
        Ok(machine)
    }

    /// Reset rotor positions without rebuilding wiring tables.
    pub fn set_key(&mut self, key: &str) -> Result<()> {
        let ks: Vec<u8> = key
            .chars()
            .map(|c| letter_index(c).ok_or_else(|| Error::InvalidKey(key.to_string())))
            .collect::<Result<_>>()?;
        if ks.len() != 3 {
            return Err(Error::InvalidKey(format!(
                "rotor key must be exactly 3 letters, got {key:?}"
            )));
        }
        for (rotor, &k) in self.rotors.iter_mut().zip(&ks) {
            rotor.pos = k;
        }
        Ok(())
    }

    /// Current rotor positions as letters, leftmost first.
    pub fn positions(&self) -> String {
        self.rotors.iter().map(|r| letter(r.pos)).collect()
    }

    /// Advance the rotors as the keyboard press does, before the signal
    /// flows. The middle rotor steps when the right rotor is at its notch,
    /// and also steps itself (carrying the left rotor) when sitting on its
    /// own notch -- the double-step anomaly.
    fn step(&mut self) {
        if self.rotors[1].at_notch() {
            self.rotors[1].advance();
            self.rotors[0].advance();
        } else if self.rotors[2].at_notch() {
            self.rotors[1].advance();
        }
        self.rotors[2].advance();
    }

    /// Encipher one letter, stepping the rotors first.
    pub fn encipher_char(&mut self, c: char) -> Result<char> {
        let mut sym = letter_index(c).ok_or(Error::InvalidText(format!(
            "Enigma input must be A-Z, got {c:?}"
        )))?;
        self.step();
        sym = self.plugboard[sym as usize];
        for rotor in self.rotors.iter().rev() {
            sym = rotor.pass_forward(sym);
        }
        sym = self.reflector[sym as usize];
        for rotor in self.rotors.iter() {
            sym = rotor.pass_backward(sym);
        }
        sym = self.plugboard[sym as usize];
        Ok(letter(sym))
    }

    /// Encipher a message from the current rotor positions. Deciphering is
    /// the same operation with the machine keyed identically.
    pub fn encipher(&mut self, text: &str) -> Result<String> {
        text.chars().map(|c| self.encipher_char(c)).collect()
    }
}

/// One-shot encryption with a fresh machine.
pub fn enigma_encrypt(config: &EnigmaConfig, key: &str, text: &str) -> Result<String> {
    Enigma::new(config, key)?.encipher(text)
}

/// One-shot decryption; identical to encryption by reciprocity.
pub fn enigma_decrypt(config: &EnigmaConfig, key: &str, text: &str) -> Result<String> {
    enigma_encrypt(config, key, text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn classic_vector() {
        let cfg = EnigmaConfig::default();
        assert_eq!(enigma_encrypt(&cfg, "AAA", "AAAAA").unwrap(), "BDZGO");
        assert_eq!(enigma_decrypt(&cfg, "AAA", "BDZGO").unwrap(), "AAAAA");
    }

    #[test]
    fn double_step_sequence() {
        let cfg = EnigmaConfig::default();
        let mut m = Enigma::new(&cfg, "KDU").unwrap();
        let mut seq = vec![m.positions()];
        for _ in 0..4 {
            m.encipher_char('A').unwrap();
            seq.push(m.positions());
        }
        assert_eq!(seq, ["KDU", "KDV", "KEW", "LFX", "LFY"]);
    }

    #[test]
    fn data_generation_machine_vector() {
        // Frozen from the cross-validated reference simulator (see
        // tests/enigma_oracle.rs): reflector A, rings (2, 14, 8).
        let cfg = EnigmaConfig::new(
            [RotorId::I, RotorId::II, RotorId::III],
            ReflectorId::A,
            [2, 14, 8],
        );
        assert_eq!(enigma_encrypt(&cfg, "AAA", "AAAAA").unwrap(), "LKTLX");
    }

    #[test]
    fn reciprocal_and_fixed_point_free() {
        let cfg = EnigmaConfig::new(
            [RotorId::I, RotorId::II, RotorId::III],
            ReflectorId::B,
            [2, 14, 8],
        );
        let mut r = SplitMix64::new(33);
        let plain: String = (0..500).map(|_| letter(r.letter())).collect();
        let cipher = enigma_encrypt(&cfg, "QRX", &plain).unwrap();
        assert_eq!(enigma_encrypt(&cfg, "QRX", &cipher).unwrap(), plain);
        for (p, c) in plain.chars().zip(cipher.chars()) {
            assert_ne!(p, c);
        }
    }

    #[test]
    fn ring_setting_changes_output() {
        let flat = EnigmaConfig::default();
        let mut offset = EnigmaConfig::default();
        offset.rings = [1, 1, 2];
        assert_ne!(
            enigma_encrypt(&flat, "AAA", "AAAAAAAAAA").unwrap(),
            enigma_encrypt(&offset, "AAA", "AAAAAAAAAA").unwrap()
        );
    }

    #[test]
    fn plugboard_swaps_entry_and_exit() {
        let mut cfg = EnigmaConfig::default();
        cfg.plugboard = vec![('A', 'B')];
        // Key AAA maps A -> B without a plugboard; with A<->B plugged,
        // pressing B routes through the A wiring and the resulting B swaps
        // back to A on the way out.
        assert_eq!(enigma_encrypt(&cfg, "AAA", "B").unwrap(), "A");
    }

    #[test]
    fn plugboard_rejects_reuse() {
        let mut cfg = EnigmaConfig::default();
        cfg.plugboard = vec![('A', 'B'), ('B', 'C')];
        assert!(Enigma::new(&cfg, "AAA").is_err());
    }

    #[test]
    fn rejects_bad_keys() {
        let cfg = EnigmaConfig::default();
        assert!(Enigma::new(&cfg, "AA").is_err());
        assert!(Enigma::new(&cfg, "AAAA").is_err());
        assert!(Enigma::new(&cfg, "AA-").is_err());
    }
}
