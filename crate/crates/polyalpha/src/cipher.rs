//! Classical polyalphabetic ciphers over the letters A-Z.
//!
//! Both Vigenere and Autokey encrypt by adding a keystream to the
//! plaintext modulo 26; they differ only in how the keystream continues
//! past the key phrase. Vigenere repeats the key; Autokey appends the
//! plaintext itself, so each ciphertext letter past the key depends on a
//! plaintext letter a fixed distance back.

use crate::alphabet::{letter, letters_of, KeyPhrase};
use crate::error::Result;

/// Shift a letter index by `dist` positions, wrapping mod 26.
#[inline]
pub fn caesar_shift(sym: u8, dist: i32) -> u8 {
    debug_assert!(sym < 26);
    (sym as i32 + dist).rem_euclid(26) as u8
}

fn apply_keystream<F>(text: &str, mut keystream: F, sign: i32) -> Result<String>
where
    F: FnMut(usize, &[u8]) -> u8,
{
    let msg = letters_of(text)?;
    let mut out = Vec::with_capacity(msg.len());
    for (i, &m) in msg.iter().enumerate() {
        let k = keystream(i, &out);
        let c = if sign >= 0 {
            caesar_shift(m, k as i32)
        } else {
            caesar_shift(m, -(k as i32))
        };
        out.push(c);
    }
    Ok(out.into_iter().map(letter).collect())
}

/// Vigenere encryption: ciphertext[i] = plaintext[i] + key[i mod |key|].
pub fn vigenere_encrypt(key: &KeyPhrase, plaintext: &str) -> Result<String> {
    let ks = key.indices().to_vec();
    apply_keystream(plaintext, move |i, _| ks[i % ks.len()], 1)
}

/// Vigenere decryption: plaintext[i] = ciphertext[i] - key[i mod |key|].
pub fn vigenere_decrypt(key: &KeyPhrase, ciphertext: &str) -> Result<String> {
    let ks = key.indices().to_vec();
    apply_keystream(ciphertext, move |i, _| ks[i % ks.len()], -1)
}

/// Autokey encryption: the keystream is the key phrase followed by the
/// plaintext itself.
pub fn autokey_encrypt(key: &KeyPhrase, plaintext: &str) -> Result<String> {
    let ks = key.indices().to_vec();
    let msg = letters_of(plaintext)?;
    let n = ks.len();
    apply_keystream(
        plaintext,
        move |i, _| if i < n { ks[i] } else { msg[i - n] },
        1,
    )
}

/// Autokey decryption. Recovered plaintext letters re-enter the keystream,
/// so each output feeds the key for a later position.
pub fn autokey_decrypt(key: &KeyPhrase, ciphertext: &str) -> Result<String> {
    let ks = key.indices().to_vec();
    let n = ks.len();
    apply_keystream(
        ciphertext,
        move |i, recovered| if i < n { ks[i] } else { recovered[i - n] },
        -1,
    )
}
