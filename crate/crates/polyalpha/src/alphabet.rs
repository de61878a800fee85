//! The 27-symbol working alphabet: the uppercase Roman letters `A..Z`
//! (indices 0..25) followed by the null symbol `-` (index 26).
//!
//! Message bodies contain only letters; the null symbol appears solely as
//! key padding in encoded samples.

use crate::error::{Error, Result};

/// Number of letters `A..Z`.
pub const LETTERS: usize = 26;

/// Total symbol count including the null symbol.
pub const ALPHABET_LEN: usize = 27;

/// The null (padding) symbol.
pub const NULL_SYMBOL: char = '-';

/// Index of the null symbol.
pub const NULL_INDEX: usize = 26;

/// All 27 symbols in index order.
pub const SYMBOLS: [char; ALPHABET_LEN] = [
    'A', 'B', 'C', 'D', 'E', 'F', 'G', 'H', 'I', 'J', 'K', 'L', 'M', 'N', 'O', 'P', 'Q', 'R', 'S',
    'T', 'U', 'V', 'W', 'X', 'Y', 'Z', '-',
];

/// Index of a symbol, or `None` for characters outside the alphabet.
#[inline]
pub fn index_of(c: char) -> Option<usize> {
    match c {
        'A'..='Z' => Some(c as usize - 'A' as usize),
        NULL_SYMBOL => Some(NULL_INDEX),
        _ => None,
    }
}

/// Index of a letter `A..Z`, rejecting the null symbol.
#[inline]
pub fn letter_index(c: char) -> Option<u8> {
    match c {
        'A'..='Z' => Some(c as u8 - b'A'),
        _ => None,
    }
}

/// Symbol at `index`; panics if `index >= 27`.
#[inline]
pub fn symbol(index: usize) -> char {
    SYMBOLS[index]
}

/// Letter at `index` 0..26.
#[inline]
pub fn letter(index: u8) -> char {
    debug_assert!(index < LETTERS as u8);
    (b'A' + index) as char
}

/// Converts a message over `A..Z` to letter indices.
pub fn letters_of(text: &str) -> Result<Vec<u8>> {
    text.chars()
        .map(|c| letter_index(c).ok_or_else(|| Error::InvalidText(format!("character {c:?} is not in A..Z"))))
        .collect()
}

/// A cipher keyphrase: 1 to 6 characters drawn from `A..Z`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KeyPhrase {
    text: String,
    indices: Vec<u8>,
}

/// Maximum keyphrase length; shorter keys are null-padded to this width
/// when encoded.
pub const MAX_KEY_LEN: usize = 6;

impl KeyPhrase {
    pub fn new(text: &str) -> Result<Self> {
        if text.is_empty() {
            return Err(Error::InvalidKey("key must not be empty".into()));
        }
        if text.chars().count() > MAX_KEY_LEN {
            return Err(Error::InvalidKey(format!(
                "key {text:?} exceeds the maximum length of {MAX_KEY_LEN}"
            )));
        }
        let indices = text
            .chars()
            .map(|c| {
                letter_index(c).ok_or_else(|| Error::InvalidKey(format!("character {c:?} is not in A..Z")))
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(Self { text: text.to_owned(), indices })
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    /// Key length `z`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        false // by construction 1..=6 characters
    }

    /// Letter indices of the key characters.
    pub fn indices(&self) -> &[u8] {
        &self.indices
    }
}

impl std::fmt::Display for KeyPhrase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.text)
    }
}

impl std::str::FromStr for KeyPhrase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::new(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_roundtrip() {
        for (i, &c) in SYMBOLS.iter().enumerate() {
            assert_eq!(index_of(c), Some(i));
            assert_eq!(symbol(i), c);
        }
        assert_eq!(SYMBOLS.len(), 27);
        assert_eq!(index_of('-'), Some(26));
        assert_eq!(index_of('a'), None);
        assert_eq!(index_of(' '), None);
    }

    #[test]
    fn letter_index_rejects_null() {
        assert_eq!(letter_index('-'), None);
        assert_eq!(letter_index('A'), Some(0));
        assert_eq!(letter_index('Z'), Some(25));
    }

    #[test]
    fn keyphrase_bounds() {
        assert!(KeyPhrase::new("").is_err());
        assert!(KeyPhrase::new("ABCDEFG").is_err());
        assert!(KeyPhrase::new("KE-").is_err());
        assert!(KeyPhrase::new("key").is_err());
        let k = KeyPhrase::new("KEY").unwrap();
        assert_eq!(k.len(), 3);
        assert_eq!(k.indices(), &[10, 4, 24]);
        assert_eq!(KeyPhrase::new("ABCDEF").unwrap().len(), 6);
    }
}
