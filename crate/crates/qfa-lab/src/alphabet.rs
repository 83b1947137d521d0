//! Input alphabets and the tape convention shared by every machine type.
//!
//! Machines read `w̃ = ¢ w $`: the input framed by a left and a right
//! end-marker. End-markers are reserved tape symbols, never part of the
//! input alphabet; machine files name them `cent` and `dollar`.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AlphabetError {
    #[error("alphabet symbol {0:?} appears more than once")]
    Duplicate(char),
    #[error("symbol {0:?} is reserved for an end-marker and cannot be an input symbol")]
    Reserved(char),
    #[error("input symbol {0:?} is not in the alphabet")]
    UnknownSymbol(char),
    #[error("alphabet must not be empty")]
    Empty,
}

/// Ordered input alphabet of single-character symbols. Order matters: it
/// fixes matrix indexing in files and enumeration order in scans.
#[derive(Debug, Clone, PartialEq)]
pub struct Alphabet {
    symbols: Vec<char>,
}

pub const CENT_CHAR: char = '¢';
pub const DOLLAR_CHAR: char = '$';

impl Alphabet {
    pub fn new(symbols: Vec<char>) -> Result<Self, AlphabetError> {
        if symbols.is_empty() {
            return Err(AlphabetError::Empty);
        }
        for (i, &s) in symbols.iter().enumerate() {
            if s == CENT_CHAR || s == DOLLAR_CHAR {
                return Err(AlphabetError::Reserved(s));
            }
            if symbols[..i].contains(&s) {
                return Err(AlphabetError::Duplicate(s));
            }
        }
        Ok(Self { symbols })
    }

    pub fn ab() -> Self {
        Self::new(vec!['a', 'b']).expect("static alphabet")
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn index_of(&self, ch: char) -> Option<usize> {
        self.symbols.iter().position(|&s| s == ch)
    }

    /// Map an input string to symbol indices; rejects foreign symbols.
    pub fn encode(&self, w: &str) -> Result<Vec<usize>, AlphabetError> {
        w.chars()
            .map(|ch| self.index_of(ch).ok_or(AlphabetError::UnknownSymbol(ch)))
            .collect()
    }

    /// The framed tape `¢ w $` as tape symbols.
    pub fn tape(&self, w: &str) -> Result<Vec<TapeSym>, AlphabetError> {
        let mut tape = Vec::with_capacity(w.chars().count() + 2);
        tape.push(TapeSym::Cent);
        for idx in self.encode(w)? {
            tape.push(TapeSym::Input(idx));
        }
        tape.push(TapeSym::Dollar);
        Ok(tape)
    }

    /// All strings of length `0..=max_len`, ordered by length then by
    /// symbol order. This is the scan enumeration order.
    pub fn strings_up_to(&self, max_len: usize) -> Vec<String> {
        let mut out = vec![String::new()];
        let mut frontier = vec![String::new()];
        for _ in 0..max_len {
            let mut next = Vec::with_capacity(frontier.len() * self.symbols.len());
            for prefix in &frontier {
                for &s in &self.symbols {
                    let mut w = prefix.clone();
                    w.push(s);
                    next.push(w);
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }
}

/// One cell of the framed tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TapeSym {
    Cent,
    Input(usize),
    Dollar,
}

impl TapeSym {
    /// Display name; input symbols render as their character.
    pub fn describe(&self, alphabet: &Alphabet) -> String {
        match self {
            TapeSym::Cent => "cent".to_string(),
            TapeSym::Dollar => "dollar".to_string(),
            TapeSym::Input(i) => alphabet.symbols()[*i].to_string(),
        }
    }
}

/// Head direction on the tape. `index` orders them left, stay, right
/// for dense tables; `offset` is the position change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadMove {
    Left,
    Stay,
    Right,
}

impl HeadMove {
    pub const ALL: [HeadMove; 3] = [HeadMove::Left, HeadMove::Stay, HeadMove::Right];

    pub fn index(self) -> usize {
        match self {
            HeadMove::Left => 0,
            HeadMove::Stay => 1,
            HeadMove::Right => 2,
        }
    }

    pub fn offset(self) -> i64 {
        match self {
            HeadMove::Left => -1,
            HeadMove::Stay => 0,
            HeadMove::Right => 1,
        }
    }
}

/// Per-tape-symbol table: one payload for ¢, one for $, one per input
/// symbol in alphabet order.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolMap<T> {
    pub cent: T,
    pub dollar: T,
    pub per_input: Vec<T>,
}

impl<T> SymbolMap<T> {
    pub fn get(&self, sym: TapeSym) -> &T {
        match sym {
            TapeSym::Cent => &self.cent,
            TapeSym::Dollar => &self.dollar,
            TapeSym::Input(i) => &self.per_input[i],
        }
    }

    /// (symbol, payload) pairs in the canonical order cent, inputs, dollar.
    pub fn iter_tape(&self) -> impl Iterator<Item = (TapeSym, &T)> {
        std::iter::once((TapeSym::Cent, &self.cent))
            .chain(
                self.per_input
                    .iter()
                    .enumerate()
                    .map(|(i, t)| (TapeSym::Input(i), t)),
            )
            .chain(std::iter::once((TapeSym::Dollar, &self.dollar)))
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> SymbolMap<U> {
        SymbolMap {
            cent: f(&self.cent),
            dollar: f(&self.dollar),
            per_input: self.per_input.iter().map(&mut f).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_reserved_symbols() {
        assert_eq!(
            Alphabet::new(vec!['a', 'a']),
            Err(AlphabetError::Duplicate('a'))
        );
        assert_eq!(
            Alphabet::new(vec!['a', '$']),
            Err(AlphabetError::Reserved('$'))
        );
        assert_eq!(Alphabet::new(vec![]), Err(AlphabetError::Empty));
    }

    #[test]
    fn tape_frames_input_with_end_markers() {
        let ab = Alphabet::ab();
        let tape = ab.tape("ba").unwrap();
        assert_eq!(
            tape,
            vec![
                TapeSym::Cent,
                TapeSym::Input(1),
                TapeSym::Input(0),
                TapeSym::Dollar
            ]
        );
        assert_eq!(ab.tape("xz"), Err(AlphabetError::UnknownSymbol('x')));
    }

    #[test]
    fn string_enumeration_is_length_then_lexicographic() {
        let ab = Alphabet::ab();
        let strings = ab.strings_up_to(2);
        assert_eq!(strings, vec!["", "a", "b", "aa", "ab", "ba", "bb"]);
        assert_eq!(ab.strings_up_to(12).len(), 8191);
    }
}
