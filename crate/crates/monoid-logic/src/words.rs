//! Finite words over bit-vector alphabets, viewed as logical structures.
//!
//! A word of width `k` is a sequence of letters from `{0,1}^k`. Position `i`
//! (1-based) satisfies the unary predicate `R_j` exactly when bit `j` of its
//! letter is set, and positions carry the natural order `1 < 2 < ... < n`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// A single letter: `k` bits, one per unary relation.
pub type Letter = Vec<bool>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WordError {
    #[error("letter at position {position} has width {found}, expected {expected}")]
    LetterWidthMismatch {
        position: usize,
        found: usize,
        expected: usize,
    },
    #[error("word width must be at least 1")]
    ZeroWidth,
    #[error("the order relation is not a strict linear order: {0}")]
    NotLinearOrder(String),
    #[error("invalid word syntax: {0}")]
    Parse(String),
}

/// A finite word over `{0,1}^k` with 1-based positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WordStructure {
    width: usize,
    letters: Vec<Letter>,
}

impl WordStructure {
    pub fn new(width: usize, letters: Vec<Letter>) -> Result<Self, WordError> {
        if width == 0 {
            return Err(WordError::ZeroWidth);
        }
        for (i, letter) in letters.iter().enumerate() {
            if letter.len() != width {
                return Err(WordError::LetterWidthMismatch {
                    position: i + 1,
                    found: letter.len(),
                    expected: width,
                });
            }
        }
        Ok(WordStructure { width, letters })
    }

    pub fn empty(width: usize) -> Self {
        WordStructure {
            width: width.max(1),
            letters: Vec::new(),
        }
    }

    /// Builds a width-1 word from a string of `0`/`1` characters.
    pub fn from_bits(bits: &str) -> Self {
        let letters = bits.chars().map(|c| vec![c == '1']).collect();
        WordStructure { width: 1, letters }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    /// Letter at 1-based position `pos`.
    pub fn letter(&self, pos: usize) -> &Letter {
        &self.letters[pos - 1]
    }

    /// Whether relation `rel` (1-based) holds at position `pos` (1-based).
    /// Relations beyond the width never hold.
    pub fn bit(&self, pos: usize, rel: usize) -> bool {
        rel >= 1 && rel <= self.width && self.letters[pos - 1][rel - 1]
    }

    /// Parses the word text format: `/`-separated bit strings, `-` for the
    /// empty word. The width of `-` defaults to 1.
    pub fn parse(text: &str) -> Result<Self, WordError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(WordError::Parse("empty input".into()));
        }
        if text == "-" {
            return Ok(WordStructure::empty(1));
        }
        let mut letters = Vec::new();
        let mut width = None;
        for (i, chunk) in text.split('/').enumerate() {
            if chunk.is_empty() {
                return Err(WordError::Parse(format!(
                    "empty letter at position {}",
                    i + 1
                )));
            }
            let mut letter = Vec::with_capacity(chunk.len());
            for c in chunk.chars() {
                match c {
                    '0' => letter.push(false),
                    '1' => letter.push(true),
                    other => {
                        return Err(WordError::Parse(format!("unexpected character `{other}`")))
                    }
                }
            }
            match width {
                None => width = Some(letter.len()),
                Some(w) if w != letter.len() => {
                    return Err(WordError::LetterWidthMismatch {
                        position: i + 1,
                        found: letter.len(),
                        expected: w,
                    })
                }
                _ => {}
            }
            letters.push(letter);
        }
        WordStructure::new(width.unwrap(), letters)
    }
}

impl fmt::Display for WordStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "-");
        }
        for (i, letter) in self.letters.iter().enumerate() {
            if i > 0 {
                write!(f, "/")?;
            }
            for &b in letter {
                write!(f, "{}", if b { '1' } else { '0' })?;
            }
        }
        Ok(())
    }
}

/// An assignment of first-order variables to positions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VarAssignment {
    bindings: BTreeMap<String, usize>,
}

impl VarAssignment {
    pub fn new() -> Self {
        VarAssignment::default()
    }

    pub fn bind(mut self, var: &str, pos: usize) -> Self {
        self.bindings.insert(var.to_string(), pos);
        self
    }

    pub fn set(&mut self, var: &str, pos: usize) {
        self.bindings.insert(var.to_string(), pos);
    }

    pub fn get(&self, var: &str) -> Option<usize> {
        self.bindings.get(var).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.bindings.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// A finite structure with elements `1..=size`, an explicit strict order
/// given as a set of pairs, and `k` unary relations given as member lists.
#[derive(Debug, Clone)]
pub struct OrderedStructure {
    pub size: usize,
    /// Pairs `(a, b)` meaning `a < b`.
    pub less: Vec<(usize, usize)>,
    /// One member list per unary relation, elements 1-based.
    pub relations: Vec<Vec<usize>>,
}

/// Reads off the word associated with a linearly ordered structure: position
/// `i` of the result is the bit vector of relation memberships of the `i`-th
/// element in order.
pub fn associated_string(s: &OrderedStructure) -> Result<WordStructure, WordError> {
    let n = s.size;
    let width = s.relations.len();
    if width == 0 {
        return Err(WordError::ZeroWidth);
    }
    let mut rel = vec![vec![false; n + 1]; n + 1];
    for &(a, b) in &s.less {
        if a == 0 || b == 0 || a > n || b > n {
            return Err(WordError::NotLinearOrder(format!(
                "pair ({a}, {b}) outside universe 1..={n}"
            )));
        }
        rel[a][b] = true;
    }
    for a in 1..=n {
        if rel[a][a] {
            return Err(WordError::NotLinearOrder(format!("{a} < {a} (not irreflexive)")));
        }
        for b in 1..=n {
            if a != b && rel[a][b] == rel[b][a] {
                let what = if rel[a][b] { "antisymmetry" } else { "totality" };
                return Err(WordError::NotLinearOrder(format!(
                    "{what} fails on ({a}, {b})"
                )));
            }
        }
    }
    for a in 1..=n {
        for b in 1..=n {
            for c in 1..=n {
                if rel[a][b] && rel[b][c] && !rel[a][c] {
                    return Err(WordError::NotLinearOrder(format!(
                        "transitivity fails on ({a}, {b}, {c})"
                    )));
                }
            }
        }
    }
    // Rank of an element = number of elements below it.
    let mut by_rank = vec![0usize; n];
    for a in 1..=n {
        let rank = (1..=n).filter(|&b| rel[b][a]).count();
        by_rank[rank] = a;
    }
    let member = |rel_idx: usize, elem: usize| s.relations[rel_idx].contains(&elem);
    let letters = by_rank
        .iter()
        .map(|&elem| (0..width).map(|j| member(j, elem)).collect())
        .collect();
    WordStructure::new(width, letters)
}

/// The canonical structure view of a word: universe `1..=n` with the natural
/// order and one relation per bit.
pub fn structure_view(w: &WordStructure) -> OrderedStructure {
    let n = w.len();
    let mut less = Vec::new();
    for a in 1..=n {
        for b in (a + 1)..=n {
            less.push((a, b));
        }
    }
    let relations = (1..=w.width())
        .map(|rel| (1..=n).filter(|&pos| w.bit(pos, rel)).collect())
        .collect();
    OrderedStructure {
        size: n,
        less,
        relations,
    }
}

/// All words of width `k` and length at most `n`, shortest first and
/// lexicographic within a length (`0` before `1`, leftmost letter most
/// significant).
pub fn words_up_to(width: usize, max_len: usize) -> Vec<WordStructure> {
    assert!(width >= 1, "word width must be at least 1");
    let letter_count = 1usize << width;
    let mut out = Vec::new();
    for len in 0..=max_len {
        // Count through letter indices like an odometer.
        let mut digits = vec![0usize; len];
        loop {
            let letters = digits
                .iter()
                .map(|&d| index_to_letter(d, width))
                .collect::<Vec<_>>();
            out.push(WordStructure {
                width,
                letters,
            });
            let mut i = len;
            loop {
                if i == 0 {
                    break;
                }
                digits[i - 1] += 1;
                if digits[i - 1] < letter_count {
                    break;
                }
                digits[i - 1] = 0;
                i -= 1;
            }
            if i == 0 {
                break;
            }
        }
    }
    out
}

/// Letter whose bits, read left to right, are the binary digits of `idx`
/// (most significant first).
pub fn index_to_letter(idx: usize, width: usize) -> Letter {
    (0..width).map(|j| idx >> (width - 1 - j) & 1 == 1).collect()
}

/// Inverse of [`index_to_letter`].
pub fn letter_to_index(letter: &[bool]) -> usize {
    letter.iter().fold(0, |acc, &b| acc << 1 | usize::from(b))
}
