//! Finite monoids given by multiplication tables, and maps from letters into
//! a monoid.
//!
//! Elements are indexed `0..c` in a fixed enumeration; all constructions that
//! depend on the enumeration (one-hot letter maps, accept sets written as
//! element indices) are relative to it.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::words::{Letter, WordStructure};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MonoidError {
    #[error("multiplication table is malformed: {0}")]
    BadTable(String),
    #[error("no two-sided identity element")]
    NoIdentity,
    #[error("associativity fails: ({i} {j}) {k} != {i} ({j} {k})")]
    NotAssociative { i: usize, j: usize, k: usize },
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("unknown monoid `{0}`")]
    UnknownMonoid(String),
    #[error("letter map is not total: missing image for `{0}`")]
    MissingLetter(String),
    #[error("invalid monoid syntax: {0}")]
    Parse(String),
}

/// A finite monoid: named elements, a two-sided identity, and a full
/// multiplication table. Construction checks the monoid laws.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteMonoid {
    name: String,
    elements: Vec<String>,
    identity: usize,
    table: Vec<usize>, // row-major, c * c
}

impl FiniteMonoid {
    /// Checks the table for an identity and associativity and returns the
    /// monoid if both hold.
    pub fn validate(
        name: &str,
        elements: Vec<String>,
        table: Vec<Vec<usize>>,
    ) -> Result<Self, MonoidError> {
        let c = elements.len();
        if c == 0 {
            return Err(MonoidError::BadTable("no elements".into()));
        }
        if table.len() != c {
            return Err(MonoidError::BadTable(format!(
                "expected {c} rows, found {}",
                table.len()
            )));
        }
        let mut flat = Vec::with_capacity(c * c);
        for (i, row) in table.iter().enumerate() {
            if row.len() != c {
                return Err(MonoidError::BadTable(format!(
                    "row {i} has {} entries, expected {c}",
                    row.len()
                )));
            }
            for &v in row {
                if v >= c {
                    return Err(MonoidError::BadTable(format!(
                        "entry {v} out of range in row {i}"
                    )));
                }
                flat.push(v);
            }
        }
        let identity = (0..c)
            .find(|&e| (0..c).all(|m| flat[e * c + m] == m && flat[m * c + e] == m))
            .ok_or(MonoidError::NoIdentity)?;
        for i in 0..c {
            for j in 0..c {
                let ij = flat[i * c + j];
                for k in 0..c {
                    if flat[ij * c + k] != flat[i * c + flat[j * c + k]] {
                        return Err(MonoidError::NotAssociative { i, j, k });
                    }
                }
            }
        }
        Ok(FiniteMonoid {
            name: name.to_string(),
            elements,
            identity,
            table: flat,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn size(&self) -> usize {
        self.elements.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn element_names(&self) -> &[String] {
        &self.elements
    }

    pub fn element_name(&self, idx: usize) -> &str {
        &self.elements[idx]
    }

    pub fn element_index(&self, name: &str) -> Result<usize, MonoidError> {
        self.elements
            .iter()
            .position(|e| e == name)
            .ok_or_else(|| MonoidError::UnknownElement(name.to_string()))
    }

    pub fn op(&self, a: usize, b: usize) -> usize {
        self.table[a * self.size() + b]
    }

    /// Left-to-right product of a sequence of elements; empty product is the
    /// identity.
    pub fn word_product(&self, word: &[usize]) -> usize {
        word.iter().fold(self.identity, |acc, &m| self.op(acc, m))
    }

    /// The same carrier with the transposed table.
    pub fn reversed(&self) -> FiniteMonoid {
        let c = self.size();
        let name = match self.name.strip_suffix("^R") {
            Some(base) => base.to_string(),
            None => format!("{}^R", self.name),
        };
        let mut table = vec![0; c * c];
        for i in 0..c {
            for j in 0..c {
                table[i * c + j] = self.table[j * c + i];
            }
        }
        FiniteMonoid {
            name,
            elements: self.elements.clone(),
            identity: self.identity,
            table,
        }
    }

    /// Closure of `gens` under the product, always including the identity.
    pub fn generated_by(&self, gens: &[usize]) -> Vec<usize> {
        let mut seen = vec![false; self.size()];
        seen[self.identity] = true;
        let mut out = vec![self.identity];
        let mut frontier = vec![self.identity];
        while let Some(x) = frontier.pop() {
            for &g in gens {
                let y = self.op(x, g);
                if !seen[y] {
                    seen[y] = true;
                    out.push(y);
                    frontier.push(y);
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn is_group(&self) -> bool {
        (0..self.size()).all(|a| {
            (0..self.size()).any(|b| self.op(a, b) == self.identity && self.op(b, a) == self.identity)
        })
    }
}

impl fmt::Display for FiniteMonoid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "monoid {}", self.name)?;
        writeln!(f, "elements: {}", self.elements.join(" "))?;
        writeln!(f, "identity: {}", self.elements[self.identity])?;
        let c = self.size();
        for i in 0..c {
            let row: Vec<&str> = (0..c)
                .map(|j| self.elements[self.table[i * c + j]].as_str())
                .collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Parses the monoid text format produced by [`FiniteMonoid`]'s `Display`.
pub fn parse_monoid(text: &str) -> Result<FiniteMonoid, MonoidError> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| MonoidError::Parse("empty input".into()))?;
    let name = header
        .strip_prefix("monoid ")
        .ok_or_else(|| MonoidError::Parse("expected `monoid <name>` header".into()))?
        .trim();
    let elements_line = lines
        .next()
        .and_then(|l| l.strip_prefix("elements:"))
        .ok_or_else(|| MonoidError::Parse("expected `elements:` line".into()))?;
    let elements: Vec<String> = elements_line.split_whitespace().map(String::from).collect();
    if elements.is_empty() {
        return Err(MonoidError::Parse("no elements listed".into()));
    }
    let identity_line = lines
        .next()
        .and_then(|l| l.strip_prefix("identity:"))
        .ok_or_else(|| MonoidError::Parse("expected `identity:` line".into()))?;
    let declared = identity_line.trim().to_string();
    let index_of = |name: &str| -> Result<usize, MonoidError> {
        elements
            .iter()
            .position(|e| e == name)
            .ok_or_else(|| MonoidError::UnknownElement(name.to_string()))
    };
    let declared_idx = index_of(&declared)?;
    let c = elements.len();
    let mut table = Vec::with_capacity(c);
    for i in 0..c {
        let row_line = lines
            .next()
            .ok_or_else(|| MonoidError::Parse(format!("missing table row {i}")))?;
        let row: Result<Vec<usize>, MonoidError> =
            row_line.split_whitespace().map(index_of).collect();
        table.push(row?);
    }
    let m = FiniteMonoid::validate(name, elements, table)?;
    if m.identity() != declared_idx {
        return Err(MonoidError::Parse(format!(
            "declared identity `{declared}` is not the identity"
        )));
    }
    Ok(m)
}

/// The two-element monoid `{1, 0}` under multiplication, enumerated with the
/// identity first.
pub fn u1() -> FiniteMonoid {
    FiniteMonoid::validate(
        "U1",
        vec!["1".into(), "0".into()],
        vec![vec![0, 1], vec![1, 1]],
    )
    .unwrap()
}

/// The cyclic group of order `n` under addition, elements named `0..n-1`.
pub fn cyclic(n: usize) -> FiniteMonoid {
    assert!(n >= 1);
    let elements = (0..n).map(|i| i.to_string()).collect();
    let table = (0..n)
        .map(|i| (0..n).map(|j| (i + j) % n).collect())
        .collect();
    FiniteMonoid::validate(&format!("C{n}"), elements, table).unwrap()
}

/// The one-element monoid.
pub fn trivial() -> FiniteMonoid {
    FiniteMonoid::validate("T1", vec!["1".into()], vec![vec![0]]).unwrap()
}

fn compose(p: &[usize], q: &[usize]) -> Vec<usize> {
    // Apply p first, then q.
    p.iter().map(|&i| q[i]).collect()
}

fn cycle_name(p: &[usize]) -> String {
    let n = p.len();
    let mut seen = vec![false; n];
    let mut cycles = Vec::new();
    for start in 0..n {
        if seen[start] || p[start] == start {
            seen[start] = true;
            continue;
        }
        let mut cycle = Vec::new();
        let mut cur = start;
        while !seen[cur] {
            seen[cur] = true;
            cycle.push((cur + 1).to_string());
            cur = p[cur];
        }
        cycles.push(cycle.concat());
    }
    if cycles.is_empty() {
        "e".to_string()
    } else {
        cycles.join(".")
    }
}

/// The symmetric group on `n` points, generated from the transposition of the
/// first two points and the full cycle. Elements are named by their cycle
/// decomposition (digits concatenated, cycles joined by `.`), in generation
/// order starting from the identity.
pub fn symmetric(n: usize) -> FiniteMonoid {
    assert!((2..=9).contains(&n), "supported degrees are 2..=9");
    let identity: Vec<usize> = (0..n).collect();
    let mut transposition = identity.clone();
    transposition.swap(0, 1);
    let full_cycle: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
    let gens = [transposition, full_cycle];

    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut elems: Vec<Vec<usize>> = vec![identity.clone()];
    index.insert(identity, 0);
    let mut next = 0;
    while next < elems.len() {
        let cur = elems[next].clone();
        next += 1;
        for g in &gens {
            let prod = compose(&cur, g);
            if !index.contains_key(&prod) {
                index.insert(prod.clone(), elems.len());
                elems.push(prod);
            }
        }
    }
    let c = elems.len();
    let names = elems.iter().map(|p| cycle_name(p)).collect();
    let table = (0..c)
        .map(|i| {
            (0..c)
                .map(|j| index[&compose(&elems[i], &elems[j])])
                .collect()
        })
        .collect();
    FiniteMonoid::validate(&format!("S{n}"), names, table).unwrap()
}

/// A total map from letters `{0,1}^k` to monoid elements.
///
/// Small maps are stored as explicit tables. One-hot maps over a monoid of
/// size `c` (width `c`, the one-hot encoding of `i` goes to element `i`,
/// everything else to the identity) and their blocked variant (width `l*c`,
/// a word with a single one-hot block and zeros elsewhere goes to the encoded
/// element) are kept intensionally, since `c` may make the table enormous.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LetterMap {
    Explicit {
        width: usize,
        images: BTreeMap<Letter, usize>,
    },
    OneHot {
        size: usize,
        identity: usize,
    },
    BlockOneHot {
        blocks: usize,
        block_size: usize,
        identity: usize,
    },
}

impl LetterMap {
    /// Builds an explicit map, checking totality over `{0,1}^width`.
    pub fn explicit(width: usize, images: BTreeMap<Letter, usize>) -> Result<Self, MonoidError> {
        assert!(width >= 1);
        if images.len() != 1 << width {
            for idx in 0..1usize << width {
                let letter = crate::words::index_to_letter(idx, width);
                if !images.contains_key(&letter) {
                    let bits: String = letter.iter().map(|&b| if b { '1' } else { '0' }).collect();
                    return Err(MonoidError::MissingLetter(bits));
                }
            }
        }
        for key in images.keys() {
            if key.len() != width {
                return Err(MonoidError::Parse(format!(
                    "letter of width {} in a map of width {width}",
                    key.len()
                )));
            }
        }
        Ok(LetterMap::Explicit { width, images })
    }

    pub fn width(&self) -> usize {
        match self {
            LetterMap::Explicit { width, .. } => *width,
            LetterMap::OneHot { size, .. } => *size,
            LetterMap::BlockOneHot {
                blocks, block_size, ..
            } => blocks * block_size,
        }
    }

    /// The element a letter maps to.
    pub fn image(&self, letter: &[bool]) -> usize {
        match self {
            LetterMap::Explicit { images, .. } => images[letter],
            LetterMap::OneHot { identity, .. } => match one_hot_position(letter) {
                Some(i) => i,
                None => *identity,
            },
            LetterMap::BlockOneHot {
                blocks,
                block_size,
                identity,
            } => match one_hot_position(letter) {
                Some(p) if p < blocks * block_size => p % block_size,
                _ => *identity,
            },
        }
    }
}

fn one_hot_position(letter: &[bool]) -> Option<usize> {
    let mut pos = None;
    for (i, &b) in letter.iter().enumerate() {
        if b {
            if pos.is_some() {
                return None;
            }
            pos = Some(i);
        }
    }
    pos
}

/// The fixed one-hot letter map for a monoid: width `|M|`, the one-hot
/// encoding of `i` goes to element `i`, every other bit vector to the
/// identity.
pub fn one_hot_delta(m: &FiniteMonoid) -> LetterMap {
    LetterMap::OneHot {
        size: m.size(),
        identity: m.identity(),
    }
}

/// Homomorphic extension of a letter map to a whole word; the empty word
/// goes to the identity.
pub fn gamma_extend(m: &FiniteMonoid, map: &LetterMap, w: &WordStructure) -> usize {
    debug_assert_eq!(map.width(), w.width());
    w.letters()
        .iter()
        .fold(m.identity(), |acc, letter| m.op(acc, map.image(letter)))
}

/// Parses the letter map text format: one `bits -> element` line per letter.
pub fn parse_letter_map(text: &str, m: &FiniteMonoid) -> Result<LetterMap, MonoidError> {
    let mut images = BTreeMap::new();
    let mut width = None;
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let (bits, elem) = line
            .split_once("->")
            .ok_or_else(|| MonoidError::Parse(format!("expected `bits -> element`: `{line}`")))?;
        let bits = bits.trim();
        let mut letter = Vec::with_capacity(bits.len());
        for ch in bits.chars() {
            match ch {
                '0' => letter.push(false),
                '1' => letter.push(true),
                other => return Err(MonoidError::Parse(format!("bad bit `{other}`"))),
            }
        }
        if let Some(w) = width {
            if letter.len() != w {
                return Err(MonoidError::Parse("mixed letter widths".into()));
            }
        } else {
            width = Some(letter.len());
        }
        images.insert(letter, m.element_index(elem.trim())?);
    }
    let width = width.ok_or_else(|| MonoidError::Parse("empty letter map".into()))?;
    LetterMap::explicit(width, images)
}

pub fn render_letter_map(map: &LetterMap, m: &FiniteMonoid) -> String {
    match map {
        LetterMap::Explicit { images, .. } => {
            let mut out = String::new();
            for (letter, img) in images {
                let bits: String = letter.iter().map(|&b| if b { '1' } else { '0' }).collect();
                out.push_str(&format!("{bits} -> {}\n", m.element_name(*img)));
            }
            out
        }
        LetterMap::OneHot { .. } => "onehot\n".to_string(),
        LetterMap::BlockOneHot { blocks, .. } => format!("block-onehot {blocks}\n"),
    }
}

/// Name resolution for monoids referenced in formulas and files.
///
/// Built-ins: `U1`, `T1`, `C<n>` (cyclic), `S<n>` (symmetric), and a `^R`
/// suffix for the reversed monoid of any resolvable name.
#[derive(Debug, Clone, Default)]
pub struct MonoidEnv {
    named: BTreeMap<String, Arc<FiniteMonoid>>,
}

impl MonoidEnv {
    pub fn new() -> Self {
        MonoidEnv::default()
    }

    pub fn register(&mut self, m: FiniteMonoid) {
        self.named.insert(m.name().to_string(), Arc::new(m));
    }

    pub fn resolve(&self, name: &str) -> Result<Arc<FiniteMonoid>, MonoidError> {
        if let Some(m) = self.named.get(name) {
            return Ok(m.clone());
        }
        if let Some(base) = name.strip_suffix("^R") {
            return Ok(Arc::new(self.resolve(base)?.reversed()));
        }
        if name == "U1" {
            return Ok(Arc::new(u1()));
        }
        if name == "T1" {
            return Ok(Arc::new(trivial()));
        }
        if let Some(digits) = name.strip_prefix('C') {
            if let Ok(n) = digits.parse::<usize>() {
                if n >= 1 {
                    return Ok(Arc::new(cyclic(n)));
                }
            }
        }
        if let Some(digits) = name.strip_prefix('S') {
            if let Ok(n) = digits.parse::<usize>() {
                if (2..=9).contains(&n) {
                    return Ok(Arc::new(symmetric(n)));
                }
            }
        }
        Err(MonoidError::UnknownMonoid(name.to_string()))
    }
}
