//! DFAs over bit-vector alphabets: minimization, language equivalence by
//! product construction, bounded language enumeration, and the syntactic
//! monoid computed as the transition monoid of the minimal DFA.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::monoids::{FiniteMonoid, LetterMap, MonoidError};
use crate::words::{index_to_letter, letter_to_index, words_up_to, WordStructure};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DfaError {
    #[error("widths differ: {0} vs {1}")]
    WidthMismatch(usize, usize),
    #[error("state {0} out of range (have {1} states)")]
    BadState(usize, usize),
    #[error("transition table is malformed: {0}")]
    BadTransitions(String),
    #[error("invalid dfa syntax: {0}")]
    Parse(String),
    #[error(transparent)]
    Monoid(#[from] MonoidError),
}

/// A complete deterministic automaton over `{0,1}^width`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dfa {
    name: String,
    width: usize,
    num_states: usize,
    start: usize,
    accepting: BTreeSet<usize>,
    /// `delta[state][letter index]`, letters indexed most significant bit
    /// first.
    delta: Vec<Vec<usize>>,
}

impl Dfa {
    pub fn new(
        name: &str,
        width: usize,
        num_states: usize,
        start: usize,
        accepting: BTreeSet<usize>,
        delta: Vec<Vec<usize>>,
    ) -> Result<Self, DfaError> {
        if width == 0 {
            return Err(DfaError::BadTransitions("width must be at least 1".into()));
        }
        if num_states == 0 {
            return Err(DfaError::BadTransitions("need at least one state".into()));
        }
        if start >= num_states {
            return Err(DfaError::BadState(start, num_states));
        }
        if let Some(&bad) = accepting.iter().find(|&&q| q >= num_states) {
            return Err(DfaError::BadState(bad, num_states));
        }
        let letters = 1usize << width;
        if delta.len() != num_states {
            return Err(DfaError::BadTransitions(format!(
                "expected {num_states} rows, found {}",
                delta.len()
            )));
        }
        for (q, row) in delta.iter().enumerate() {
            if row.len() != letters {
                return Err(DfaError::BadTransitions(format!(
                    "state {q} has {} transitions, expected {letters}",
                    row.len()
                )));
            }
            if let Some(&bad) = row.iter().find(|&&t| t >= num_states) {
                return Err(DfaError::BadState(bad, num_states));
            }
        }
        Ok(Dfa {
            name: name.to_string(),
            width,
            num_states,
            start,
            accepting,
            delta,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn accepting(&self) -> &BTreeSet<usize> {
        &self.accepting
    }

    pub fn step(&self, state: usize, letter_idx: usize) -> usize {
        self.delta[state][letter_idx]
    }

    pub fn accepts(&self, w: &WordStructure) -> Result<bool, DfaError> {
        if w.width() != self.width {
            return Err(DfaError::WidthMismatch(self.width, w.width()));
        }
        let mut q = self.start;
        for letter in w.letters() {
            q = self.delta[q][letter_to_index(letter)];
        }
        Ok(self.accepting.contains(&q))
    }

    /// Language-equivalent DFA with the minimum number of states, restricted
    /// to the reachable part and renumbered canonically (breadth-first from
    /// the start state in letter order).
    pub fn minimize(&self) -> Dfa {
        let letters = 1usize << self.width;
        // Reachable restriction.
        let mut reach = Vec::new();
        let mut seen = vec![false; self.num_states];
        seen[self.start] = true;
        reach.push(self.start);
        let mut i = 0;
        while i < reach.len() {
            let q = reach[i];
            i += 1;
            for a in 0..letters {
                let t = self.delta[q][a];
                if !seen[t] {
                    seen[t] = true;
                    reach.push(t);
                }
            }
        }
        // Partition refinement on the reachable states.
        let mut class = vec![usize::MAX; self.num_states];
        for &q in &reach {
            class[q] = usize::from(self.accepting.contains(&q));
        }
        loop {
            let mut signature: HashMap<Vec<usize>, usize> = HashMap::new();
            let mut next_class = vec![usize::MAX; self.num_states];
            for &q in &reach {
                let mut sig = Vec::with_capacity(letters + 1);
                sig.push(class[q]);
                for a in 0..letters {
                    sig.push(class[self.delta[q][a]]);
                }
                let fresh = signature.len();
                next_class[q] = *signature.entry(sig).or_insert(fresh);
            }
            if reach.iter().all(|&q| next_class[q] == class[q]) {
                break;
            }
            class = next_class;
        }
        // Canonical numbering by BFS over classes.
        let mut order: HashMap<usize, usize> = HashMap::new();
        let mut reps = Vec::new();
        let mut queue = VecDeque::new();
        order.insert(class[self.start], 0);
        reps.push(self.start);
        queue.push_back(self.start);
        while let Some(q) = queue.pop_front() {
            for a in 0..letters {
                let t = self.delta[q][a];
                if !order.contains_key(&class[t]) {
                    order.insert(class[t], reps.len());
                    reps.push(t);
                    queue.push_back(t);
                }
            }
        }
        let delta = reps
            .iter()
            .map(|&q| {
                (0..letters)
                    .map(|a| order[&class[self.delta[q][a]]])
                    .collect()
            })
            .collect();
        let accepting = reps
            .iter()
            .enumerate()
            .filter(|(_, &q)| self.accepting.contains(&q))
            .map(|(i, _)| i)
            .collect();
        Dfa {
            name: self.name.clone(),
            width: self.width,
            num_states: reps.len(),
            start: 0,
            accepting,
            delta,
        }
    }

    pub fn complement(&self) -> Dfa {
        let accepting = (0..self.num_states)
            .filter(|q| !self.accepting.contains(q))
            .collect();
        Dfa {
            name: format!("not_{}", self.name),
            accepting,
            ..self.clone()
        }
    }

    /// Exactly the accepted words of length at most `n`, in shortlex order.
    pub fn lang_upto(&self, n: usize) -> Vec<WordStructure> {
        words_up_to(self.width, n)
            .into_iter()
            .filter(|w| self.accepts(w).unwrap())
            .collect()
    }
}

/// Whether two DFAs accept the same language, by breadth-first search over
/// the product automaton.
pub fn equivalent(a: &Dfa, b: &Dfa) -> Result<bool, DfaError> {
    Ok(find_difference(a, b)?.is_none())
}

/// A shortest word accepted by exactly one of the two DFAs, if any.
pub fn find_difference(a: &Dfa, b: &Dfa) -> Result<Option<WordStructure>, DfaError> {
    if a.width != b.width {
        return Err(DfaError::WidthMismatch(a.width, b.width));
    }
    let letters = 1usize << a.width;
    let mut seen = vec![false; a.num_states * b.num_states];
    let mut queue = VecDeque::new();
    seen[a.start * b.num_states + b.start] = true;
    queue.push_back((a.start, b.start, Vec::new()));
    while let Some((qa, qb, path)) = queue.pop_front() {
        if a.accepting.contains(&qa) != b.accepting.contains(&qb) {
            let letters = path
                .iter()
                .map(|&idx| index_to_letter(idx, a.width))
                .collect();
            return Ok(Some(WordStructure::new(a.width, letters).unwrap()));
        }
        for l in 0..letters {
            let ta = a.delta[qa][l];
            let tb = b.delta[qb][l];
            if !seen[ta * b.num_states + tb] {
                seen[ta * b.num_states + tb] = true;
                let mut next = path.clone();
                next.push(l);
                queue.push_back((ta, tb, next));
            }
        }
    }
    Ok(None)
}

/// The syntactic monoid of a DFA's language together with the syntactic
/// homomorphism on letters and the accepting element set.
#[derive(Debug, Clone)]
pub struct SyntacticMonoidResult {
    pub monoid: FiniteMonoid,
    pub letter_images: LetterMap,
    pub accept_set: BTreeSet<usize>,
}

/// Computes the transition monoid of the minimal DFA. Elements are named by
/// the shortlex-least word inducing each transition function (the empty word
/// as `-`), which makes output stable across equivalent inputs.
pub fn syntactic_monoid(d: &Dfa) -> SyntacticMonoidResult {
    let m = d.minimize();
    let n = m.num_states;
    let letters = 1usize << m.width;

    let identity: Vec<usize> = (0..n).collect();
    let letter_fn: Vec<Vec<usize>> = (0..letters)
        .map(|a| (0..n).map(|q| m.delta[q][a]).collect())
        .collect();

    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut elems: Vec<Vec<usize>> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut queue = VecDeque::new();
    index.insert(identity.clone(), 0);
    elems.push(identity.clone());
    names.push("-".to_string());
    queue.push_back((identity, String::new()));
    while let Some((f, word)) = queue.pop_front() {
        for a in 0..letters {
            let g: Vec<usize> = f.iter().map(|&q| letter_fn[a][q]).collect();
            if !index.contains_key(&g) {
                let bits: String = index_to_letter(a, m.width)
                    .iter()
                    .map(|&b| if b { '1' } else { '0' })
                    .collect();
                let next_word = if word.is_empty() {
                    bits
                } else {
                    format!("{word}/{bits}")
                };
                index.insert(g.clone(), elems.len());
                elems.push(g.clone());
                names.push(next_word.clone());
                queue.push_back((g, next_word));
            }
        }
    }
    let c = elems.len();
    let compose = |f: &[usize], g: &[usize]| -> Vec<usize> { f.iter().map(|&q| g[q]).collect() };
    let table: Vec<Vec<usize>> = (0..c)
        .map(|i| {
            (0..c)
                .map(|j| index[&compose(&elems[i], &elems[j])])
                .collect()
        })
        .collect();
    let monoid = FiniteMonoid::validate(&format!("syn_{}", m.name), names, table).unwrap();

    let mut images = BTreeMap::new();
    for a in 0..letters {
        images.insert(index_to_letter(a, m.width), index[&letter_fn[a]]);
    }
    let letter_images = LetterMap::explicit(m.width, images).unwrap();

    let accept_set = (0..c)
        .filter(|&e| m.accepting.contains(&elems[e][m.start]))
        .collect();

    SyntacticMonoidResult {
        monoid,
        letter_images,
        accept_set,
    }
}

/// The DFA whose states are monoid elements, reading letters by right
/// multiplication with their images; accepts exactly the preimage of
/// `accept` under the homomorphic extension of `images`.
pub fn dfa_from_recognizer(
    m: &FiniteMonoid,
    images: &LetterMap,
    accept: &BTreeSet<usize>,
    width: usize,
) -> Dfa {
    let letters = 1usize << width;
    let delta = (0..m.size())
        .map(|e| {
            (0..letters)
                .map(|a| m.op(e, images.image(&index_to_letter(a, width))))
                .collect()
        })
        .collect();
    Dfa::new(
        &format!("rec_{}", m.name()),
        width,
        m.size(),
        m.identity(),
        accept.clone(),
        delta,
    )
    .unwrap()
}

impl fmt::Display for Dfa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dfa {}", self.name)?;
        writeln!(f, "width: {}", self.width)?;
        writeln!(f, "states: {}", self.num_states)?;
        writeln!(f, "start: {}", self.start)?;
        let accept: Vec<String> = self.accepting.iter().map(|q| q.to_string()).collect();
        writeln!(f, "accept: {}", accept.join(" "))?;
        for q in 0..self.num_states {
            for a in 0..1usize << self.width {
                let bits: String = index_to_letter(a, self.width)
                    .iter()
                    .map(|&b| if b { '1' } else { '0' })
                    .collect();
                writeln!(f, "{q} {bits} -> {}", self.delta[q][a])?;
            }
        }
        Ok(())
    }
}

/// Parses the DFA text format produced by `Display`.
pub fn parse_dfa(text: &str) -> Result<Dfa, DfaError> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let name = lines
        .next()
        .and_then(|l| l.strip_prefix("dfa "))
        .ok_or_else(|| DfaError::Parse("expected `dfa <name>` header".into()))?
        .trim()
        .to_string();
    let field = |line: Option<&str>, key: &str| -> Result<String, DfaError> {
        line.and_then(|l| l.strip_prefix(key))
            .map(|v| v.trim().to_string())
            .ok_or_else(|| DfaError::Parse(format!("expected `{key}` line")))
    };
    let width: usize = field(lines.next(), "width:")?
        .parse()
        .map_err(|_| DfaError::Parse("bad width".into()))?;
    let num_states: usize = field(lines.next(), "states:")?
        .parse()
        .map_err(|_| DfaError::Parse("bad state count".into()))?;
    let start: usize = field(lines.next(), "start:")?
        .parse()
        .map_err(|_| DfaError::Parse("bad start state".into()))?;
    let accept_line = field(lines.next(), "accept:")?;
    let accepting: Result<BTreeSet<usize>, DfaError> = accept_line
        .split_whitespace()
        .map(|s| {
            s.parse()
                .map_err(|_| DfaError::Parse("bad accept state".into()))
        })
        .collect();
    if width == 0 || width > 16 {
        return Err(DfaError::Parse("width out of range 1..=16".into()));
    }
    let letters = 1usize << width;
    let mut delta = vec![vec![usize::MAX; letters]; num_states];
    for line in lines {
        let (lhs, target) = line
            .split_once("->")
            .ok_or_else(|| DfaError::Parse(format!("expected `state bits -> state`: `{line}`")))?;
        let mut parts = lhs.split_whitespace();
        let state: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| DfaError::Parse(format!("bad source state in `{line}`")))?;
        let bits = parts
            .next()
            .ok_or_else(|| DfaError::Parse(format!("missing letter in `{line}`")))?;
        if bits.len() != width || bits.chars().any(|c| c != '0' && c != '1') {
            return Err(DfaError::Parse(format!("bad letter `{bits}`")));
        }
        let letter_idx = bits
            .chars()
            .fold(0usize, |acc, c| acc << 1 | usize::from(c == '1'));
        let target: usize = target
            .trim()
            .parse()
            .map_err(|_| DfaError::Parse(format!("bad target state in `{line}`")))?;
        if state >= num_states {
            return Err(DfaError::BadState(state, num_states));
        }
        delta[state][letter_idx] = target;
    }
    for (q, row) in delta.iter().enumerate() {
        for (a, &t) in row.iter().enumerate() {
            if t == usize::MAX {
                let bits: String = index_to_letter(a, width)
                    .iter()
                    .map(|&b| if b { '1' } else { '0' })
                    .collect();
                return Err(DfaError::Parse(format!(
                    "missing transition for state {q} on `{bits}`"
                )));
            }
        }
    }
    Dfa::new(&name, width, num_states, start, accepting?, delta)
}

/// Fixture DFAs used across the test suites.
pub mod fixtures {
    use super::*;

    /// Accepts every word of width `k`.
    pub fn all_words(k: usize) -> Dfa {
        Dfa::new("all", k, 1, 0, [0].into(), vec![vec![0; 1 << k]]).unwrap()
    }

    /// Rejects every word of width `k`.
    pub fn no_words(k: usize) -> Dfa {
        Dfa::new("none", k, 1, 0, BTreeSet::new(), vec![vec![0; 1 << k]]).unwrap()
    }

    /// Width 1, accepts words with an even number of 1s.
    pub fn even_ones() -> Dfa {
        Dfa::new("parity", 1, 2, 0, [0].into(), vec![vec![0, 1], vec![1, 0]]).unwrap()
    }

    /// Width 1, accepts words containing at least one 1.
    pub fn contains_one() -> Dfa {
        Dfa::new(
            "contains1",
            1,
            2,
            0,
            [1].into(),
            vec![vec![0, 1], vec![1, 1]],
        )
        .unwrap()
    }

    /// Width 1, accepts words containing `11` as a factor.
    pub fn contains_double_one() -> Dfa {
        Dfa::new(
            "contains11",
            1,
            3,
            0,
            [2].into(),
            vec![vec![0, 1], vec![0, 2], vec![2, 2]],
        )
        .unwrap()
    }
}
