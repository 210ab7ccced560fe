//! Brute-force model checking of formulas over word structures.
//!
//! Evaluation compiles the formula into an indexed node arena once, then runs
//! per word. Quantifier nodes memoize their truth value per assignment of
//! their free variables, which keeps the deeply nested unary quantifiers
//! produced by the rewrites tractable: the cost per word is bounded by the
//! number of nodes times `n^(free vars)` rather than by the nesting depth.

use std::collections::HashMap;

use thiserror::Error;

use crate::logic::{Formula, LoopDir, MultQ, OrderSpec};
use crate::words::{words_up_to, VarAssignment, WordStructure};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("formula has free variables: {}", .0.join(", "))]
    FreeVariables(Vec<String>),
    #[error("assignment binds `{var}` to {value}, outside 1..={len}")]
    PositionOutOfRange {
        var: String,
        value: usize,
        len: usize,
    },
    #[error("letter map width {map} does not match {bodies} body formulas")]
    MonoidWidthMismatch { map: usize, bodies: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum QuantKind {
    Exists,
    Forall,
    Maj,
    Sq,
}

#[derive(Debug)]
enum Node<'f> {
    Const(bool),
    Letter { rel: usize, var: u32 },
    Less(u32, u32),
    EqVar(u32, u32),
    Plus(u32, u32, u32),
    Times(u32, u32, u32),
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Quant { kind: QuantKind, var: u32, body: usize },
    MultQ { mq: &'f MultQ, vars: Vec<u32>, bodies: Vec<usize>, order: OrderNode },
}

#[derive(Debug)]
enum OrderNode {
    Lex,
    GenLex(Vec<LoopDir>),
    Fo { vars: Vec<u32>, node: usize },
}

/// A formula compiled for repeated evaluation.
pub struct Compiled<'f> {
    nodes: Vec<Node<'f>>,
    /// Sorted free-variable ids per node.
    free: Vec<Vec<u32>>,
    var_names: Vec<String>,
    root: usize,
}

impl<'f> Compiled<'f> {
    pub fn new(f: &'f Formula) -> Result<Compiled<'f>, EvalError> {
        let mut c = Compiled {
            nodes: Vec::new(),
            free: Vec::new(),
            var_names: Vec::new(),
            root: 0,
        };
        c.root = c.build(f)?;
        Ok(c)
    }

    fn var_id(&mut self, name: &str) -> u32 {
        match self.var_names.iter().position(|v| v == name) {
            Some(i) => i as u32,
            None => {
                self.var_names.push(name.to_string());
                (self.var_names.len() - 1) as u32
            }
        }
    }

    fn push(&mut self, node: Node<'f>, free: Vec<u32>) -> usize {
        self.nodes.push(node);
        self.free.push(free);
        self.nodes.len() - 1
    }

    fn build(&mut self, f: &'f Formula) -> Result<usize, EvalError> {
        let id = match f {
            Formula::True => self.push(Node::Const(true), vec![]),
            Formula::False => self.push(Node::Const(false), vec![]),
            Formula::Letter { rel, var } => {
                let v = self.var_id(var);
                self.push(Node::Letter { rel: *rel, var: v }, vec![v])
            }
            Formula::Less(a, b) | Formula::Eq(a, b) => {
                let va = self.var_id(a);
                let vb = self.var_id(b);
                let mut free = vec![va, vb];
                free.sort_unstable();
                free.dedup();
                let node = if matches!(f, Formula::Less(..)) {
                    Node::Less(va, vb)
                } else {
                    Node::EqVar(va, vb)
                };
                self.push(node, free)
            }
            Formula::Plus(a, b, z) | Formula::Times(a, b, z) => {
                let va = self.var_id(a);
                let vb = self.var_id(b);
                let vz = self.var_id(z);
                let mut free = vec![va, vb, vz];
                free.sort_unstable();
                free.dedup();
                let node = if matches!(f, Formula::Plus(..)) {
                    Node::Plus(va, vb, vz)
                } else {
                    Node::Times(va, vb, vz)
                };
                self.push(node, free)
            }
            Formula::Not(g) => {
                let child = self.build(g)?;
                let free = self.free[child].clone();
                self.push(Node::Not(child), free)
            }
            Formula::And(a, b) | Formula::Or(a, b) => {
                let ca = self.build(a)?;
                let cb = self.build(b)?;
                let mut free = self.free[ca].clone();
                free.extend_from_slice(&self.free[cb]);
                free.sort_unstable();
                free.dedup();
                let node = if matches!(f, Formula::And(..)) {
                    Node::And(ca, cb)
                } else {
                    Node::Or(ca, cb)
                };
                self.push(node, free)
            }
            Formula::Exists(v, g) | Formula::Forall(v, g) | Formula::Maj(v, g) | Formula::Sq(v, g) => {
                let var = self.var_id(v);
                let body = self.build(g)?;
                let free = self.free[body].iter().copied().filter(|&u| u != var).collect();
                let kind = match f {
                    Formula::Exists(..) => QuantKind::Exists,
                    Formula::Forall(..) => QuantKind::Forall,
                    Formula::Maj(..) => QuantKind::Maj,
                    _ => QuantKind::Sq,
                };
                self.push(Node::Quant { kind, var, body }, free)
            }
            Formula::MultQ(mq) => {
                if mq.bodies.len() != mq.letter_map.width() {
                    return Err(EvalError::MonoidWidthMismatch {
                        map: mq.letter_map.width(),
                        bodies: mq.bodies.len(),
                    });
                }
                let vars: Vec<u32> = mq.vars.iter().map(|v| self.var_id(v)).collect();
                let bodies: Vec<usize> = mq
                    .bodies
                    .iter()
                    .map(|b| self.build(b))
                    .collect::<Result<_, _>>()?;
                let mut free: Vec<u32> = bodies
                    .iter()
                    .flat_map(|&b| self.free[b].iter().copied())
                    .filter(|u| !vars.contains(u))
                    .collect();
                let order = match &mq.order {
                    OrderSpec::Lex => OrderNode::Lex,
                    OrderSpec::GenLex(dirs) => OrderNode::GenLex(dirs.clone()),
                    OrderSpec::Fo { vars: ovars, order } => {
                        let ovars: Vec<u32> = ovars.iter().map(|v| self.var_id(v)).collect();
                        let node = self.build(order)?;
                        free.extend(
                            self.free[node]
                                .iter()
                                .copied()
                                .filter(|u| !ovars.contains(u)),
                        );
                        OrderNode::Fo { vars: ovars, node }
                    }
                };
                free.sort_unstable();
                free.dedup();
                self.push(
                    Node::MultQ {
                        mq,
                        vars,
                        bodies,
                        order,
                    },
                    free,
                )
            }
        };
        Ok(id)
    }

    /// Free variable names of the whole formula.
    pub fn free_names(&self) -> Vec<String> {
        self.free[self.root]
            .iter()
            .map(|&v| self.var_names[v as usize].clone())
            .collect()
    }

    /// Evaluates against a word under an assignment of the free variables.
    pub fn eval(&self, word: &WordStructure, assignment: &VarAssignment) -> Result<bool, EvalError> {
        let mut values = vec![0usize; self.var_names.len()];
        for &v in &self.free[self.root] {
            let name = &self.var_names[v as usize];
            let value = assignment
                .get(name)
                .ok_or_else(|| EvalError::UnboundVariable(name.clone()))?;
            if value == 0 || value > word.len() {
                return Err(EvalError::PositionOutOfRange {
                    var: name.clone(),
                    value,
                    len: word.len(),
                });
            }
            values[v as usize] = value;
        }
        let mut run = Run {
            c: self,
            word,
            values,
            caches: self.nodes.iter().map(|_| Cache::Off).collect(),
        };
        run.init_caches();
        Ok(run.eval_node(self.root))
    }
}

const CACHE_SLOT_LIMIT: usize = 1 << 20;

enum Cache {
    Off,
    /// Dense table over the node's free-variable values: 0 unknown,
    /// 1 false, 2 true.
    Dense(Vec<u8>),
    Sparse(HashMap<u64, bool>),
}

struct Run<'c, 'f> {
    c: &'c Compiled<'f>,
    word: &'c WordStructure,
    /// Current value per variable id; 0 means unbound.
    values: Vec<usize>,
    caches: Vec<Cache>,
}

impl Run<'_, '_> {
    fn init_caches(&mut self) {
        let n = self.word.len();
        for (i, node) in self.c.nodes.iter().enumerate() {
            if !matches!(node, Node::Quant { .. } | Node::MultQ { .. }) {
                continue;
            }
            let arity = self.c.free[i].len();
            let mut slots = 1usize;
            let mut dense = true;
            for _ in 0..arity {
                match slots.checked_mul(n.max(1)) {
                    Some(s) if s <= CACHE_SLOT_LIMIT => slots = s,
                    _ => {
                        dense = false;
                        break;
                    }
                }
            }
            self.caches[i] = if dense {
                Cache::Dense(vec![0u8; slots])
            } else {
                Cache::Sparse(HashMap::new())
            };
        }
    }

    fn cache_key(&self, id: usize) -> u64 {
        let n = self.word.len().max(1) as u64;
        let mut key = 0u64;
        for &v in &self.c.free[id] {
            key = key * n + (self.values[v as usize] as u64 - 1);
        }
        key
    }

    fn eval_node(&mut self, id: usize) -> bool {
        match &self.c.nodes[id] {
            Node::Const(b) => *b,
            Node::Letter { rel, var } => self.word.bit(self.values[*var as usize], *rel),
            Node::Less(a, b) => self.values[*a as usize] < self.values[*b as usize],
            Node::EqVar(a, b) => self.values[*a as usize] == self.values[*b as usize],
            Node::Plus(a, b, z) => {
                self.values[*a as usize] + self.values[*b as usize] == self.values[*z as usize]
            }
            Node::Times(a, b, z) => {
                self.values[*a as usize] * self.values[*b as usize] == self.values[*z as usize]
            }
            Node::Not(g) => !self.eval_node(*g),
            Node::And(a, b) => {
                let (a, b) = (*a, *b);
                self.eval_node(a) && self.eval_node(b)
            }
            Node::Or(a, b) => {
                let (a, b) = (*a, *b);
                self.eval_node(a) || self.eval_node(b)
            }
            Node::Quant { .. } | Node::MultQ { .. } => {
                let key = self.cache_key(id);
                match &self.caches[id] {
                    Cache::Dense(table) => {
                        let hit = table[key as usize];
                        if hit != 0 {
                            return hit == 2;
                        }
                    }
                    Cache::Sparse(map) => {
                        if let Some(&v) = map.get(&key) {
                            return v;
                        }
                    }
                    Cache::Off => {}
                }
                let value = match &self.c.nodes[id] {
                    Node::Quant { kind, var, body } => self.eval_quant(*kind, *var, *body),
                    Node::MultQ {
                        mq,
                        vars,
                        bodies,
                        order,
                    } => self.eval_multq(mq, vars.clone(), bodies.clone(), order),
                    _ => unreachable!(),
                };
                match &mut self.caches[id] {
                    Cache::Dense(table) => table[key as usize] = if value { 2 } else { 1 },
                    Cache::Sparse(map) => {
                        map.insert(key, value);
                    }
                    Cache::Off => {}
                }
                value
            }
        }
    }

    fn eval_quant(&mut self, kind: QuantKind, var: u32, body: usize) -> bool {
        let n = self.word.len();
        let saved = self.values[var as usize];
        let mut count = 0usize;
        let mut result = match kind {
            QuantKind::Exists => false,
            QuantKind::Forall => true,
            _ => false,
        };
        for pos in 1..=n {
            self.values[var as usize] = pos;
            let holds = self.eval_node(body);
            match kind {
                QuantKind::Exists => {
                    if holds {
                        result = true;
                        break;
                    }
                }
                QuantKind::Forall => {
                    if !holds {
                        result = false;
                        break;
                    }
                }
                QuantKind::Maj | QuantKind::Sq => count += usize::from(holds),
            }
        }
        self.values[var as usize] = saved;
        match kind {
            QuantKind::Exists | QuantKind::Forall => result,
            // At least half of the positions; over the empty word 0 >= 0.
            QuantKind::Maj => 2 * count >= n,
            QuantKind::Sq => is_positive_square(count),
        }
    }

    fn eval_multq(
        &mut self,
        mq: &MultQ,
        vars: Vec<u32>,
        bodies: Vec<usize>,
        order: &OrderNode,
    ) -> bool {
        let n = self.word.len();
        let d = vars.len();
        let saved: Vec<usize> = vars.iter().map(|&v| self.values[v as usize]).collect();

        let tuples: Vec<Vec<usize>> = match order {
            OrderNode::Lex => lex_tuples(n, &vec![LoopDir::Asc; d]),
            OrderNode::GenLex(dirs) => lex_tuples(n, dirs),
            OrderNode::Fo { vars: ovars, node } => {
                match self.fo_order_tuples(d, ovars, *node) {
                    Some(ts) => ts,
                    // Not a linear order: the quantifier is false.
                    None => {
                        return false;
                    }
                }
            }
        };

        let m = &mq.monoid;
        let mut acc = m.identity();
        let mut letter = vec![false; bodies.len()];
        for tuple in &tuples {
            for (i, &v) in vars.iter().enumerate() {
                self.values[v as usize] = tuple[i];
            }
            for (i, &b) in bodies.iter().enumerate() {
                letter[i] = self.eval_node(b);
            }
            acc = m.op(acc, mq.letter_map.image(&letter));
        }
        for (i, &v) in vars.iter().enumerate() {
            self.values[v as usize] = saved[i];
        }
        mq.accept.contains(&acc)
    }

    /// All of `[1..=n]^d` sorted by the relation the order formula defines,
    /// or `None` if it is not a strict linear order under the current
    /// assignment of outer variables.
    fn fo_order_tuples(&mut self, d: usize, ovars: &[u32], node: usize) -> Option<Vec<Vec<usize>>> {
        let n = self.word.len();
        let tuples = lex_tuples(n, &vec![LoopDir::Asc; d]);
        let count = tuples.len();
        let saved: Vec<usize> = ovars.iter().map(|&v| self.values[v as usize]).collect();
        let mut rel = vec![false; count * count];
        for (i, a) in tuples.iter().enumerate() {
            for (j, b) in tuples.iter().enumerate() {
                for (k, &v) in ovars.iter().enumerate() {
                    self.values[v as usize] = if k < d { a[k] } else { b[k - d] };
                }
                rel[i * count + j] = self.eval_node(node);
            }
        }
        for (k, &v) in ovars.iter().enumerate() {
            self.values[v as usize] = saved[k];
        }
        if !is_strict_linear_order(&rel, count) {
            return None;
        }
        // Rank by number of smaller tuples.
        let mut ranked: Vec<(usize, usize)> = (0..count)
            .map(|i| ((0..count).filter(|&j| rel[j * count + i]).count(), i))
            .collect();
        ranked.sort_unstable();
        Some(ranked.into_iter().map(|(_, i)| tuples[i].clone()).collect())
    }
}

fn is_strict_linear_order(rel: &[bool], count: usize) -> bool {
    for i in 0..count {
        if rel[i * count + i] {
            return false;
        }
        for j in 0..count {
            if i != j && rel[i * count + j] == rel[j * count + i] {
                return false;
            }
        }
    }
    for i in 0..count {
        for j in 0..count {
            if !rel[i * count + j] {
                continue;
            }
            for k in 0..count {
                if rel[j * count + k] && !rel[i * count + k] {
                    return false;
                }
            }
        }
    }
    true
}

/// Enumerates `[1..=n]^d` with the first coordinate outermost, each
/// coordinate running up or down according to its direction. With all
/// directions ascending this is the lexicographic order.
pub(crate) fn lex_tuples(n: usize, dirs: &[LoopDir]) -> Vec<Vec<usize>> {
    let d = dirs.len();
    let mut out = Vec::with_capacity(n.pow(d as u32));
    let mut tuple = vec![0usize; d];
    fn rec(n: usize, dirs: &[LoopDir], level: usize, tuple: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if level == dirs.len() {
            out.push(tuple.clone());
            return;
        }
        let positions: Box<dyn Iterator<Item = usize>> = match dirs[level] {
            LoopDir::Asc => Box::new(1..=n),
            LoopDir::Desc => Box::new((1..=n).rev()),
        };
        for pos in positions {
            tuple[level] = pos;
            rec(n, dirs, level + 1, tuple, out);
        }
    }
    rec(n, dirs, 0, &mut tuple, &mut out);
    out
}

fn is_positive_square(value: usize) -> bool {
    if value == 0 {
        return false;
    }
    let r = (value as f64).sqrt().round() as usize;
    r * r == value
}

/// One-shot evaluation.
pub fn eval(f: &Formula, word: &WordStructure, assignment: &VarAssignment) -> Result<bool, EvalError> {
    Compiled::new(f)?.eval(word, assignment)
}

/// Whether the order formula (over `2d` designated variables) defines a
/// strict linear order on the `d`-tuples of the word, under the given
/// assignment of any additional free variables.
pub fn is_linear_order(
    order: &Formula,
    order_vars: &[String],
    word: &WordStructure,
    assignment: &VarAssignment,
) -> Result<bool, EvalError> {
    assert!(
        order_vars.len() % 2 == 0 && !order_vars.is_empty(),
        "order formulas take 2d designated variables"
    );
    let d = order_vars.len() / 2;
    let compiled = Compiled::new(order)?;
    let mut base = assignment.clone();
    let tuples = lex_tuples(word.len(), &vec![LoopDir::Asc; d]);
    let count = tuples.len();
    let mut rel = vec![false; count * count];
    for (i, a) in tuples.iter().enumerate() {
        for (j, b) in tuples.iter().enumerate() {
            for (k, var) in order_vars.iter().enumerate() {
                base.set(var, if k < d { a[k] } else { b[k - d] });
            }
            rel[i * count + j] = compiled.eval(word, &base)?;
        }
    }
    Ok(is_strict_linear_order(&rel, count))
}

/// Sorts all `d`-tuples by the order formula, or returns `None` when it does
/// not define a strict linear order on this word.
pub fn sorted_tuples(
    order: &Formula,
    order_vars: &[String],
    word: &WordStructure,
    assignment: &VarAssignment,
) -> Result<Option<Vec<Vec<usize>>>, EvalError> {
    let d = order_vars.len() / 2;
    let compiled = Compiled::new(order)?;
    let mut base = assignment.clone();
    let tuples = lex_tuples(word.len(), &vec![LoopDir::Asc; d]);
    let count = tuples.len();
    let mut rel = vec![false; count * count];
    for (i, a) in tuples.iter().enumerate() {
        for (j, b) in tuples.iter().enumerate() {
            for (k, var) in order_vars.iter().enumerate() {
                base.set(var, if k < d { a[k] } else { b[k - d] });
            }
            rel[i * count + j] = compiled.eval(word, &base)?;
        }
    }
    if !is_strict_linear_order(&rel, count) {
        return Ok(None);
    }
    let mut ranked: Vec<(usize, usize)> = (0..count)
        .map(|i| ((0..count).filter(|&j| rel[j * count + i]).count(), i))
        .collect();
    ranked.sort_unstable();
    Ok(Some(ranked.into_iter().map(|(_, i)| tuples[i].clone()).collect()))
}

/// The words of width `k` and length at most `n` satisfying a closed formula.
pub fn language_of(f: &Formula, width: usize, max_len: usize) -> Result<Vec<WordStructure>, EvalError> {
    language_of_threaded(f, width, max_len, 1)
}

/// As [`language_of`], splitting the word list across `threads` workers.
/// The result order is independent of the thread count.
pub fn language_of_threaded(
    f: &Formula,
    width: usize,
    max_len: usize,
    threads: usize,
) -> Result<Vec<WordStructure>, EvalError> {
    let compiled = Compiled::new(f)?;
    let free = compiled.free_names();
    if !free.is_empty() {
        return Err(EvalError::FreeVariables(free));
    }
    let words = words_up_to(width, max_len);
    let empty = VarAssignment::new();
    let flags = run_on_words(&compiled, &words, &empty, threads)?;
    Ok(words
        .into_iter()
        .zip(flags)
        .filter(|(_, keep)| *keep)
        .map(|(w, _)| w)
        .collect())
}

pub(crate) fn run_on_words(
    compiled: &Compiled<'_>,
    words: &[WordStructure],
    assignment: &VarAssignment,
    threads: usize,
) -> Result<Vec<bool>, EvalError> {
    let threads = threads.max(1).min(words.len().max(1));
    if threads == 1 {
        return words.iter().map(|w| compiled.eval(w, assignment)).collect();
    }
    let chunk = words.len().div_ceil(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = words
            .chunks(chunk)
            .map(|slice| scope.spawn(move || -> Result<Vec<bool>, EvalError> {
                slice.iter().map(|w| compiled.eval(w, assignment)).collect()
            }))
            .collect();
        let mut out = Vec::with_capacity(words.len());
        for h in handles {
            out.extend(h.join().expect("evaluation worker panicked")?);
        }
        Ok(out)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_formula;
    use crate::monoids::MonoidEnv;

    fn f(text: &str) -> Formula {
        parse_formula(text, &MonoidEnv::new()).unwrap()
    }

    fn word(bits: &str) -> WordStructure {
        WordStructure::from_bits(bits)
    }

    fn lang(text: &str, max_len: usize) -> Vec<String> {
        language_of(&f(text), 1, max_len)
            .unwrap()
            .iter()
            .map(|w| w.to_string())
            .collect()
    }

    const EXISTS_MQ: &str =
        "(mq :monoid U1 :accept (0) :dim 1 :gamma ((0 -> 1) (1 -> 0)) :order lex (x) ((letter 1 x)))";

    #[test]
    fn multq_form_of_exists() {
        let phi = f(EXISTS_MQ);
        let empty = VarAssignment::new();
        assert!(eval(&phi, &word("001"), &empty).unwrap());
        assert!(!eval(&phi, &word("00"), &empty).unwrap());
    }

    #[test]
    fn multq_on_empty_word_tests_identity() {
        // Accepting the identity makes the empty product true.
        let phi = f("(mq :monoid U1 :accept (1) :dim 1 :gamma ((0 -> 1) (1 -> 0)) :order lex (x) ((letter 1 x)))");
        assert!(eval(&phi, &WordStructure::empty(1), &VarAssignment::new()).unwrap());
        let phi = f(EXISTS_MQ);
        assert!(!eval(&phi, &WordStructure::empty(1), &VarAssignment::new()).unwrap());
    }

    #[test]
    fn exists_forall_on_empty_word() {
        let empty = WordStructure::empty(1);
        let ctx = VarAssignment::new();
        assert!(!eval(&f("(exists (x) (letter 1 x))"), &empty, &ctx).unwrap());
        assert!(eval(&f("(forall (x) (letter 1 x))"), &empty, &ctx).unwrap());
        assert!(eval(&f("(maj (x) (letter 1 x))"), &empty, &ctx).unwrap());
        assert!(!eval(&f("(sq (x) (letter 1 x))"), &empty, &ctx).unwrap());
    }

    #[test]
    fn maj_and_sq_count() {
        let ctx = VarAssignment::new();
        let maj = f("(maj (x) (letter 1 x))");
        assert!(eval(&maj, &word("101"), &ctx).unwrap());
        assert!(!eval(&maj, &word("100"), &ctx).unwrap());
        assert!(eval(&maj, &word("1100"), &ctx).unwrap());
        let sq = f("(sq (x) (letter 1 x))");
        assert!(eval(&sq, &word("1111"), &ctx).unwrap());
        assert!(!eval(&sq, &word("11"), &ctx).unwrap());
        assert!(eval(&sq, &word("010"), &ctx).unwrap());
    }

    #[test]
    fn maj_sq_agree_with_direct_counting() {
        let ctx = VarAssignment::new();
        let maj = f("(maj (x) (letter 1 x))");
        let sq = f("(sq (x) (letter 1 x))");
        for w in words_up_to(1, 7) {
            let ones = (1..=w.len()).filter(|&p| w.bit(p, 1)).count();
            assert_eq!(eval(&maj, &w, &ctx).unwrap(), 2 * ones >= w.len());
            assert_eq!(eval(&sq, &w, &ctx).unwrap(), is_positive_square(ones));
        }
    }

    #[test]
    fn plus_and_times_are_partial_relations() {
        let ctx = VarAssignment::new()
            .bind("x", 2)
            .bind("y", 3)
            .bind("z", 5);
        let w = word("000000");
        assert!(eval(&f_open("(plus x y z)"), &w, &ctx).unwrap());
        assert!(!eval(&f_open("(times x y z)"), &w, &ctx).unwrap());
        let ctx = VarAssignment::new().bind("x", 2).bind("y", 3).bind("z", 6);
        assert!(eval(&f_open("(times x y z)"), &w, &ctx).unwrap());
        // x + y beyond the word length is simply never equal to any z.
        let w3 = word("000");
        let ctx = VarAssignment::new().bind("x", 2).bind("y", 3).bind("z", 3);
        assert!(!eval(&f_open("(plus x y z)"), &w3, &ctx).unwrap());
    }

    fn f_open(text: &str) -> Formula {
        use std::collections::BTreeSet;
        let free: BTreeSet<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        crate::logic::parse_formula_with_free(text, &MonoidEnv::new(), &free).unwrap()
    }

    #[test]
    fn unbound_variables_are_reported() {
        let phi = f_open("(letter 1 x)");
        let err = eval(&phi, &word("1"), &VarAssignment::new()).unwrap_err();
        assert_eq!(err, EvalError::UnboundVariable("x".into()));
        let err = language_of(&phi, 1, 2).unwrap_err();
        assert!(matches!(err, EvalError::FreeVariables(_)));
    }

    #[test]
    fn out_of_range_bindings_are_reported() {
        let phi = f_open("(letter 1 x)");
        let ctx = VarAssignment::new().bind("x", 5).bind("y", 1).bind("z", 1);
        let err = eval(&phi, &word("1"), &ctx);
        assert!(matches!(err, Err(EvalError::PositionOutOfRange { .. })));
    }

    #[test]
    fn body_count_must_match_map_width() {
        // Built by hand to bypass parse-time validation.
        let mq = crate::logic::MultQ {
            monoid: std::sync::Arc::new(crate::monoids::u1()),
            accept: [0].into(),
            letter_map: crate::monoids::one_hot_delta(&crate::monoids::u1()),
            order: crate::logic::OrderSpec::Lex,
            vars: vec!["x".into()],
            bodies: vec![Formula::True],
        };
        let phi = Formula::MultQ(Box::new(mq));
        assert!(matches!(
            eval(&phi, &word("1"), &VarAssignment::new()),
            Err(EvalError::MonoidWidthMismatch { map: 2, bodies: 1 })
        ));
    }

    #[test]
    fn language_of_simple_formulas() {
        assert_eq!(lang("(exists (x) (letter 1 x))", 2), ["1", "0/1", "1/0", "1/1"]);
        assert_eq!(lang("false", 3), Vec::<String>::new());
    }

    #[test]
    fn language_of_parity_multq() {
        // Product over C2 counts ones mod 2; accepting the identity keeps the
        // even-ones words.
        let text = "(mq :monoid C2 :accept (0) :dim 1 :gamma ((0 -> 0) (1 -> 1)) :order lex (x) ((letter 1 x)))";
        assert_eq!(
            lang(text, 3),
            ["-", "0", "0/0", "1/1", "0/0/0", "0/1/1", "1/0/1", "1/1/0"]
        );
    }

    #[test]
    fn threaded_language_matches_sequential() {
        let text = "(mq :monoid C2 :accept (0) :dim 1 :gamma ((0 -> 0) (1 -> 1)) :order lex (x) ((letter 1 x)))";
        let phi = f(text);
        assert_eq!(
            language_of_threaded(&phi, 1, 6, 4).unwrap(),
            language_of(&phi, 1, 6).unwrap()
        );
    }

    #[test]
    fn fo_order_that_is_not_linear_makes_multq_false() {
        // `true` relates everything, so it is not irreflexive.
        let text = "(mq :monoid U1 :accept (1) :dim 1 :gamma ((0 -> 1) (1 -> 0)) :order (fo (a b) true) (x) ((letter 1 x)))";
        let phi = f(text);
        assert!(!eval(&phi, &word("0"), &VarAssignment::new()).unwrap());
        // On the empty word there are no tuples, and the trivial relation is
        // a linear order, so the identity-accepting product holds.
        assert!(eval(&phi, &WordStructure::empty(1), &VarAssignment::new()).unwrap());
    }

    #[test]
    fn fo_descending_order_reverses_the_product() {
        // Non-commutative check: words over width 2 drive two generators of
        // S3; reading right-to-left must match the reversed monoid product.
        let asc = "(mq :monoid S3 :accept (13) :dim 1 :gamma ((00 -> e) (01 -> 123) (10 -> 12) (11 -> e)) :order lex (x) ((letter 1 x) (letter 2 x)))";
        let desc = "(mq :monoid S3 :accept (13) :dim 1 :gamma ((00 -> e) (01 -> 123) (10 -> 12) (11 -> e)) :order (fo (a b) (< b a)) (x) ((letter 1 x) (letter 2 x)))";
        let rev = "(mq :monoid S3^R :accept (13) :dim 1 :gamma ((00 -> e) (01 -> 123) (10 -> 12) (11 -> e)) :order lex (x) ((letter 1 x) (letter 2 x)))";
        let env = MonoidEnv::new();
        let desc = parse_formula(desc, &env).unwrap();
        let rev = parse_formula(rev, &env).unwrap();
        let asc = parse_formula(asc, &env).unwrap();
        let ctx = VarAssignment::new();
        let mut asc_ne_desc = false;
        for w in words_up_to(2, 4) {
            let d = eval(&desc, &w, &ctx).unwrap();
            let r = eval(&rev, &w, &ctx).unwrap();
            assert_eq!(d, r, "word {w}");
            asc_ne_desc |= d != eval(&asc, &w, &ctx).unwrap();
        }
        assert!(asc_ne_desc, "fixture should distinguish the two orders");
    }

    #[test]
    fn is_linear_order_checks() {
        let w = word("000");
        let ctx = VarAssignment::new();
        let vars: Vec<String> = ["a1", "a2", "b1", "b2"].iter().map(|s| s.to_string()).collect();
        let open = |text: &str| {
            let free: std::collections::BTreeSet<String> = vars.iter().cloned().collect();
            crate::logic::parse_formula_with_free(text, &MonoidEnv::new(), &free).unwrap()
        };
        // Row-major comparison of pairs.
        let lex = open("(or (< a1 b1) (and (= a1 b1) (< a2 b2)))");
        assert!(is_linear_order(&lex, &vars, &w, &ctx).unwrap());
        // Column-major comparison: second coordinate first.
        let col = open("(or (< a2 b2) (and (= a2 b2) (< a1 b1)))");
        assert!(is_linear_order(&col, &vars, &w, &ctx).unwrap());
        // Everything related: not an order.
        let junk = open("true");
        assert!(!is_linear_order(&junk, &vars, &w, &ctx).unwrap());
    }

    #[test]
    fn lex_and_explicit_fo_lex_agree() {
        // The same quantifier with the built-in lex order and with the lex
        // order spelled out as a formula, over several fixtures.
        let cases = [
            (
                "(mq :monoid S3 :accept (e 12) :dim 2 :gamma ((0 -> 12) (1 -> 123)) :order lex (x y) ((and (letter 1 x) (letter 1 y))))",
                "(mq :monoid S3 :accept (e 12) :dim 2 :gamma ((0 -> 12) (1 -> 123)) :order (fo (a1 a2 b1 b2) (or (< a1 b1) (and (= a1 b1) (< a2 b2)))) (x y) ((and (letter 1 x) (letter 1 y))))",
            ),
            (
                "(mq :monoid C2 :accept (1) :dim 1 :gamma ((0 -> 0) (1 -> 1)) :order lex (x) ((letter 1 x)))",
                "(mq :monoid C2 :accept (1) :dim 1 :gamma ((0 -> 0) (1 -> 1)) :order (fo (a b) (< a b)) (x) ((letter 1 x)))",
            ),
            (
                "(mq :monoid U1 :accept (0) :dim 2 :gamma ((0 -> 1) (1 -> 0)) :order lex (x y) ((< x y)))",
                "(mq :monoid U1 :accept (0) :dim 2 :gamma ((0 -> 1) (1 -> 0)) :order (fo (a1 a2 b1 b2) (or (< a1 b1) (and (= a1 b1) (< a2 b2)))) (x y) ((< x y)))",
            ),
        ];
        let env = MonoidEnv::new();
        let ctx = VarAssignment::new();
        for (lex_text, fo_text) in cases {
            let lex = parse_formula(lex_text, &env).unwrap();
            let fo = parse_formula(fo_text, &env).unwrap();
            for w in words_up_to(1, 5) {
                assert_eq!(
                    eval(&lex, &w, &ctx).unwrap(),
                    eval(&fo, &w, &ctx).unwrap(),
                    "word {w}"
                );
            }
        }
    }

    #[test]
    fn genlex_tuples_follow_directions() {
        assert_eq!(
            lex_tuples(2, &[LoopDir::Asc, LoopDir::Desc]),
            vec![vec![1, 2], vec![1, 1], vec![2, 2], vec![2, 1]]
        );
    }
}
