//! Semantics-preserving rewrites on multiplication quantifiers.
//!
//! Three passes, each verifiable against the brute-force language oracle:
//!
//! - [`one_hot_normalize`]: replace an arbitrary letter map by the fixed
//!   one-hot map of the monoid, with element-indicator body formulas;
//! - [`collapse_lex`] / [`unarize`]: replace a dimension-`d` quantifier over
//!   a (generalized) lexicographic order by `d` nested unary quantifiers,
//!   switching to the reversed monoid at each descending coordinate;
//! - [`apply_enumerator`]: replace a quantifier over a formula-defined order
//!   by a generalized-lex quantifier driven by a for-program that realizes
//!   the same order, with a blocked one-hot letter map.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::eval::{self, Compiled, EvalError};
use crate::forprog::{ForProgError, ForProgram};
use crate::logic::{Formula, LoopDir, MultQ, OrderSpec};
use crate::monoids::{one_hot_delta, FiniteMonoid, LetterMap};
use crate::words::{words_up_to, VarAssignment, WordStructure};

#[derive(Debug, Error)]
pub enum RewriteError {
    #[error("multiplication quantifier still has an explicit letter map; run the one-hot pass first")]
    NotNormalized,
    #[error("multiplication quantifier does not use a lex or generalized-lex order")]
    NotLex,
    #[error("enumerator outputs {found}-tuples but the quantifier has dimension {expected}")]
    EnumeratorArityMismatch { found: usize, expected: usize },
    #[error("order formula is not a strict linear order on word `{word}`")]
    OrderNotLinear { word: String },
    #[error("enumerator disagrees with the order formula on word `{word}`")]
    OrderMismatch { word: String },
    #[error("letter map of width {0} is too wide to expand")]
    MapTooWide(usize),
    #[error("unknown pass `{0}` (expected onehot, collapse, unarize, or enumerator)")]
    UnknownPass(String),
    #[error("the enumerator pass needs a for-program")]
    MissingProgram,
    #[error(transparent)]
    ForProg(#[from] ForProgError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

fn map_bodies(f: &Formula, rewrite: &mut impl FnMut(&MultQ, Vec<Formula>) -> Result<Formula, RewriteError>) -> Result<Formula, RewriteError> {
    Ok(match f {
        Formula::True
        | Formula::False
        | Formula::Letter { .. }
        | Formula::Less(..)
        | Formula::Eq(..)
        | Formula::Plus(..)
        | Formula::Times(..) => f.clone(),
        Formula::Not(g) => Formula::not(map_bodies(g, rewrite)?),
        Formula::And(a, b) => Formula::and(map_bodies(a, rewrite)?, map_bodies(b, rewrite)?),
        Formula::Or(a, b) => Formula::or(map_bodies(a, rewrite)?, map_bodies(b, rewrite)?),
        Formula::Exists(v, g) => Formula::Exists(v.clone(), Box::new(map_bodies(g, rewrite)?)),
        Formula::Forall(v, g) => Formula::Forall(v.clone(), Box::new(map_bodies(g, rewrite)?)),
        Formula::Maj(v, g) => Formula::Maj(v.clone(), Box::new(map_bodies(g, rewrite)?)),
        Formula::Sq(v, g) => Formula::Sq(v.clone(), Box::new(map_bodies(g, rewrite)?)),
        Formula::MultQ(mq) => {
            let bodies: Vec<Formula> = mq
                .bodies
                .iter()
                .map(|b| map_bodies(b, rewrite))
                .collect::<Result<_, _>>()?;
            rewrite(mq, bodies)?
        }
    })
}

/// For each monoid element, a formula holding exactly when the letter formed
/// by the body truth values maps to that element. Works for every letter map
/// kind; explicit maps are expanded letter by letter, one-hot maps use an
/// exactly-one-bit encoding that stays polynomial in the width.
fn element_indicators(
    map: &LetterMap,
    monoid: &FiniteMonoid,
    bodies: &[Formula],
) -> Result<Vec<Formula>, RewriteError> {
    let c = monoid.size();
    let identity = monoid.identity();
    match map {
        LetterMap::Explicit { width, images } => {
            if *width > 16 {
                return Err(RewriteError::MapTooWide(*width));
            }
            let mut indicators = vec![Vec::new(); c];
            for (letter, &img) in images {
                let pattern = Formula::conj(letter.iter().enumerate().map(|(i, &bit)| {
                    if bit {
                        bodies[i].clone()
                    } else {
                        Formula::not(bodies[i].clone())
                    }
                }));
                indicators[img].push(pattern);
            }
            Ok(indicators.into_iter().map(Formula::disj).collect())
        }
        LetterMap::OneHot { .. } | LetterMap::BlockOneHot { .. } => {
            let width = map.width();
            let exactly = |p: usize| {
                Formula::conj((0..width).map(|q| {
                    if q == p {
                        bodies[q].clone()
                    } else {
                        Formula::not(bodies[q].clone())
                    }
                }))
            };
            let element_of = |p: usize| match map {
                LetterMap::OneHot { .. } => p,
                LetterMap::BlockOneHot { block_size, .. } => p % block_size,
                LetterMap::Explicit { .. } => unreachable!(),
            };
            let mut out = Vec::with_capacity(c);
            for t in 0..c {
                let mut cases: Vec<Formula> = (0..width)
                    .filter(|&p| element_of(p) == t)
                    .map(exactly)
                    .collect();
                if t == identity {
                    // Letters with zero or several set bits fall back to the
                    // identity.
                    let some_one_hot = Formula::disj((0..width).map(exactly));
                    cases.push(Formula::not(some_one_hot));
                }
                out.push(Formula::disj(cases));
            }
            Ok(out)
        }
    }
}

/// Replaces every multiplication quantifier whose letter map is explicit by
/// an equivalent one over the monoid's one-hot map; the new bodies are the
/// element indicators, one per monoid element, and exactly one of them holds
/// for every tuple. Order specs and quantifiers already in one-hot form are
/// left alone.
pub fn one_hot_normalize(f: &Formula) -> Formula {
    map_bodies(f, &mut normalize_node).unwrap()
}

fn normalize_node(mq: &MultQ, bodies: Vec<Formula>) -> Result<Formula, RewriteError> {
    let order = match &mq.order {
        OrderSpec::Fo { vars, order } => OrderSpec::Fo {
            vars: vars.clone(),
            order: order.clone(),
        },
        other => other.clone(),
    };
    match &mq.letter_map {
        LetterMap::OneHot { .. } | LetterMap::BlockOneHot { .. } => {
            Ok(Formula::MultQ(Box::new(MultQ {
                monoid: mq.monoid.clone(),
                accept: mq.accept.clone(),
                letter_map: mq.letter_map.clone(),
                order,
                vars: mq.vars.clone(),
                bodies,
            })))
        }
        LetterMap::Explicit { .. } => {
            let indicators = element_indicators(&mq.letter_map, &mq.monoid, &bodies)?;
            Ok(Formula::MultQ(Box::new(MultQ {
                monoid: mq.monoid.clone(),
                accept: mq.accept.clone(),
                letter_map: one_hot_delta(&mq.monoid),
                order,
                vars: mq.vars.clone(),
                bodies: indicators,
            })))
        }
    }
}

/// Collapses every multiplication quantifier of dimension `d > 1` with a lex
/// order into `d` nested unary quantifiers: the outer quantifier reads, per
/// position, the one-hot encoding of the value of the inner product, so the
/// overall product is unchanged. Requires one-hot form and lex orders.
pub fn collapse_lex(f: &Formula) -> Result<Formula, RewriteError> {
    collapse(f, false)
}

fn collapse(f: &Formula, allow_genlex: bool) -> Result<Formula, RewriteError> {
    map_bodies(f, &mut |mq, bodies| {
        if matches!(mq.letter_map, LetterMap::Explicit { .. }) {
            return Err(RewriteError::NotNormalized);
        }
        let dirs: Vec<LoopDir> = match &mq.order {
            OrderSpec::Lex => vec![LoopDir::Asc; mq.dim()],
            OrderSpec::GenLex(dirs) if allow_genlex => dirs.clone(),
            _ => return Err(RewriteError::NotLex),
        };
        Ok(collapse_node(
            &mq.monoid,
            mq.accept.clone(),
            &mq.letter_map,
            &dirs,
            &mq.vars,
            bodies,
        ))
    })
}

fn collapse_node(
    monoid: &Arc<FiniteMonoid>,
    accept: BTreeSet<usize>,
    map: &LetterMap,
    dirs: &[LoopDir],
    vars: &[String],
    bodies: Vec<Formula>,
) -> Formula {
    let level_monoid = if dirs[0] == LoopDir::Desc {
        Arc::new(monoid.reversed())
    } else {
        monoid.clone()
    };
    if vars.len() == 1 {
        return Formula::MultQ(Box::new(MultQ {
            monoid: level_monoid,
            accept,
            letter_map: map.clone(),
            order: OrderSpec::Lex,
            vars: vars.to_vec(),
            bodies,
        }));
    }
    // One body per element: "the product over the remaining coordinates,
    // with this first coordinate fixed, equals that element".
    let thetas: Vec<Formula> = (0..monoid.size())
        .map(|i| {
            collapse_node(
                monoid,
                [i].into(),
                map,
                &dirs[1..],
                &vars[1..],
                bodies.clone(),
            )
        })
        .collect();
    Formula::MultQ(Box::new(MultQ {
        monoid: level_monoid,
        accept,
        letter_map: one_hot_delta(monoid),
        order: OrderSpec::Lex,
        vars: vec![vars[0].clone()],
        bodies: thetas,
    }))
}

/// Full arity collapse: one-hot normalization followed by the nested unary
/// rewrite, handling generalized-lex orders by switching to the reversed
/// monoid at descending coordinates. Fails on formula-defined orders; those
/// go through [`apply_enumerator`] first.
pub fn unarize(f: &Formula) -> Result<Formula, RewriteError> {
    let mut has_fo = false;
    f.for_each(&mut |node| {
        if let Formula::MultQ(mq) = node {
            has_fo |= matches!(mq.order, OrderSpec::Fo { .. });
        }
    });
    if has_fo {
        return Err(RewriteError::NotLex);
    }
    collapse(&one_hot_normalize(f), true)
}

/// Options for validating a for-program against the order formula it claims
/// to realize: every word of the given width up to the length bound is
/// checked, over all assignments of any free parameters.
#[derive(Debug, Clone, Copy)]
pub struct EnumeratorOptions {
    pub width: usize,
    pub max_len: usize,
}

impl Default for EnumeratorOptions {
    fn default() -> Self {
        EnumeratorOptions {
            width: 1,
            max_len: 4,
        }
    }
}

/// Source of fresh variable names (a reserved `_r<n>` namespace) that never
/// collide with variables already present in the formula.
struct FreshVars {
    next: usize,
}

impl FreshVars {
    fn for_formula(f: &Formula) -> FreshVars {
        let mut max = 0usize;
        f.for_each(&mut |node| {
            let mut check = |v: &str| {
                if let Some(rest) = v.strip_prefix("_r") {
                    if let Ok(k) = rest.parse::<usize>() {
                        max = max.max(k);
                    }
                }
            };
            match node {
                Formula::Letter { var, .. } => check(var),
                Formula::Less(a, b) | Formula::Eq(a, b) => {
                    check(a);
                    check(b);
                }
                Formula::Plus(a, b, c) | Formula::Times(a, b, c) => {
                    check(a);
                    check(b);
                    check(c);
                }
                Formula::Exists(v, _) | Formula::Forall(v, _) | Formula::Maj(v, _) | Formula::Sq(v, _) => {
                    check(v)
                }
                Formula::MultQ(mq) => {
                    for v in &mq.vars {
                        check(v);
                    }
                    if let OrderSpec::Fo { vars, .. } = &mq.order {
                        for v in vars {
                            check(v);
                        }
                    }
                }
                _ => {}
            }
        });
        FreshVars { next: max + 1 }
    }

    fn fresh(&mut self) -> String {
        let name = format!("_r{}", self.next);
        self.next += 1;
        name
    }
}

/// Replaces every multiplication quantifier with a formula-defined order by
/// the for-program construction: the new quantifier ranges over the
/// program's loop tuples in generalized-lex order, its letter map is the
/// blocked one-hot map with one block per guard, and body `(j, t)` states
/// that guard `j` fires and the output tuple maps to element `t`. The
/// program is validated against the order formula on every word up to the
/// configured bound before being trusted.
pub fn apply_enumerator(
    f: &Formula,
    program: &ForProgram,
    opts: &EnumeratorOptions,
) -> Result<Formula, RewriteError> {
    let mut fresh = FreshVars::for_formula(f);
    map_bodies(f, &mut |mq, bodies| {
        let OrderSpec::Fo { vars: ovars, order } = &mq.order else {
            return Ok(Formula::MultQ(Box::new(MultQ {
                monoid: mq.monoid.clone(),
                accept: mq.accept.clone(),
                letter_map: mq.letter_map.clone(),
                order: mq.order.clone(),
                vars: mq.vars.clone(),
                bodies,
            })));
        };
        let d = mq.dim();
        if program.output_dim() != d {
            return Err(RewriteError::EnumeratorArityMismatch {
                found: program.output_dim(),
                expected: d,
            });
        }
        validate_enumerator_against_order(program, order, ovars, opts)?;

        // Element indicators over the (already rewritten) bodies.
        let normalized = MultQ {
            monoid: mq.monoid.clone(),
            accept: mq.accept.clone(),
            letter_map: mq.letter_map.clone(),
            order: OrderSpec::Lex,
            vars: mq.vars.clone(),
            bodies,
        };
        let psis = element_indicators(&normalized.letter_map, &normalized.monoid, &normalized.bodies)?;

        let loop_count = program.loop_count();
        let loop_vars: Vec<String> = (0..loop_count).map(|_| fresh.fresh()).collect();
        let rename: BTreeMap<String, String> = program
            .loops()
            .iter()
            .map(|(name, _)| name.clone())
            .zip(loop_vars.iter().cloned())
            .collect();

        let c = normalized.monoid.size();
        let mut xi = Vec::with_capacity(program.guards().len() * c);
        for (guard, output) in program.guards().iter().zip(program.outputs()) {
            let guard = guard.substitute(&rename);
            let tuple_rename: BTreeMap<String, String> = normalized
                .vars
                .iter()
                .cloned()
                .zip(output.iter().map(|&i| loop_vars[i - 1].clone()))
                .collect();
            for psi in &psis {
                xi.push(Formula::and(guard.clone(), psi.substitute(&tuple_rename)));
            }
        }

        let letter_map = LetterMap::BlockOneHot {
            blocks: program.guards().len(),
            block_size: c,
            identity: normalized.monoid.identity(),
        };
        Ok(Formula::MultQ(Box::new(MultQ {
            monoid: normalized.monoid,
            accept: normalized.accept,
            letter_map,
            order: OrderSpec::GenLex(program.directions()),
            vars: loop_vars,
            bodies: xi,
        })))
    })
}

fn validate_enumerator_against_order(
    program: &ForProgram,
    order: &Formula,
    order_vars: &[String],
    opts: &EnumeratorOptions,
) -> Result<(), RewriteError> {
    // Free parameters of the order formula and the guards, beyond the
    // designated variables, range over all positions during validation.
    let mut params: BTreeSet<String> = order.free_vars();
    for v in order_vars {
        params.remove(v);
    }
    for (guard, (name, _)) in program.guards().iter().zip(program.loops()) {
        let _ = name;
        params.extend(guard.free_vars());
    }
    for (name, _) in program.loops() {
        params.remove(name);
    }
    let params: Vec<String> = params.into_iter().collect();

    for word in words_up_to(opts.width, opts.max_len) {
        let n = word.len();
        let mut assignments = vec![VarAssignment::new()];
        for p in &params {
            let mut next = Vec::new();
            for a in assignments {
                for pos in 1..=n {
                    let mut b = a.clone();
                    b.set(p, pos);
                    next.push(b);
                }
            }
            assignments = next;
        }
        if n == 0 && !params.is_empty() {
            // No positions to bind parameters to; nothing to check.
            continue;
        }
        for ctx in assignments {
            let sorted = eval::sorted_tuples(order, order_vars, &word, &ctx)?;
            let Some(sorted) = sorted else {
                return Err(RewriteError::OrderNotLinear {
                    word: word.to_string(),
                });
            };
            if program.run_on(&word, &ctx)? != sorted {
                return Err(RewriteError::OrderMismatch {
                    word: word.to_string(),
                });
            }
        }
    }
    Ok(())
}

/// Outcome of a bounded language comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Equivalence {
    Equivalent,
    /// The shortest word on which the two formulas disagree.
    Differs(WordStructure),
}

impl Equivalence {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Equivalence::Equivalent)
    }
}

/// Compares two closed formulas on every word of the given width and length
/// at most `max_len`.
pub fn equivalent_upto(
    f1: &Formula,
    f2: &Formula,
    width: usize,
    max_len: usize,
) -> Result<Equivalence, EvalError> {
    equivalent_upto_threaded(f1, f2, width, max_len, 1)
}

/// As [`equivalent_upto`] with the word list split across workers.
pub fn equivalent_upto_threaded(
    f1: &Formula,
    f2: &Formula,
    width: usize,
    max_len: usize,
    threads: usize,
) -> Result<Equivalence, EvalError> {
    let c1 = Compiled::new(f1)?;
    let c2 = Compiled::new(f2)?;
    for c in [&c1, &c2] {
        let free = c.free_names();
        if !free.is_empty() {
            return Err(EvalError::FreeVariables(free));
        }
    }
    let words = words_up_to(width, max_len);
    let empty = VarAssignment::new();
    let r1 = eval::run_on_words(&c1, &words, &empty, threads)?;
    let r2 = eval::run_on_words(&c2, &words, &empty, threads)?;
    for ((w, a), b) in words.into_iter().zip(r1).zip(r2) {
        if a != b {
            return Ok(Equivalence::Differs(w));
        }
    }
    Ok(Equivalence::Equivalent)
}

/// What a pass did: node counts and any monoids the output mentions that the
/// input did not (reversed variants, for instance).
#[derive(Debug, Clone)]
pub struct PassRecord {
    pub pass: String,
    pub nodes_before: usize,
    pub nodes_after: usize,
    pub monoids_introduced: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RewriteReport {
    pub passes: Vec<PassRecord>,
    pub output: Formula,
}

impl fmt::Display for RewriteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.passes {
            write!(
                f,
                "pass {}: {} -> {} nodes",
                p.pass, p.nodes_before, p.nodes_after
            )?;
            if !p.monoids_introduced.is_empty() {
                write!(f, " (new monoids: {})", p.monoids_introduced.join(" "))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn monoid_names(f: &Formula) -> BTreeSet<String> {
    let mut names = BTreeSet::new();
    f.for_each(&mut |node| {
        if let Formula::MultQ(mq) = node {
            names.insert(mq.monoid.name().to_string());
        }
    });
    names
}

fn record(pass: &str, before: &Formula, after: &Formula) -> PassRecord {
    let old_names = monoid_names(before);
    PassRecord {
        pass: pass.to_string(),
        nodes_before: before.count_nodes(),
        nodes_after: after.count_nodes(),
        monoids_introduced: monoid_names(after)
            .difference(&old_names)
            .cloned()
            .collect(),
    }
}

/// Runs the full unarization pipeline and reports per-pass node counts.
pub fn unarize_report(f: &Formula) -> Result<RewriteReport, RewriteError> {
    let mut has_fo = false;
    f.for_each(&mut |node| {
        if let Formula::MultQ(mq) = node {
            has_fo |= matches!(mq.order, OrderSpec::Fo { .. });
        }
    });
    if has_fo {
        return Err(RewriteError::NotLex);
    }
    let normalized = one_hot_normalize(f);
    let first = record("one-hot", f, &normalized);
    let collapsed = collapse(&normalized, true)?;
    let second = record("collapse", &normalized, &collapsed);
    Ok(RewriteReport {
        passes: vec![first, second],
        output: collapsed,
    })
}

/// Runs a single named pass; used by the command-line front end.
pub fn run_pass(
    f: &Formula,
    pass: &str,
    program: Option<&ForProgram>,
    opts: &EnumeratorOptions,
) -> Result<RewriteReport, RewriteError> {
    let output = match pass {
        "onehot" => one_hot_normalize(f),
        "collapse" => collapse_lex(f)?,
        "unarize" => unarize(f)?,
        "enumerator" => {
            let program = program.ok_or(RewriteError::MissingProgram)?;
            apply_enumerator(f, program, opts)?
        }
        other => return Err(RewriteError::UnknownPass(other.to_string())),
    };
    let rec = record(pass, f, &output);
    Ok(RewriteReport {
        passes: vec![rec],
        output,
    })
}
