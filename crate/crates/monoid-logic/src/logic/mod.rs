//! The formula AST: quantifier-free first-order logic over words, the
//! standard quantifiers, majority and square counting quantifiers, and
//! monoid multiplication quantifiers with lex, generalized-lex, or
//! formula-defined tuple orders.

mod text;

pub use text::{parse_formula, parse_formula_with_free, render_formula};

use std::collections::BTreeSet;
use std::sync::Arc;

use thiserror::Error;

use crate::monoids::{FiniteMonoid, LetterMap};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unknown monoid `{0}`")]
    UnknownMonoid(String),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("arity mismatch: {0}")]
    ArityMismatch(String),
    #[error("unbound variable `{var}` at {line}:{col}")]
    UnboundVariable { var: String, line: usize, col: usize },
}

/// Loop / coordinate direction: `Asc` iterates `1..=n` (written `l` in
/// generalized-lex direction vectors, `asc` in for-programs), `Desc` the
/// reverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopDir {
    Asc,
    Desc,
}

/// How a multiplication quantifier orders the tuples it multiplies over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrderSpec {
    /// Lexicographic, first bound variable most significant.
    Lex,
    /// Generalized lexicographic: per-coordinate directions.
    GenLex(Vec<LoopDir>),
    /// Defined by a formula over `2d` designated variables (first `d` for the
    /// left tuple, last `d` for the right); must define a strict linear
    /// order, otherwise the quantifier evaluates to false.
    Fo { vars: Vec<String>, order: Formula },
}

/// A multiplication quantifier node: multiply the images of the body truth
/// vectors through `letter_map` over all `d`-tuples in the given order, and
/// test membership of the product in `accept`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultQ {
    pub monoid: Arc<FiniteMonoid>,
    pub accept: BTreeSet<usize>,
    pub letter_map: LetterMap,
    pub order: OrderSpec,
    pub vars: Vec<String>,
    pub bodies: Vec<Formula>,
}

impl MultQ {
    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    /// Shape checks: body count matches the letter map width, accept set in
    /// range, order spec consistent with the dimension.
    pub fn validate(&self) -> Result<(), FormulaError> {
        if self.vars.is_empty() {
            return Err(FormulaError::ArityMismatch(
                "multiplication quantifier needs at least one bound variable".into(),
            ));
        }
        if self.bodies.len() != self.letter_map.width() {
            return Err(FormulaError::ArityMismatch(format!(
                "letter map width {} but {} body formulas",
                self.letter_map.width(),
                self.bodies.len()
            )));
        }
        if let Some(&e) = self.accept.iter().find(|&&e| e >= self.monoid.size()) {
            return Err(FormulaError::ArityMismatch(format!(
                "accept element {e} out of range for monoid {}",
                self.monoid.name()
            )));
        }
        let map_fits = match &self.letter_map {
            LetterMap::Explicit { images, .. } => {
                images.values().all(|&e| e < self.monoid.size())
            }
            LetterMap::OneHot { size, identity } => {
                *size == self.monoid.size() && *identity == self.monoid.identity()
            }
            LetterMap::BlockOneHot {
                block_size,
                identity,
                ..
            } => *block_size == self.monoid.size() && *identity == self.monoid.identity(),
        };
        if !map_fits {
            return Err(FormulaError::ArityMismatch(format!(
                "letter map does not match monoid {}",
                self.monoid.name()
            )));
        }
        match &self.order {
            OrderSpec::Lex => {}
            OrderSpec::GenLex(dirs) => {
                if dirs.len() != self.dim() {
                    return Err(FormulaError::ArityMismatch(format!(
                        "direction vector of length {} for dimension {}",
                        dirs.len(),
                        self.dim()
                    )));
                }
            }
            OrderSpec::Fo { vars, .. } => {
                if vars.len() != 2 * self.dim() {
                    return Err(FormulaError::ArityMismatch(format!(
                        "order formula binds {} variables, expected {}",
                        vars.len(),
                        2 * self.dim()
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    True,
    False,
    /// `R_rel(var)`, `rel` 1-based.
    Letter { rel: usize, var: String },
    Less(String, String),
    Eq(String, String),
    /// `x + y = z` as a relation on positions; false when the sum exceeds
    /// the word length.
    Plus(String, String, String),
    /// `x * y = z`, likewise partial.
    Times(String, String, String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
    /// At least half of the positions satisfy the body.
    Maj(String, Box<Formula>),
    /// The number of satisfying positions is a positive square.
    Sq(String, Box<Formula>),
    MultQ(Box<MultQ>),
}

impl Formula {
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn exists(var: &str, f: Formula) -> Formula {
        Formula::Exists(var.to_string(), Box::new(f))
    }

    pub fn forall(var: &str, f: Formula) -> Formula {
        Formula::Forall(var.to_string(), Box::new(f))
    }

    pub fn letter(rel: usize, var: &str) -> Formula {
        Formula::Letter {
            rel,
            var: var.to_string(),
        }
    }

    pub fn less(a: &str, b: &str) -> Formula {
        Formula::Less(a.to_string(), b.to_string())
    }

    /// Conjunction of a list; empty list is `true`.
    pub fn conj(fs: impl IntoIterator<Item = Formula>) -> Formula {
        let mut it = fs.into_iter();
        match it.next() {
            None => Formula::True,
            Some(first) => it.fold(first, Formula::and),
        }
    }

    /// Disjunction of a list; empty list is `false`.
    pub fn disj(fs: impl IntoIterator<Item = Formula>) -> Formula {
        let mut it = fs.into_iter();
        match it.next() {
            None => Formula::False,
            Some(first) => it.fold(first, Formula::or),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        let mut var = |v: &String, bound: &[String]| {
            if !bound.contains(v) {
                out.insert(v.clone());
            }
        };
        match self {
            Formula::True | Formula::False => {}
            Formula::Letter { var: v, .. } => var(v, bound),
            Formula::Less(a, b) | Formula::Eq(a, b) => {
                var(a, bound);
                var(b, bound);
            }
            Formula::Plus(a, b, c) | Formula::Times(a, b, c) => {
                var(a, bound);
                var(b, bound);
                var(c, bound);
            }
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Exists(v, f) | Formula::Forall(v, f) | Formula::Maj(v, f) | Formula::Sq(v, f) => {
                bound.push(v.clone());
                f.collect_free(bound, out);
                bound.pop();
            }
            Formula::MultQ(mq) => {
                let depth = bound.len();
                bound.extend(mq.vars.iter().cloned());
                for body in &mq.bodies {
                    body.collect_free(bound, out);
                }
                bound.truncate(depth);
                if let OrderSpec::Fo { vars, order } = &mq.order {
                    bound.extend(vars.iter().cloned());
                    order.collect_free(bound, out);
                    bound.truncate(depth);
                }
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn count_nodes(&self) -> usize {
        let mut count = 0;
        self.for_each(&mut |_| count += 1);
        count
    }

    /// Preorder walk over every node, including quantifier bodies and order
    /// formulas.
    pub fn for_each(&self, visit: &mut impl FnMut(&Formula)) {
        visit(self);
        match self {
            Formula::True
            | Formula::False
            | Formula::Letter { .. }
            | Formula::Less(..)
            | Formula::Eq(..)
            | Formula::Plus(..)
            | Formula::Times(..) => {}
            Formula::Not(f) => f.for_each(visit),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.for_each(visit);
                b.for_each(visit);
            }
            Formula::Exists(_, f) | Formula::Forall(_, f) | Formula::Maj(_, f) | Formula::Sq(_, f) => {
                f.for_each(visit)
            }
            Formula::MultQ(mq) => {
                for body in &mq.bodies {
                    body.for_each(visit);
                }
                if let OrderSpec::Fo { order, .. } = &mq.order {
                    order.for_each(visit);
                }
            }
        }
    }

    /// Largest multiplication-quantifier dimension anywhere in the formula;
    /// 0 when there is none.
    pub fn max_multq_dim(&self) -> usize {
        let mut max = 0;
        self.for_each(&mut |f| {
            if let Formula::MultQ(mq) = f {
                max = max.max(mq.dim());
            }
        });
        max
    }

    /// Renames free occurrences of variables according to `map`, leaving
    /// bound occurrences alone (binders shadow the map).
    pub fn substitute(&self, map: &std::collections::BTreeMap<String, String>) -> Formula {
        if map.is_empty() {
            return self.clone();
        }
        let lookup = |v: &String| map.get(v).unwrap_or(v).clone();
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Letter { rel, var } => Formula::Letter {
                rel: *rel,
                var: lookup(var),
            },
            Formula::Less(a, b) => Formula::Less(lookup(a), lookup(b)),
            Formula::Eq(a, b) => Formula::Eq(lookup(a), lookup(b)),
            Formula::Plus(a, b, c) => Formula::Plus(lookup(a), lookup(b), lookup(c)),
            Formula::Times(a, b, c) => Formula::Times(lookup(a), lookup(b), lookup(c)),
            Formula::Not(f) => Formula::not(f.substitute(map)),
            Formula::And(a, b) => Formula::and(a.substitute(map), b.substitute(map)),
            Formula::Or(a, b) => Formula::or(a.substitute(map), b.substitute(map)),
            Formula::Exists(v, f) | Formula::Forall(v, f) | Formula::Maj(v, f) | Formula::Sq(v, f) => {
                let mut inner = map.clone();
                inner.remove(v);
                let body = Box::new(f.substitute(&inner));
                match self {
                    Formula::Exists(..) => Formula::Exists(v.clone(), body),
                    Formula::Forall(..) => Formula::Forall(v.clone(), body),
                    Formula::Maj(..) => Formula::Maj(v.clone(), body),
                    _ => Formula::Sq(v.clone(), body),
                }
            }
            Formula::MultQ(mq) => {
                let mut inner = map.clone();
                for v in &mq.vars {
                    inner.remove(v);
                }
                let bodies = mq.bodies.iter().map(|b| b.substitute(&inner)).collect();
                let order = match &mq.order {
                    OrderSpec::Fo { vars, order } => {
                        let mut omap = map.clone();
                        for v in vars {
                            omap.remove(v);
                        }
                        OrderSpec::Fo {
                            vars: vars.clone(),
                            order: order.substitute(&omap),
                        }
                    }
                    other => other.clone(),
                };
                Formula::MultQ(Box::new(MultQ {
                    monoid: mq.monoid.clone(),
                    accept: mq.accept.clone(),
                    letter_map: mq.letter_map.clone(),
                    order,
                    vars: mq.vars.clone(),
                    bodies,
                }))
            }
        }
    }
}

/// Which numerical predicates a logic admits. The order implicitly used by
/// quantifier interpretations does not count; only explicit atoms do.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredicateProfile {
    pub less: bool,
    pub plus: bool,
    pub times: bool,
}

impl PredicateProfile {
    /// No numerical atoms at all.
    pub fn none() -> Self {
        PredicateProfile {
            less: false,
            plus: false,
            times: false,
        }
    }

    /// Order only.
    pub fn order_only() -> Self {
        PredicateProfile {
            less: true,
            plus: false,
            times: false,
        }
    }

    /// Order, addition, multiplication.
    pub fn full() -> Self {
        PredicateProfile {
            less: true,
            plus: true,
            times: true,
        }
    }

    pub fn with_less(mut self) -> Self {
        self.less = true;
        self
    }
}

/// Restriction on multiplication-quantifier order specs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fragment {
    /// Only lex / generalized-lex orders.
    Lex,
    /// Lex orders, or orders given by a quantifier-wise plain first-order
    /// formula over `<` (no multiplication, majority, or square quantifiers
    /// inside, no arithmetic atoms).
    Fo,
    /// No restriction.
    Any,
}

/// Whether every numerical atom is admitted by `profile` and every
/// multiplication-quantifier order conforms to `fragment`.
pub fn check_fragment(f: &Formula, profile: &PredicateProfile, fragment: Fragment) -> bool {
    match f {
        Formula::True | Formula::False | Formula::Letter { .. } | Formula::Eq(..) => true,
        Formula::Less(..) => profile.less,
        Formula::Plus(..) => profile.plus,
        Formula::Times(..) => profile.times,
        Formula::Not(g) => check_fragment(g, profile, fragment),
        Formula::And(a, b) | Formula::Or(a, b) => {
            check_fragment(a, profile, fragment) && check_fragment(b, profile, fragment)
        }
        Formula::Exists(_, g) | Formula::Forall(_, g) | Formula::Maj(_, g) | Formula::Sq(_, g) => {
            check_fragment(g, profile, fragment)
        }
        Formula::MultQ(mq) => {
            let order_ok = match (&mq.order, fragment) {
                (OrderSpec::Lex | OrderSpec::GenLex(_), _) => true,
                (OrderSpec::Fo { .. }, Fragment::Lex) => false,
                (OrderSpec::Fo { order, .. }, Fragment::Fo) => is_plain_fo_order(order),
                (OrderSpec::Fo { .. }, Fragment::Any) => true,
            };
            order_ok
                && mq
                    .bodies
                    .iter()
                    .all(|b| check_fragment(b, profile, fragment))
        }
    }
}

/// A legal order formula for the fo fragment: first-order over `<` and `=`
/// (letters allowed), with no counting or multiplication quantifiers and no
/// arithmetic atoms.
pub fn is_plain_fo_order(f: &Formula) -> bool {
    let mut ok = true;
    f.for_each(&mut |node| match node {
        Formula::MultQ(_) | Formula::Maj(..) | Formula::Sq(..) | Formula::Plus(..) | Formula::Times(..) => {
            ok = false
        }
        _ => {}
    });
    ok
}
