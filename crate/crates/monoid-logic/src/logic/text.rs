//! Parenthesized prefix syntax for formulas.
//!
//! ```text
//! form := true | false
//!       | (letter i v) | (< v v) | (= v v) | (plus v v v) | (times v v v)
//!       | (not f) | (and f f) | (or f f)
//!       | (exists (v) f) | (forall (v) f) | (maj (v) f) | (sq (v) f)
//!       | (mq :monoid NAME :accept (e ...) :dim d :gamma GAMMA :order ORD
//!            (v ...) (f ...))
//! GAMMA := ((bits -> e) ...) | onehot | (block-onehot l)
//! ORD   := lex | (genlex DIRS) | (fo (v ...) f)     DIRS in {l,r}+
//! ```

use std::collections::{BTreeMap, BTreeSet};

use super::{Formula, FormulaError, LoopDir, MultQ, OrderSpec};
use crate::monoids::{render_letter_map, FiniteMonoid, LetterMap, MonoidEnv};

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String, usize, usize),
    List(Vec<Sexp>, usize, usize),
}

impl Sexp {
    fn pos(&self) -> (usize, usize) {
        match self {
            Sexp::Atom(_, l, c) | Sexp::List(_, l, c) => (*l, *c),
        }
    }
}

fn err_at(pos: (usize, usize), msg: impl Into<String>) -> FormulaError {
    FormulaError::Syntax {
        line: pos.0,
        col: pos.1,
        msg: msg.into(),
    }
}

fn tokenize(text: &str) -> Vec<(String, usize, usize)> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    let (mut line, mut col) = (1usize, 0usize);
    let (mut tok_line, mut tok_col) = (1usize, 1usize);
    for ch in text.chars() {
        if ch == '\n' {
            line += 1;
            col = 0;
        } else {
            col += 1;
        }
        match ch {
            '(' | ')' => {
                if !cur.is_empty() {
                    tokens.push((std::mem::take(&mut cur), tok_line, tok_col));
                }
                tokens.push((ch.to_string(), line, col));
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    tokens.push((std::mem::take(&mut cur), tok_line, tok_col));
                }
            }
            c => {
                if cur.is_empty() {
                    tok_line = line;
                    tok_col = col;
                }
                cur.push(c);
            }
        }
    }
    if !cur.is_empty() {
        tokens.push((cur, tok_line, tok_col));
    }
    tokens
}

fn parse_sexp(tokens: &[(String, usize, usize)], at: &mut usize) -> Result<Sexp, FormulaError> {
    let (tok, line, col) = tokens
        .get(*at)
        .ok_or_else(|| err_at((0, 0), "unexpected end of input"))?;
    *at += 1;
    match tok.as_str() {
        "(" => {
            let mut items = Vec::new();
            loop {
                match tokens.get(*at) {
                    None => return Err(err_at((*line, *col), "unclosed `(`")),
                    Some((t, _, _)) if t == ")" => {
                        *at += 1;
                        return Ok(Sexp::List(items, *line, *col));
                    }
                    Some(_) => items.push(parse_sexp(tokens, at)?),
                }
            }
        }
        ")" => Err(err_at((*line, *col), "unexpected `)`")),
        _ => Ok(Sexp::Atom(tok.clone(), *line, *col)),
    }
}

struct Parser<'a> {
    env: &'a MonoidEnv,
    scope: Vec<String>,
}

impl<'a> Parser<'a> {
    fn atom<'s>(&self, s: &'s Sexp, what: &str) -> Result<&'s str, FormulaError> {
        match s {
            Sexp::Atom(a, _, _) => Ok(a),
            Sexp::List(..) => Err(err_at(s.pos(), format!("expected {what}, found a list"))),
        }
    }

    fn list<'s>(&self, s: &'s Sexp, what: &str) -> Result<&'s [Sexp], FormulaError> {
        match s {
            Sexp::List(items, _, _) => Ok(items),
            Sexp::Atom(..) => Err(err_at(s.pos(), format!("expected {what}, found an atom"))),
        }
    }

    fn variable(&self, s: &Sexp) -> Result<String, FormulaError> {
        let name = self.atom(s, "a variable")?;
        if !self.scope.iter().any(|v| v == name) {
            let (line, col) = s.pos();
            return Err(FormulaError::UnboundVariable {
                var: name.to_string(),
                line,
                col,
            });
        }
        Ok(name.to_string())
    }

    fn binder(&self, s: &Sexp) -> Result<String, FormulaError> {
        let items = self.list(s, "a variable list `(v)`")?;
        if items.len() != 1 {
            return Err(err_at(s.pos(), "expected exactly one bound variable"));
        }
        Ok(self.atom(&items[0], "a variable")?.to_string())
    }

    fn formula(&mut self, s: &Sexp) -> Result<Formula, FormulaError> {
        if let Sexp::Atom(a, _, _) = s {
            return match a.as_str() {
                "true" => Ok(Formula::True),
                "false" => Ok(Formula::False),
                other => Err(err_at(s.pos(), format!("unexpected atom `{other}`"))),
            };
        }
        let items = self.list(s, "a formula")?;
        let head = self.atom(
            items
                .first()
                .ok_or_else(|| err_at(s.pos(), "empty formula"))?,
            "an operator",
        )?;
        let expect_args = |n: usize| -> Result<(), FormulaError> {
            if items.len() - 1 != n {
                Err(FormulaError::ArityMismatch(format!(
                    "`{head}` takes {n} arguments, found {}",
                    items.len() - 1
                )))
            } else {
                Ok(())
            }
        };
        match head {
            "letter" => {
                expect_args(2)?;
                let rel: usize = self
                    .atom(&items[1], "a relation index")?
                    .parse()
                    .map_err(|_| err_at(items[1].pos(), "bad relation index"))?;
                if rel == 0 {
                    return Err(err_at(items[1].pos(), "relation indices are 1-based"));
                }
                Ok(Formula::Letter {
                    rel,
                    var: self.variable(&items[2])?,
                })
            }
            "<" => {
                expect_args(2)?;
                Ok(Formula::Less(
                    self.variable(&items[1])?,
                    self.variable(&items[2])?,
                ))
            }
            "=" => {
                expect_args(2)?;
                Ok(Formula::Eq(
                    self.variable(&items[1])?,
                    self.variable(&items[2])?,
                ))
            }
            "plus" | "times" => {
                expect_args(3)?;
                let a = self.variable(&items[1])?;
                let b = self.variable(&items[2])?;
                let c = self.variable(&items[3])?;
                Ok(if head == "plus" {
                    Formula::Plus(a, b, c)
                } else {
                    Formula::Times(a, b, c)
                })
            }
            "not" => {
                expect_args(1)?;
                Ok(Formula::not(self.formula(&items[1])?))
            }
            "and" | "or" => {
                expect_args(2)?;
                let a = self.formula(&items[1])?;
                let b = self.formula(&items[2])?;
                Ok(if head == "and" {
                    Formula::and(a, b)
                } else {
                    Formula::or(a, b)
                })
            }
            "exists" | "forall" | "maj" | "sq" => {
                expect_args(2)?;
                let var = self.binder(&items[1])?;
                self.scope.push(var.clone());
                let body = self.formula(&items[2]);
                self.scope.pop();
                let body = Box::new(body?);
                Ok(match head {
                    "exists" => Formula::Exists(var, body),
                    "forall" => Formula::Forall(var, body),
                    "maj" => Formula::Maj(var, body),
                    _ => Formula::Sq(var, body),
                })
            }
            "mq" => self.mult_quantifier(s, &items[1..]),
            other => Err(err_at(s.pos(), format!("unknown operator `{other}`"))),
        }
    }

    fn keyword(&self, s: &Sexp, expected: &str) -> Result<(), FormulaError> {
        let got = self.atom(s, &format!("`{expected}`"))?;
        if got != expected {
            return Err(err_at(s.pos(), format!("expected `{expected}`, found `{got}`")));
        }
        Ok(())
    }

    fn mult_quantifier(&mut self, whole: &Sexp, rest: &[Sexp]) -> Result<Formula, FormulaError> {
        if rest.len() != 12 {
            return Err(err_at(
                whole.pos(),
                "mq needs :monoid N :accept (..) :dim d :gamma G :order O (vars) (bodies)",
            ));
        }
        self.keyword(&rest[0], ":monoid")?;
        let monoid_name = self.atom(&rest[1], "a monoid name")?;
        let monoid = self
            .env
            .resolve(monoid_name)
            .map_err(|_| FormulaError::UnknownMonoid(monoid_name.to_string()))?;

        self.keyword(&rest[2], ":accept")?;
        let mut accept = BTreeSet::new();
        for e in self.list(&rest[3], "an accept list")? {
            let name = self.atom(e, "an element name")?;
            let idx = monoid
                .element_index(name)
                .map_err(|_| FormulaError::UnknownElement(name.to_string()))?;
            accept.insert(idx);
        }

        self.keyword(&rest[4], ":dim")?;
        let dim: usize = self
            .atom(&rest[5], "a dimension")?
            .parse()
            .map_err(|_| err_at(rest[5].pos(), "bad dimension"))?;

        self.keyword(&rest[6], ":gamma")?;
        let letter_map = self.gamma(&rest[7], &monoid)?;

        self.keyword(&rest[8], ":order")?;
        let tuple_vars: Vec<String> = self
            .list(&rest[10], "a bound variable list")?
            .iter()
            .map(|v| self.atom(v, "a variable").map(str::to_string))
            .collect::<Result<_, _>>()?;
        if tuple_vars.len() != dim {
            return Err(FormulaError::ArityMismatch(format!(
                "dimension {dim} but {} bound variables",
                tuple_vars.len()
            )));
        }
        let order = self.order_spec(&rest[9], dim)?;

        let body_items = self.list(&rest[11], "a body list")?;
        let depth = self.scope.len();
        self.scope.extend(tuple_vars.iter().cloned());
        let bodies: Result<Vec<Formula>, FormulaError> =
            body_items.iter().map(|b| self.formula(b)).collect();
        self.scope.truncate(depth);

        let mq = MultQ {
            monoid,
            accept,
            letter_map,
            order,
            vars: tuple_vars,
            bodies: bodies?,
        };
        mq.validate()?;
        Ok(Formula::MultQ(Box::new(mq)))
    }

    fn gamma(&self, s: &Sexp, monoid: &FiniteMonoid) -> Result<LetterMap, FormulaError> {
        if let Sexp::Atom(a, _, _) = s {
            if a == "onehot" {
                return Ok(LetterMap::OneHot {
                    size: monoid.size(),
                    identity: monoid.identity(),
                });
            }
            return Err(err_at(s.pos(), "expected a letter map"));
        }
        let items = self.list(s, "a letter map")?;
        if let Some(Sexp::Atom(first, _, _)) = items.first() {
            if first == "block-onehot" {
                if items.len() != 2 {
                    return Err(err_at(s.pos(), "block-onehot takes one argument"));
                }
                let blocks: usize = self
                    .atom(&items[1], "a block count")?
                    .parse()
                    .map_err(|_| err_at(items[1].pos(), "bad block count"))?;
                if blocks == 0 {
                    return Err(err_at(items[1].pos(), "need at least one block"));
                }
                return Ok(LetterMap::BlockOneHot {
                    blocks,
                    block_size: monoid.size(),
                    identity: monoid.identity(),
                });
            }
        }
        let mut images = BTreeMap::new();
        let mut width = None;
        for entry in items {
            let parts = self.list(entry, "a `(bits -> element)` entry")?;
            if parts.len() != 3 {
                return Err(err_at(entry.pos(), "expected `(bits -> element)`"));
            }
            self.keyword(&parts[1], "->")?;
            let bits = self.atom(&parts[0], "a bit string")?;
            let mut letter = Vec::with_capacity(bits.len());
            for ch in bits.chars() {
                match ch {
                    '0' => letter.push(false),
                    '1' => letter.push(true),
                    other => return Err(err_at(parts[0].pos(), format!("bad bit `{other}`"))),
                }
            }
            match width {
                None => width = Some(letter.len()),
                Some(w) if w != letter.len() => {
                    return Err(FormulaError::ArityMismatch("mixed letter widths".into()))
                }
                _ => {}
            }
            let name = self.atom(&parts[2], "an element name")?;
            let idx = monoid
                .element_index(name)
                .map_err(|_| FormulaError::UnknownElement(name.to_string()))?;
            images.insert(letter, idx);
        }
        let width = width.ok_or_else(|| err_at(s.pos(), "empty letter map"))?;
        LetterMap::explicit(width, images)
            .map_err(|e| FormulaError::ArityMismatch(e.to_string()))
    }

    fn order_spec(&mut self, s: &Sexp, dim: usize) -> Result<OrderSpec, FormulaError> {
        if let Sexp::Atom(a, _, _) = s {
            if a == "lex" {
                return Ok(OrderSpec::Lex);
            }
            return Err(err_at(s.pos(), format!("unknown order `{a}`")));
        }
        let items = self.list(s, "an order spec")?;
        let head = self.atom(
            items
                .first()
                .ok_or_else(|| err_at(s.pos(), "empty order spec"))?,
            "an order kind",
        )?;
        match head {
            "genlex" => {
                if items.len() != 2 {
                    return Err(err_at(s.pos(), "genlex takes one direction string"));
                }
                let dirs_tok = self.atom(&items[1], "a direction string")?;
                let dirs: Result<Vec<LoopDir>, FormulaError> = dirs_tok
                    .chars()
                    .map(|c| match c {
                        'l' => Ok(LoopDir::Asc),
                        'r' => Ok(LoopDir::Desc),
                        other => Err(err_at(items[1].pos(), format!("bad direction `{other}`"))),
                    })
                    .collect();
                Ok(OrderSpec::GenLex(dirs?))
            }
            "fo" => {
                if items.len() != 3 {
                    return Err(err_at(s.pos(), "fo takes a variable list and a formula"));
                }
                let vars: Vec<String> = self
                    .list(&items[1], "an order variable list")?
                    .iter()
                    .map(|v| self.atom(v, "a variable").map(str::to_string))
                    .collect::<Result<_, _>>()?;
                if vars.len() != 2 * dim {
                    return Err(FormulaError::ArityMismatch(format!(
                        "order formula binds {} variables, expected {}",
                        vars.len(),
                        2 * dim
                    )));
                }
                let depth = self.scope.len();
                self.scope.extend(vars.iter().cloned());
                let order = self.formula(&items[2]);
                self.scope.truncate(depth);
                Ok(OrderSpec::Fo {
                    vars,
                    order: order?,
                })
            }
            other => Err(err_at(s.pos(), format!("unknown order kind `{other}`"))),
        }
    }
}

/// Parses a closed formula.
pub fn parse_formula(text: &str, env: &MonoidEnv) -> Result<Formula, FormulaError> {
    parse_formula_with_free(text, env, &BTreeSet::new())
}

/// Parses a formula that may mention the given free variables (used for
/// for-program guards and order formulas supplied on their own).
pub fn parse_formula_with_free(
    text: &str,
    env: &MonoidEnv,
    free: &BTreeSet<String>,
) -> Result<Formula, FormulaError> {
    let tokens = tokenize(text);
    let mut at = 0;
    let sexp = parse_sexp(&tokens, &mut at)?;
    if at != tokens.len() {
        let pos = tokens[at].1;
        return Err(err_at((pos, tokens[at].2), "trailing input after formula"));
    }
    let mut parser = Parser {
        env,
        scope: free.iter().cloned().collect(),
    };
    parser.formula(&sexp)
}

fn render_into(f: &Formula, out: &mut String) {
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Letter { rel, var } => {
            out.push_str(&format!("(letter {rel} {var})"));
        }
        Formula::Less(a, b) => out.push_str(&format!("(< {a} {b})")),
        Formula::Eq(a, b) => out.push_str(&format!("(= {a} {b})")),
        Formula::Plus(a, b, c) => out.push_str(&format!("(plus {a} {b} {c})")),
        Formula::Times(a, b, c) => out.push_str(&format!("(times {a} {b} {c})")),
        Formula::Not(g) => {
            out.push_str("(not ");
            render_into(g, out);
            out.push(')');
        }
        Formula::And(a, b) | Formula::Or(a, b) => {
            out.push_str(if matches!(f, Formula::And(..)) {
                "(and "
            } else {
                "(or "
            });
            render_into(a, out);
            out.push(' ');
            render_into(b, out);
            out.push(')');
        }
        Formula::Exists(v, g) | Formula::Forall(v, g) | Formula::Maj(v, g) | Formula::Sq(v, g) => {
            let kw = match f {
                Formula::Exists(..) => "exists",
                Formula::Forall(..) => "forall",
                Formula::Maj(..) => "maj",
                _ => "sq",
            };
            out.push_str(&format!("({kw} ({v}) "));
            render_into(g, out);
            out.push(')');
        }
        Formula::MultQ(mq) => {
            out.push_str("(mq :monoid ");
            out.push_str(mq.monoid.name());
            out.push_str(" :accept (");
            let names: Vec<&str> = mq
                .accept
                .iter()
                .map(|&e| mq.monoid.element_name(e))
                .collect();
            out.push_str(&names.join(" "));
            out.push_str(&format!(") :dim {} :gamma ", mq.dim()));
            match &mq.letter_map {
                LetterMap::OneHot { .. } => out.push_str("onehot"),
                LetterMap::BlockOneHot { blocks, .. } => {
                    out.push_str(&format!("(block-onehot {blocks})"))
                }
                LetterMap::Explicit { .. } => {
                    let entries: Vec<String> = render_letter_map(&mq.letter_map, &mq.monoid)
                        .lines()
                        .map(|line| format!("({line})"))
                        .collect();
                    out.push('(');
                    out.push_str(&entries.join(" "));
                    out.push(')');
                }
            }
            out.push_str(" :order ");
            match &mq.order {
                OrderSpec::Lex => out.push_str("lex"),
                OrderSpec::GenLex(dirs) => {
                    let s: String = dirs
                        .iter()
                        .map(|d| if *d == LoopDir::Asc { 'l' } else { 'r' })
                        .collect();
                    out.push_str(&format!("(genlex {s})"));
                }
                OrderSpec::Fo { vars, order } => {
                    out.push_str(&format!("(fo ({}) ", vars.join(" ")));
                    render_into(order, out);
                    out.push(')');
                }
            }
            out.push_str(&format!(" ({}) (", mq.vars.join(" ")));
            for (i, body) in mq.bodies.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                render_into(body, out);
            }
            out.push_str("))");
        }
    }
}

/// Renders a formula; `parse_formula` over the same environment returns a
/// structurally equal AST.
pub fn render_formula(f: &Formula) -> String {
    let mut out = String::new();
    render_into(f, &mut out);
    out
}
