//! For-programs: nested directional loops over positions whose body outputs
//! tuples under mutually exclusive first-order guards. A valid program
//! enumerates every `d`-tuple of `[1..=n]` exactly once, so it realizes a
//! first-order definable linear order on tuples.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::eval::{self, Compiled, EvalError};
use crate::logic::{
    is_plain_fo_order, parse_formula_with_free, render_formula, Formula, FormulaError, LoopDir,
};
use crate::monoids::MonoidEnv;
use crate::words::{VarAssignment, WordStructure};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ForProgError {
    #[error("guards {first} and {second} both fire at assignment {assignment:?}")]
    GuardOverlap {
        first: usize,
        second: usize,
        assignment: Vec<usize>,
    },
    #[error("output index {index} out of range 1..={loops}")]
    BadOutputIndex { index: usize, loops: usize },
    #[error("output tuple {0} has {1} indices, expected {2}")]
    BadOutputArity(usize, usize, usize),
    #[error("guard {0} is not a plain first-order formula over order")]
    BadGuard(usize),
    #[error("the order formula is not a strict linear order on this structure")]
    NotLinearOrder,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid for-program syntax: {0}")]
    Parse(String),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

/// A `d`-enumerator: `loops.len()` nested loops, each ascending or
/// descending, and one output tuple per guard.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForProgram {
    name: String,
    loops: Vec<(String, LoopDir)>,
    guards: Vec<Formula>,
    /// 1-based indices into `loops`, one tuple of length `output_dim` per
    /// guard.
    outputs: Vec<Vec<usize>>,
    output_dim: usize,
}

impl ForProgram {
    pub fn new(
        name: &str,
        loops: Vec<(String, LoopDir)>,
        guards: Vec<Formula>,
        outputs: Vec<Vec<usize>>,
        output_dim: usize,
    ) -> Result<Self, ForProgError> {
        if loops.is_empty() {
            return Err(ForProgError::Parse("need at least one loop".into()));
        }
        if guards.len() != outputs.len() {
            return Err(ForProgError::Parse(format!(
                "{} guards but {} outputs",
                guards.len(),
                outputs.len()
            )));
        }
        if output_dim == 0 {
            return Err(ForProgError::Parse("output dimension must be positive".into()));
        }
        for (g, guard) in guards.iter().enumerate() {
            if !is_plain_fo_order(guard) {
                return Err(ForProgError::BadGuard(g));
            }
        }
        for (j, tuple) in outputs.iter().enumerate() {
            if tuple.len() != output_dim {
                return Err(ForProgError::BadOutputArity(j, tuple.len(), output_dim));
            }
            for &i in tuple {
                if i == 0 || i > loops.len() {
                    return Err(ForProgError::BadOutputIndex {
                        index: i,
                        loops: loops.len(),
                    });
                }
            }
        }
        Ok(ForProgram {
            name: name.to_string(),
            loops,
            guards,
            outputs,
            output_dim,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn loop_count(&self) -> usize {
        self.loops.len()
    }

    pub fn loops(&self) -> &[(String, LoopDir)] {
        &self.loops
    }

    pub fn directions(&self) -> Vec<LoopDir> {
        self.loops.iter().map(|(_, d)| *d).collect()
    }

    pub fn guards(&self) -> &[Formula] {
        &self.guards
    }

    pub fn outputs(&self) -> &[Vec<usize>] {
        &self.outputs
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    /// Runs the program over positions `1..=n` with guards that only inspect
    /// positions and `ctx` (evaluated over a blank word of length `n`).
    pub fn run(&self, n: usize, ctx: &VarAssignment) -> Result<Vec<Vec<usize>>, ForProgError> {
        let blank = WordStructure::new(1, vec![vec![false]; n]).unwrap();
        self.run_on(&blank, ctx)
    }

    /// Runs the program over the positions of a word; guards may inspect its
    /// letters.
    pub fn run_on(
        &self,
        word: &WordStructure,
        ctx: &VarAssignment,
    ) -> Result<Vec<Vec<usize>>, ForProgError> {
        let n = word.len();
        let d = self.loops.len();
        let compiled: Vec<Compiled> = self
            .guards
            .iter()
            .map(Compiled::new)
            .collect::<Result<_, _>>()?;
        let mut out = Vec::new();
        let mut assignment = ctx.clone();
        let mut values = vec![0usize; d];
        self.iterate(0, n, &mut values, &mut |values| {
            for (i, (name, _)) in self.loops.iter().enumerate() {
                assignment.set(name, values[i]);
            }
            let mut fired: Option<usize> = None;
            for (g, guard) in compiled.iter().enumerate() {
                if guard.eval(word, &assignment)? {
                    if let Some(first) = fired {
                        return Err(ForProgError::GuardOverlap {
                            first,
                            second: g,
                            assignment: values.to_vec(),
                        });
                    }
                    fired = Some(g);
                }
            }
            if let Some(g) = fired {
                out.push(self.outputs[g].iter().map(|&i| values[i - 1]).collect());
            }
            Ok(())
        })?;
        Ok(out)
    }

    fn iterate(
        &self,
        level: usize,
        n: usize,
        values: &mut Vec<usize>,
        body: &mut impl FnMut(&[usize]) -> Result<(), ForProgError>,
    ) -> Result<(), ForProgError> {
        if level == self.loops.len() {
            return body(values);
        }
        let positions: Box<dyn Iterator<Item = usize>> = match self.loops[level].1 {
            LoopDir::Asc => Box::new(1..=n),
            LoopDir::Desc => Box::new((1..=n).rev()),
        };
        for pos in positions {
            values[level] = pos;
            self.iterate(level + 1, n, values, body)?;
        }
        Ok(())
    }

    /// Whether the program outputs every tuple of `[1..=n]^d` exactly once.
    pub fn validate_enumerator(&self, n: usize) -> Result<bool, ForProgError> {
        let tuples = self.run(n, &VarAssignment::new())?;
        let expected = n.pow(self.output_dim as u32);
        if tuples.len() != expected {
            return Ok(false);
        }
        let distinct: BTreeSet<&Vec<usize>> = tuples.iter().collect();
        Ok(distinct.len() == expected)
    }

    /// Whether the program enumerates the tuples of the word's positions in
    /// exactly the order defined by the order formula (over `2d` designated
    /// variables).
    pub fn matches_order(
        &self,
        order: &Formula,
        order_vars: &[String],
        word: &WordStructure,
        ctx: &VarAssignment,
    ) -> Result<bool, ForProgError> {
        let sorted = eval::sorted_tuples(order, order_vars, word, ctx)?
            .ok_or(ForProgError::NotLinearOrder)?;
        Ok(self.run_on(word, ctx)? == sorted)
    }
}

/// The program realizing the generalized lexicographic order with the given
/// per-coordinate directions: `d` nested loops, a single always-true guard,
/// output `(y1, ..., yd)`.
pub fn genlex_program(d: usize, dirs: &[LoopDir]) -> ForProgram {
    assert_eq!(dirs.len(), d, "need one direction per coordinate");
    assert!(d >= 1);
    let loops = dirs
        .iter()
        .enumerate()
        .map(|(i, &dir)| (format!("y{}", i + 1), dir))
        .collect();
    let dir_name: String = dirs
        .iter()
        .map(|&d| if d == LoopDir::Asc { 'l' } else { 'r' })
        .collect();
    ForProgram::new(
        &format!("genlex_{dir_name}"),
        loops,
        vec![Formula::True],
        vec![(1..=d).collect()],
        d,
    )
    .unwrap()
}

impl fmt::Display for ForProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "forprog {}", self.name)?;
        let loops: Vec<String> = self
            .loops
            .iter()
            .map(|(v, d)| {
                format!(
                    "({v} {})",
                    if *d == LoopDir::Asc { "asc" } else { "desc" }
                )
            })
            .collect();
        writeln!(f, "loops: {}", loops.join(" "))?;
        writeln!(f, "outdim: {}", self.output_dim)?;
        for (guard, output) in self.guards.iter().zip(&self.outputs) {
            let vars: Vec<&str> = output
                .iter()
                .map(|&i| self.loops[i - 1].0.as_str())
                .collect();
            writeln!(
                f,
                "guard {} output ({})",
                render_formula(guard),
                vars.join(" ")
            )?;
        }
        Ok(())
    }
}

/// Parses the for-program text format produced by `Display`.
pub fn parse_forprog(text: &str, env: &MonoidEnv) -> Result<ForProgram, ForProgError> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let name = lines
        .next()
        .and_then(|l| l.strip_prefix("forprog "))
        .ok_or_else(|| ForProgError::Parse("expected `forprog <name>` header".into()))?
        .trim()
        .to_string();
    let loops_line = lines
        .next()
        .and_then(|l| l.strip_prefix("loops:"))
        .ok_or_else(|| ForProgError::Parse("expected `loops:` line".into()))?;
    let mut loops = Vec::new();
    let trimmed = loops_line.trim();
    let mut rest = trimmed;
    while !rest.is_empty() {
        let open = rest
            .find('(')
            .ok_or_else(|| ForProgError::Parse("expected `(var asc|desc)`".into()))?;
        let close = rest[open..]
            .find(')')
            .ok_or_else(|| ForProgError::Parse("unclosed loop spec".into()))?
            + open;
        let inner = &rest[open + 1..close];
        let mut parts = inner.split_whitespace();
        let var = parts
            .next()
            .ok_or_else(|| ForProgError::Parse("missing loop variable".into()))?;
        let dir = match parts.next() {
            Some("asc") => LoopDir::Asc,
            Some("desc") => LoopDir::Desc,
            other => {
                return Err(ForProgError::Parse(format!(
                    "bad loop direction {other:?}"
                )))
            }
        };
        loops.push((var.to_string(), dir));
        rest = rest[close + 1..].trim_start();
    }
    let outdim_line = lines
        .next()
        .and_then(|l| l.strip_prefix("outdim:"))
        .ok_or_else(|| ForProgError::Parse("expected `outdim:` line".into()))?;
    let output_dim: usize = outdim_line
        .trim()
        .parse()
        .map_err(|_| ForProgError::Parse("bad output dimension".into()))?;
    let loop_vars: BTreeSet<String> = loops.iter().map(|(v, _)| v.clone()).collect();
    let mut guards = Vec::new();
    let mut outputs = Vec::new();
    for line in lines {
        let body = line
            .strip_prefix("guard ")
            .ok_or_else(|| ForProgError::Parse(format!("expected `guard ...`: `{line}`")))?;
        let split = body
            .rfind(" output ")
            .ok_or_else(|| ForProgError::Parse(format!("missing ` output ` in `{line}`")))?;
        let guard_text = &body[..split];
        let output_text = body[split + " output ".len()..].trim();
        let guard = parse_formula_with_free(guard_text, env, &loop_vars)?;
        let output_text = output_text
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(|| ForProgError::Parse("output tuple must be parenthesized".into()))?;
        let tuple: Result<Vec<usize>, ForProgError> = output_text
            .split_whitespace()
            .map(|v| {
                loops
                    .iter()
                    .position(|(name, _)| name == v)
                    .map(|i| i + 1)
                    .ok_or_else(|| ForProgError::Parse(format!("unknown loop variable `{v}`")))
            })
            .collect();
        guards.push(guard);
        outputs.push(tuple?);
    }
    ForProgram::new(&name, loops, guards, outputs, output_dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> VarAssignment {
        VarAssignment::new()
    }

    #[test]
    fn identity_enumerator_runs_in_order() {
        let p = genlex_program(1, &[LoopDir::Asc]);
        assert_eq!(
            p.run(3, &ctx()).unwrap(),
            vec![vec![1], vec![2], vec![3]]
        );
    }

    #[test]
    fn descending_enumerator_reverses() {
        let p = genlex_program(1, &[LoopDir::Desc]);
        assert_eq!(
            p.run(3, &ctx()).unwrap(),
            vec![vec![3], vec![2], vec![1]]
        );
    }

    #[test]
    fn column_major_enumerator() {
        // Outer loop is the second output coordinate.
        let p = ForProgram::new(
            "colmajor",
            vec![("y2".into(), LoopDir::Asc), ("y1".into(), LoopDir::Asc)],
            vec![Formula::True],
            vec![vec![2, 1]],
            2,
        )
        .unwrap();
        assert_eq!(
            p.run(2, &ctx()).unwrap(),
            vec![vec![1, 1], vec![2, 1], vec![1, 2], vec![2, 2]]
        );
        assert!(p.validate_enumerator(3).unwrap());
    }

    #[test]
    fn validate_accepts_identity_and_rejects_gaps() {
        assert!(genlex_program(1, &[LoopDir::Asc])
            .validate_enumerator(4)
            .unwrap());
        // Guard that drops the diagonal.
        let free: BTreeSet<String> = ["y1", "y2"].iter().map(|s| s.to_string()).collect();
        let guard =
            parse_formula_with_free("(not (= y1 y2))", &MonoidEnv::new(), &free).unwrap();
        let p = ForProgram::new(
            "offdiag",
            vec![("y1".into(), LoopDir::Asc), ("y2".into(), LoopDir::Asc)],
            vec![guard],
            vec![vec![1, 2]],
            2,
        )
        .unwrap();
        assert!(!p.validate_enumerator(3).unwrap());
    }

    #[test]
    fn overlapping_guards_are_an_error() {
        let p = ForProgram::new(
            "overlap",
            vec![("y1".into(), LoopDir::Asc)],
            vec![Formula::True, Formula::True],
            vec![vec![1], vec![1]],
            1,
        )
        .unwrap();
        assert!(matches!(
            p.run(2, &ctx()),
            Err(ForProgError::GuardOverlap { .. })
        ));
    }

    #[test]
    fn genlex_program_orders() {
        let p = genlex_program(2, &[LoopDir::Asc, LoopDir::Asc]);
        assert_eq!(
            p.run(2, &ctx()).unwrap(),
            vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]
        );
        let p = genlex_program(2, &[LoopDir::Asc, LoopDir::Desc]);
        assert_eq!(
            p.run(2, &ctx()).unwrap(),
            vec![vec![1, 2], vec![1, 1], vec![2, 2], vec![2, 1]]
        );
    }

    #[test]
    fn genlex_validates_for_all_directions() {
        for d in 1..=3usize {
            for mask in 0..1usize << d {
                let dirs: Vec<LoopDir> = (0..d)
                    .map(|i| {
                        if mask >> i & 1 == 1 {
                            LoopDir::Desc
                        } else {
                            LoopDir::Asc
                        }
                    })
                    .collect();
                let p = genlex_program(d, &dirs);
                for n in 0..=4 {
                    assert!(p.validate_enumerator(n).unwrap(), "d={d} mask={mask} n={n}");
                    assert_eq!(
                        p.run(n, &ctx()).unwrap().len(),
                        n.pow(d as u32)
                    );
                }
            }
        }
    }

    #[test]
    fn matches_order_for_lex_and_genlex() {
        let env = MonoidEnv::new();
        let vars: Vec<String> = ["a1", "a2", "b1", "b2"].iter().map(|s| s.to_string()).collect();
        let free: BTreeSet<String> = vars.iter().cloned().collect();
        let lex_formula = parse_formula_with_free(
            "(or (< a1 b1) (and (= a1 b1) (< a2 b2)))",
            &env,
            &free,
        )
        .unwrap();
        let w = WordStructure::new(1, vec![vec![false]; 3]).unwrap();
        let p = genlex_program(2, &[LoopDir::Asc, LoopDir::Asc]);
        assert!(p.matches_order(&lex_formula, &vars, &w, &ctx()).unwrap());

        // genlex(l, r): first coordinate ascending, second descending.
        let glr = parse_formula_with_free(
            "(or (< a1 b1) (and (= a1 b1) (< b2 a2)))",
            &env,
            &free,
        )
        .unwrap();
        let p = genlex_program(2, &[LoopDir::Asc, LoopDir::Desc]);
        assert!(p.matches_order(&glr, &vars, &w, &ctx()).unwrap());
        assert!(!p.matches_order(&lex_formula, &vars, &w, &ctx()).unwrap());
    }

    #[test]
    fn matches_order_rejects_descending_vs_ascending() {
        let env = MonoidEnv::new();
        let vars: Vec<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        let free: BTreeSet<String> = vars.iter().cloned().collect();
        let asc = parse_formula_with_free("(< a b)", &env, &free).unwrap();
        let w = WordStructure::new(1, vec![vec![false]; 3]).unwrap();
        let desc_prog = genlex_program(1, &[LoopDir::Desc]);
        assert!(!desc_prog.matches_order(&asc, &vars, &w, &ctx()).unwrap());
        let not_order = Formula::True;
        assert!(matches!(
            desc_prog.matches_order(&not_order, &vars, &w, &ctx()),
            Err(ForProgError::NotLinearOrder)
        ));
    }

    #[test]
    fn guards_may_use_free_parameters() {
        // Output ascending positions below the parameter p, then the rest
        // descending: a valid enumerator for every p.
        let env = MonoidEnv::new();
        let free: BTreeSet<String> = ["y1", "p"].iter().map(|s| s.to_string()).collect();
        let below = parse_formula_with_free("(or (< y1 p) (= y1 p))", &env, &free).unwrap();
        let above = parse_formula_with_free("(< p y1)", &env, &free).unwrap();
        let p = ForProgram::new(
            "split",
            vec![("y1".into(), LoopDir::Asc)],
            vec![below, above],
            vec![vec![1], vec![1]],
            1,
        )
        .unwrap();
        let tuples = p.run(4, &VarAssignment::new().bind("p", 2)).unwrap();
        assert_eq!(tuples, vec![vec![1], vec![2], vec![3], vec![4]]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(
            ForProgram::new(
                "bad",
                vec![("y1".into(), LoopDir::Asc)],
                vec![Formula::True],
                vec![vec![2]],
                1,
            ),
            Err(ForProgError::BadOutputIndex { .. })
        ));
        let guard = Formula::Maj("z".into(), Box::new(Formula::True));
        assert!(matches!(
            ForProgram::new(
                "bad",
                vec![("y1".into(), LoopDir::Asc)],
                vec![guard],
                vec![vec![1]],
                1,
            ),
            Err(ForProgError::BadGuard(0))
        ));
    }

    #[test]
    fn forprog_text_round_trip() {
        let p = genlex_program(2, &[LoopDir::Asc, LoopDir::Desc]);
        let text = p.to_string();
        let parsed = parse_forprog(&text, &MonoidEnv::new()).unwrap();
        assert_eq!(parsed, p);
    }
}
