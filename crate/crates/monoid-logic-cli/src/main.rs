//! Batch front end: evaluate formulas over words, run the rewriting passes,
//! compare languages, and compute the algebraic objects (syntactic monoids,
//! typed monoids, block products).
//!
//! Exit codes: 0 on success (including a "not equivalent" or "false"
//! verdict), 1 on a domain error, 2 on a usage error.

use std::collections::BTreeSet;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use monoid_logic::eval;
use monoid_logic::forprog::{parse_forprog, ForProgram};
use monoid_logic::logic::{parse_formula, render_formula, Formula};
use monoid_logic::monoids::{parse_monoid, MonoidEnv};
use monoid_logic::regular::{parse_dfa, syntactic_monoid, Dfa};
use monoid_logic::rewrite::{
    equivalent_upto_threaded, run_pass, EnumeratorOptions, Equivalence,
};
use monoid_logic::typed::{
    block_product, parse_typed, recognizes, symbolic_recognizes_upto, syntactic_typed_monoid,
    TypedMonoid, DEFAULT_CARRIER_CAP,
};
use monoid_logic::words::{VarAssignment, WordStructure};

#[derive(Parser)]
#[command(
    name = "monoid-logic",
    version,
    about = "Logics over finite words with monoid multiplication quantifiers"
)]
struct Cli {
    /// Monoid files to load into the name environment (repeatable).
    #[arg(long = "monoid", global = true, value_name = "FILE")]
    monoid_files: Vec<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct BoundArgs {
    /// Word width (number of letter bits).
    #[arg(long, default_value_t = 1)]
    width: usize,
    /// Maximum word length to enumerate.
    #[arg(long, default_value_t = 5)]
    maxlen: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a formula on a single word.
    Eval {
        #[arg(long, value_name = "FILE")]
        formula: PathBuf,
        /// Word in text format, e.g. `101/011` or `-`.
        #[arg(long)]
        word: String,
        /// Free-variable bindings `name=position` (repeatable).
        #[arg(long = "assign", value_name = "VAR=POS")]
        assignments: Vec<String>,
    },
    /// List the words a closed formula accepts, up to a length bound.
    Lang {
        #[arg(long, value_name = "FILE")]
        formula: PathBuf,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// Apply a rewriting pass and print the result.
    Rewrite {
        #[arg(long, value_name = "FILE")]
        formula: PathBuf,
        /// One of: onehot, collapse, unarize, enumerator.
        #[arg(long)]
        pass: String,
        /// For-program file (required by the enumerator pass).
        #[arg(long, value_name = "FILE")]
        forprog: Option<PathBuf>,
        /// Validation bounds for the enumerator pass.
        #[arg(long, default_value_t = 1)]
        width: usize,
        #[arg(long, default_value_t = 4)]
        maxlen: usize,
        /// Write the rewritten formula here instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Compare the languages of two closed formulas up to a length bound.
    CheckEquiv {
        #[arg(long, value_name = "FILE")]
        a: PathBuf,
        #[arg(long, value_name = "FILE")]
        b: PathBuf,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// Syntactic monoid of a DFA's language.
    Synmon {
        #[arg(long, value_name = "FILE")]
        dfa: PathBuf,
    },
    /// Syntactic typed monoid of a DFA's language.
    Syntyped {
        #[arg(long, value_name = "FILE")]
        dfa: PathBuf,
    },
    /// Typed block product of two typed monoids.
    Blockprod {
        #[arg(long, value_name = "FILE")]
        left: PathBuf,
        #[arg(long, value_name = "FILE")]
        right: PathBuf,
        /// Context elements of the right base monoid (space separated).
        #[arg(long, default_value = "")]
        context: String,
        /// Use the ordered variant.
        #[arg(long)]
        ordered: bool,
        /// Carrier size cap.
        #[arg(long, default_value_t = DEFAULT_CARRIER_CAP)]
        cap: usize,
    },
    /// Whether a typed monoid recognizes a DFA's language (symbolic bases:
    /// agreement up to the length bound).
    Recognizes {
        #[arg(long, value_name = "FILE")]
        typed: PathBuf,
        #[arg(long, value_name = "FILE")]
        dfa: PathBuf,
        /// Length bound for symbolic bases.
        #[arg(long, default_value_t = 9)]
        maxlen: usize,
    },
    /// Run a for-program over positions 1..=n.
    ForprogRun {
        #[arg(long, value_name = "FILE")]
        forprog: PathBuf,
        #[arg(long)]
        n: usize,
        /// Optional word the guards may inspect (its length overrides --n).
        #[arg(long)]
        word: Option<String>,
    },
    /// Check that a for-program enumerates every tuple exactly once.
    ForprogCheck {
        #[arg(long, value_name = "FILE")]
        forprog: PathBuf,
        #[arg(long)]
        n: usize,
    },
    /// Parse and validate a file of any supported kind.
    Validate {
        #[arg(value_name = "FILE")]
        file: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => {
            // Downstream consumers may close the pipe early (head, grep -m);
            // that is not an error for a batch tool.
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(report.as_bytes()).and_then(|()| stdout.flush()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn fail(err: impl Display) -> String {
    err.to_string()
}

fn build_env(files: &[PathBuf]) -> Result<MonoidEnv, String> {
    let mut env = MonoidEnv::new();
    let mut seen = BTreeSet::new();
    for file in files {
        let m = parse_monoid(&read(file)?).map_err(fail)?;
        if !seen.insert(m.name().to_string()) {
            return Err(format!("monoid `{}` loaded twice", m.name()));
        }
        env.register(m);
    }
    Ok(env)
}

fn load_formula(path: &Path, env: &MonoidEnv) -> Result<Formula, String> {
    parse_formula(&read(path)?, env).map_err(fail)
}

fn load_dfa(path: &Path) -> Result<Dfa, String> {
    parse_dfa(&read(path)?).map_err(fail)
}

fn load_forprog(path: &Path, env: &MonoidEnv) -> Result<ForProgram, String> {
    parse_forprog(&read(path)?, env).map_err(fail)
}

fn thread_count() -> usize {
    std::env::var("MONOIDLOGIC_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

fn run(cli: Cli) -> Result<String, String> {
    use std::fmt::Write as _;
    let mut out = String::new();
    let env = build_env(&cli.monoid_files)?;
    match cli.command {
        Command::Eval {
            formula,
            word,
            assignments,
        } => {
            let f = load_formula(&formula, &env)?;
            let w = WordStructure::parse(&word).map_err(fail)?;
            let mut ctx = VarAssignment::new();
            for binding in &assignments {
                let (name, pos) = binding
                    .split_once('=')
                    .ok_or_else(|| format!("bad binding `{binding}`, expected VAR=POS"))?;
                let pos: usize = pos.parse().map_err(|_| format!("bad position in `{binding}`"))?;
                ctx.set(name, pos);
            }
            let value = eval::eval(&f, &w, &ctx).map_err(fail)?;
            let _ = writeln!(out, "{value}");
        }
        Command::Lang { formula, bounds } => {
            let f = load_formula(&formula, &env)?;
            let words = eval::language_of_threaded(&f, bounds.width, bounds.maxlen, thread_count())
                .map_err(fail)?;
            for w in words {
                let _ = writeln!(out, "{w}");
            }
        }
        Command::Rewrite {
            formula,
            pass,
            forprog,
            width,
            maxlen,
            out: out_file,
        } => {
            let f = load_formula(&formula, &env)?;
            let program = match &forprog {
                Some(path) => Some(load_forprog(path, &env)?),
                None => None,
            };
            let opts = EnumeratorOptions { width, max_len: maxlen };
            let report = run_pass(&f, &pass, program.as_ref(), &opts).map_err(fail)?;
            let _ = write!(out, "{report}");
            let rendered = render_formula(&report.output);
            match out_file {
                Some(path) => fs::write(&path, rendered + "\n")
                    .map_err(|e| format!("{}: {e}", path.display()))?,
                None => {
                    let _ = writeln!(out, "{rendered}");
                }
            }
        }
        Command::CheckEquiv { a, b, bounds } => {
            let fa = load_formula(&a, &env)?;
            let fb = load_formula(&b, &env)?;
            let outcome =
                equivalent_upto_threaded(&fa, &fb, bounds.width, bounds.maxlen, thread_count())
                    .map_err(fail)?;
            match outcome {
                Equivalence::Equivalent => {
                    let _ = writeln!(out, "EQUIVALENT (n<={})", bounds.maxlen);
                }
                Equivalence::Differs(w) => {
                    let _ = writeln!(out, "NOT EQUIVALENT (counterexample: {w})");
                }
            }
        }
        Command::Synmon { dfa } => {
            let d = load_dfa(&dfa)?;
            let r = syntactic_monoid(&d);
            let _ = write!(out, "{}", r.monoid);
            let accept: Vec<&str> = r
                .accept_set
                .iter()
                .map(|&e| r.monoid.element_name(e))
                .collect();
            let _ = writeln!(out, "accept: {}", accept.join(" "));
            let _ = write!(out, 
                "{}",
                monoid_logic::monoids::render_letter_map(&r.letter_images, &r.monoid)
            );
        }
        Command::Syntyped { dfa } => {
            let d = load_dfa(&dfa)?;
            let t = syntactic_typed_monoid(&d);
            let _ = write!(out, "{}", t.base);
            let _ = write!(out, "{t}");
        }
        Command::Blockprod {
            left,
            right,
            context,
            ordered,
            cap,
        } => {
            let lt = parse_typed(&read(&left)?, &env).map_err(fail)?;
            let rt = parse_typed(&read(&right)?, &env).map_err(fail)?;
            let lt = lt.as_finite().map_err(fail)?;
            let rt = rt.as_finite().map_err(fail)?;
            let ctx: Result<BTreeSet<usize>, _> = context
                .split_whitespace()
                .map(|name| rt.base.element_index(name))
                .collect();
            let bp = block_product(lt, rt, &ctx.map_err(fail)?, ordered, cap).map_err(fail)?;
            let _ = writeln!(out, "carrier: {}", bp.typed.base.size());
            let _ = writeln!(out, "generators: {}", bp.generators.len());
            let _ = write!(out, "{}", bp.typed.base);
            let _ = write!(out, "{}", bp.typed);
        }
        Command::Recognizes { typed, dfa, maxlen } => {
            let t = parse_typed(&read(&typed)?, &env).map_err(fail)?;
            let d = load_dfa(&dfa)?;
            match &t {
                TypedMonoid::Finite(_) => {
                    let outcome = recognizes(&t, &d).map_err(fail)?;
                    let _ = writeln!(out, "{outcome}");
                }
                TypedMonoid::Symbolic(base) => {
                    let outcome = symbolic_recognizes_upto(*base, &d, maxlen);
                    let _ = writeln!(out, "{outcome} (n<={maxlen})");
                }
            }
        }
        Command::ForprogRun { forprog, n, word } => {
            let p = load_forprog(&forprog, &env)?;
            let tuples = match word {
                Some(text) => {
                    let w = WordStructure::parse(&text).map_err(fail)?;
                    p.run_on(&w, &VarAssignment::new()).map_err(fail)?
                }
                None => p.run(n, &VarAssignment::new()).map_err(fail)?,
            };
            for t in tuples {
                let parts: Vec<String> = t.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(out, "({})", parts.join(" "));
            }
        }
        Command::ForprogCheck { forprog, n } => {
            let p = load_forprog(&forprog, &env)?;
            let ok = p.validate_enumerator(n).map_err(fail)?;
            let _ = writeln!(out, "{ok}");
        }
        Command::Validate { file } => {
            let text = read(&file)?;
            let head = text
                .lines()
                .map(str::trim)
                .find(|l| !l.is_empty())
                .unwrap_or("");
            let kind = head.split_whitespace().next().unwrap_or("");
            match kind {
                "monoid" => {
                    let m = parse_monoid(&text).map_err(fail)?;
                    let _ = writeln!(out, "ok: monoid {} ({} elements)", m.name(), m.size());
                }
                "dfa" => {
                    let d = parse_dfa(&text).map_err(fail)?;
                    let _ = writeln!(out, "ok: dfa {} ({} states)", d.name(), d.num_states());
                }
                "typed" => {
                    let t = parse_typed(&text, &env).map_err(fail)?;
                    let _ = writeln!(out, "ok: typed monoid {}", t.name());
                }
                "forprog" => {
                    let p = parse_forprog(&text, &env).map_err(fail)?;
                    let _ = writeln!(out, "ok: for-program {} ({} loops)", p.name(), p.loop_count());
                }
                _ if kind.starts_with('(') || kind == "true" || kind == "false" => {
                    let f = parse_formula(&text, &env).map_err(fail)?;
                    let _ = writeln!(out, "ok: formula ({} nodes)", f.count_nodes());
                }
                _ => {
                    // Last resort: a word.
                    let w = WordStructure::parse(&text).map_err(fail)?;
                    let _ = writeln!(out, "ok: word (length {}, width {})", w.len(), w.width());
                }
            }
        }
    }
    Ok(out)
}
