//! The `mqsym` command line.
//!
//! Exit status: 0 on success, 1 when a query fails (including a `verify`
//! deviation above tolerance), 2 on parse or configuration errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dsl::{self, lexer, DslError, ErrorKind, Span, Stmt, StmtKind};
use crate::realization::{BasisFile, Realization, DEFAULT_ORACLE_TOLERANCE};

pub mod exec;
pub mod format;
pub mod fuzz;

use exec::{run_program, Session};
use format::{color_enabled, diagnostic, dsl_diagnostic, fmt_num};
use fuzz::{run_fuzz, FuzzConfig};

#[derive(Debug, Parser)]
#[command(name = "mqsym", version, about = "Measurement-symbol algebra: normal forms, functionals and a matrix oracle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a script.
    Run {
        script: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run an inline statement; a bare expression is normalized.
    Eval {
        #[arg(short = 'e', long = "expr")]
        expr: String,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Compare random expression trees with their normal forms under random bases.
    Fuzz {
        #[arg(long, default_value = "2..5")]
        dims: DimRange,
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
        cases: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_ORACLE_TOLERANCE, value_parser = positive)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = Output::Text)]
        output: Output,
    },
    /// Print a script in canonical form.
    Fmt { script: PathBuf },
}

#[derive(Debug, Args)]
struct RunOpts {
    /// JSON basis file fixing a realization.
    #[arg(long)]
    basis: Option<PathBuf>,
    /// Oracle tolerance for `verify`.
    #[arg(long, default_value_t = DEFAULT_ORACLE_TOLERANCE, value_parser = positive)]
    tol: f64,
    /// Unitarity tolerance for the basis file, overriding the file's own.
    #[arg(long, value_parser = positive)]
    unitary_tol: Option<f64>,
    /// Seed for `verify` when no basis file is given.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Output::Text)]
    output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct DimRange(usize, usize);

impl FromStr for DimRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("invalid dimension `{t}`"));
        let (lo, hi) = match s.split_once("..") {
            Some((lo, hi)) => (parse(lo)?, parse(hi.strip_prefix('=').unwrap_or(hi))?),
            None => {
                let d = parse(s)?;
                (d, d)
            }
        };
        if lo < 1 {
            return Err("dimensions start at 1".into());
        }
        if lo > hi {
            return Err(format!("empty range {lo}..{hi}"));
        }
        Ok(DimRange(lo, hi))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

/// Entry point with explicit streams; returns the exit status.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let color = color_enabled();
    let status = match cli.command {
        Command::Run { script, opts } => match std::fs::read_to_string(&script) {
            Ok(source) => {
                let origin = script.display().to_string();
                dsl::parse(&source)
                    .map_err(|e| dsl_diagnostic(&source, &origin, &e, color))
                    .and_then(|stmts| execute(&source, &origin, &stmts, &opts, out, color))
            }
            Err(e) => Err(diagnostic("", "", &format!("cannot read {}: {e}", script.display()), None, color)),
        },
        Command::Eval { expr, opts } => parse_inline(&expr)
            .map_err(|e| dsl_diagnostic(&expr, "<expr>", &e, color))
            .and_then(|stmts| execute(&expr, "<expr>", &stmts, &opts, out, color)),
        Command::Fuzz {
            dims,
            cases,
            seed,
            tol,
            output,
        } => Ok(fuzz_command(
            &FuzzConfig {
                seed,
                dims: (dims.0, dims.1),
                cases: cases as usize,
                tolerance: tol,
            },
            output,
            out,
        )),
        Command::Fmt { script } => match std::fs::read_to_string(&script) {
            Ok(source) => match dsl::parse(&source) {
                Ok(stmts) => {
                    let _ = write!(out, "{}", dsl::render_program(&stmts));
                    Ok(0)
                }
                Err(e) => Err(dsl_diagnostic(&source, &script.display().to_string(), &e, color)),
            },
            Err(e) => Err(diagnostic("", "", &format!("cannot read {}: {e}", script.display()), None, color)),
        },
    };
    match status {
        Ok(code) => code,
        Err(message) => {
            let _ = write!(err, "{message}");
            2
        }
    }
}

/// A statement, or a bare expression taken as `normalize`.
fn parse_inline(source: &str) -> Result<Vec<Stmt>, DslError> {
    let starts_statement = lexer::tokenize(source)?
        .first()
        .is_some_and(|t| matches!(&t.tok, lexer::Tok::Ident(w) if dsl::parser::STATEMENT_KEYWORDS.contains(&w.as_str())));
    if starts_statement {
        dsl::parse(source)
    } else {
        let e = dsl::parser::parse_expr(source)?;
        Ok(vec![Stmt {
            span: e.span,
            kind: StmtKind::Normalize(e),
        }])
    }
}

fn execute(
    source: &str,
    origin: &str,
    stmts: &[Stmt],
    opts: &RunOpts,
    out: &mut dyn Write,
    color: bool,
) -> Result<i32, String> {
    let basis = match &opts.basis {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| diagnostic("", "", &format!("cannot read {}: {e}", path.display()), None, color))?;
            let mut file = BasisFile::parse(&text).map_err(|e| {
                diagnostic("", "", &format!("{}: {e}", path.display()), None, color)
            })?;
            if let Some(t) = opts.unitary_tol {
                file.tolerance = t;
            }
            Some((path, file))
        }
        None => None,
    };
    let program = dsl::analyze_with(stmts, |b| match &basis {
        Some((path, file)) => file.declare_into(b).map_err(|e| {
            DslError::new(ErrorKind::Declaration(format!("{}: {e}", path.display())), Span::default())
        }),
        None => Ok(()),
    })
    .map_err(|e| dsl_diagnostic(source, origin, &e, color))?;
    let realization = match &basis {
        Some((path, file)) => Some(
            Realization::from_basis_file(file, program.registry.clone())
                .map_err(|e| diagnostic("", "", &format!("{}: {e}", path.display()), None, color))?,
        ),
        None => None,
    };
    let session = Session {
        realization,
        tolerance: opts.tol,
        seed: opts.seed,
    };
    let results = run_program(&program, &session);
    let mut status = 0;
    for r in &results {
        let line = match opts.output {
            Output::Text => r.text(),
            Output::Json => serde_json::to_string(r).expect("plain data serializes"),
        };
        let _ = writeln!(out, "{line}");
        if r.failed {
            status = 1;
        }
    }
    Ok(status)
}

fn fuzz_command(cfg: &FuzzConfig, output: Output, out: &mut dyn Write) -> i32 {
    let (summary, _) = run_fuzz(cfg);
    let text = match output {
        Output::Json => serde_json::to_string(&summary).expect("plain data serializes"),
        Output::Text => {
            let failures = if summary.failures.is_empty() {
                "0".to_string()
            } else {
                let shown: Vec<String> = summary.failures.iter().take(10).map(usize::to_string).collect();
                format!("{} (cases {})", summary.failures.len(), shown.join(", "))
            };
            [
                format!("cases: {}", summary.cases),
                format!("dims: {}..{}", summary.dims.0, summary.dims.1),
                format!("seed: {}", summary.seed),
                format!("max depth: {}", summary.max_depth),
                format!(
                    "max deviation: {} (case {})",
                    fmt_num(summary.max_deviation),
                    summary.worst_case
                ),
                format!("tolerance: {}", fmt_num(summary.tolerance)),
                format!("failures: {failures}"),
                format!("result: {}", if summary.passed() { "pass" } else { "fail" }),
            ]
            .join("\n")
        }
    };
    let _ = writeln!(out, "{text}");
    if summary.passed() {
        0
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut argv = vec!["mqsym"];
        argv.extend_from_slice(args);
        let code = run_cli(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn dim_ranges() {
        assert_eq!("2..5".parse::<DimRange>(), Ok(DimRange(2, 5)));
        assert_eq!("2..=5".parse::<DimRange>(), Ok(DimRange(2, 5)));
        assert_eq!("3".parse::<DimRange>(), Ok(DimRange(3, 3)));
        assert!("0..2".parse::<DimRange>().is_err());
        assert!("5..2".parse::<DimRange>().is_err());
    }

    #[test]
    fn eval_normalizes() {
        assert_eq!(run(&["eval", "-e", "normalize M[Z:up]*M[Z:up]"]), (0, "M[Z:up]\n".into(), String::new()));
        assert_eq!(run(&["eval", "-e", "M[Z:up]*M[Z:down]"]).1, "0\n");
        let (code, out, _) = run(&["eval", "-e", "prob(Z:up | Z:up)", "--output", "json"]);
        assert_eq!(code, 0);
        assert_eq!(out, "{\"query\":\"prob(Z:up | Z:up)\",\"result\":\"1\"}\n");
    }

    #[test]
    fn exit_codes() {
        let (code, _, err) = run(&["eval", "-e", "normalize M[Z:up"]);
        assert_eq!(code, 2);
        assert!(err.contains("<expr>:1:17"), "{err}");
        let (code, out, _) = run(&["eval", "-e", "trace I"]);
        assert_eq!(code, 1);
        assert!(out.starts_with("error: "));
        assert_eq!(run(&["eval", "-e", "x", "--tol", "0"]).0, 2);
        assert_eq!(run(&["fuzz", "--cases", "0"]).0, 2);
        assert_eq!(run(&["fuzz", "--dims", "3..1"]).0, 2);
        assert_eq!(run(&["--help"]).0, 0);
    }

    #[test]
    fn verify_without_basis_uses_random_bases() {
        let (code, out, _) = run(&["eval", "-e", "verify (M[A:a] + M[B:b]) * M[A:a <- B:b]† * <A:a|B:b>"]);
        assert_eq!(code, 0, "{out}");
        assert!(out.starts_with("pass (deviation "), "{out}");
        let (code, out, _) = run(&["eval", "-e", "verify M[A:a] * M[B:b] * M[B:c]"]);
        assert_eq!(code, 1);
        assert!(out.contains("label counts"), "{out}");
    }
}
