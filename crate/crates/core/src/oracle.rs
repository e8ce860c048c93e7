//! Client for an external ASP solver speaking clingo's text protocol.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::os::unix::process::CommandExt;
use std::process::{Command, Stdio};
use std::thread;
use std::time::Duration;

use thiserror::Error;
use wait_timeout::ChildExt;

use crate::ast::{Interpretation, Program};
use crate::emit::emit_text;
use crate::parser::parse_ground_atom;

/// Environment variable overriding the solver command.
pub const SOLVER_ENV: &str = "CASPR_SOLVER";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    /// Executable followed by fixed arguments.
    pub command: Vec<String>,
    pub solve_args: Vec<String>,
    pub enumerate_args: Vec<String>,
    pub timeout: Duration,
    /// Maximum number of models for enumeration, 0 for all.
    pub model_limit: usize,
}

fn on_path(exe: &str) -> bool {
    std::env::var_os("PATH")
        .map(|paths| std::env::split_paths(&paths).any(|d| d.join(exe).is_file()))
        .unwrap_or(false)
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

impl Default for SolverConfig {
    fn default() -> Self {
        let command = if on_path("clingo") {
            vec!["clingo".to_string()]
        } else {
            words("python3 -m clingo")
        };
        SolverConfig {
            command,
            solve_args: words("--opt-mode=opt --quiet=1,2,2"),
            enumerate_args: words("--opt-mode=optN --quiet=0,0,2"),
            timeout: Duration::from_secs(60),
            model_limit: 0,
        }
    }
}

impl SolverConfig {
    /// Default configuration with the command taken from `CASPR_SOLVER`
    /// when set.
    pub fn from_env() -> SolverConfig {
        let mut cfg = SolverConfig::default();
        if let Ok(cmd) = std::env::var(SOLVER_ENV) {
            if !cmd.trim().is_empty() {
                cfg.command = words(&cmd);
            }
        }
        cfg
    }

    pub fn with_command(mut self, cmd: &str) -> SolverConfig {
        self.command = words(cmd);
        self
    }

    pub fn with_timeout(mut self, t: Duration) -> SolverConfig {
        self.timeout = t;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Unsat,
    OptimumFound,
    Sat,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub models: Vec<Interpretation>,
    pub raw_cost_lines: Vec<String>,
}

impl SolveOutcome {
    /// The first model, if the call found any.
    pub fn model(&self) -> Option<&Interpretation> {
        match self.status {
            SolveStatus::Sat | SolveStatus::OptimumFound => self.models.first(),
            _ => None,
        }
    }

    fn unknown() -> SolveOutcome {
        SolveOutcome {
            status: SolveStatus::Unknown,
            models: Vec::new(),
            raw_cost_lines: Vec::new(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("cannot start solver `{command}`: {reason}")]
    SolverSpawnError { command: String, reason: String },
    #[error("unexpected solver output: {0}")]
    SolverProtocolError(String),
}

struct Raw {
    stdout: String,
    stderr: String,
    timed_out: bool,
}

fn run(cfg: &SolverConfig, args: &[String], input: &str) -> Result<Raw, OracleError> {
    let spawn_err = |reason: String| OracleError::SolverSpawnError {
        command: cfg.command.join(" "),
        reason,
    };
    let (exe, fixed) = cfg
        .command
        .split_first()
        .ok_or_else(|| spawn_err("empty command".into()))?;
    let mut child = Command::new(exe)
        .args(fixed)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0)
        .spawn()
        .map_err(|e| spawn_err(e.to_string()))?;

    let mut stdin = child.stdin.take().expect("piped stdin");
    let input = input.to_string();
    let writer = thread::spawn(move || {
        // A solver that exits early closes the pipe; that is not an error here.
        let _ = stdin.write_all(input.as_bytes());
    });
    let mut out = child.stdout.take().expect("piped stdout");
    let mut err = child.stderr.take().expect("piped stderr");
    let out_reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = out.read_to_string(&mut s);
        s
    });
    let err_reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = err.read_to_string(&mut s);
        s
    });

    let timed_out = match child.wait_timeout(cfg.timeout) {
        Ok(Some(_)) => false,
        Ok(None) => {
            // Kill the whole group so helper processes die with the solver.
            unsafe {
                libc::kill(-(child.id() as libc::pid_t), libc::SIGKILL);
            }
            let _ = child.kill();
            let _ = child.wait();
            true
        }
        Err(e) => return Err(spawn_err(e.to_string())),
    };
    let _ = writer.join();
    let stdout = out_reader.join().unwrap_or_default();
    let stderr = err_reader.join().unwrap_or_default();
    Ok(Raw {
        stdout,
        stderr,
        timed_out,
    })
}

struct Parsed {
    status: SolveStatus,
    /// Models with the optimization line that followed each, if any.
    answers: Vec<(Interpretation, Option<String>)>,
}

fn parse_model(line: &str) -> Result<Interpretation, OracleError> {
    line.split_whitespace()
        .map(|tok| parse_ground_atom(tok).ok_or_else(|| OracleError::SolverProtocolError(format!("bad atom `{tok}`"))))
        .collect()
}

fn parse_output(raw: &Raw) -> Result<Parsed, OracleError> {
    let mut status = None;
    let mut answers: Vec<(Interpretation, Option<String>)> = Vec::new();
    let mut lines = raw.stdout.lines();
    while let Some(line) = lines.next() {
        let t = line.trim();
        if t.starts_with("Answer:") {
            let model_line = lines
                .next()
                .ok_or_else(|| OracleError::SolverProtocolError("answer header without a model line".into()))?;
            answers.push((parse_model(model_line)?, None));
        } else if let Some(rest) = t.strip_prefix("Optimization:") {
            if let Some(last) = answers.last_mut() {
                last.1 = Some(rest.trim().to_string());
            }
        } else {
            let s = match t {
                "SATISFIABLE" => Some(SolveStatus::Sat),
                "UNSATISFIABLE" => Some(SolveStatus::Unsat),
                "OPTIMUM FOUND" => Some(SolveStatus::OptimumFound),
                "UNKNOWN" => Some(SolveStatus::Unknown),
                _ => None,
            };
            if s.is_some() {
                status = s;
            }
        }
    }
    let status = status.ok_or_else(|| {
        let detail: String = raw
            .stderr
            .lines()
            .filter(|l| !l.trim().is_empty())
            .take(5)
            .collect::<Vec<_>>()
            .join(" | ");
        OracleError::SolverProtocolError(if detail.is_empty() {
            "no status line in solver output".to_string()
        } else {
            format!("no status line in solver output; stderr: {detail}")
        })
    })?;
    if matches!(status, SolveStatus::Sat | SolveStatus::OptimumFound) && answers.is_empty() {
        return Err(OracleError::SolverProtocolError(
            "satisfiable result without a model".into(),
        ));
    }
    Ok(Parsed { status, answers })
}

fn outcome(parsed: Parsed, keep_all_optimal: bool) -> SolveOutcome {
    let raw_cost_lines: Vec<String> = parsed.answers.iter().filter_map(|(_, c)| c.clone()).collect();
    let models = match parsed.status {
        SolveStatus::Unsat | SolveStatus::Unknown => Vec::new(),
        _ if keep_all_optimal => {
            let last = parsed.answers.iter().rev().find_map(|(_, c)| c.clone());
            let mut seen = BTreeSet::new();
            parsed
                .answers
                .into_iter()
                .filter(|(_, c)| last.is_none() || *c == last)
                .filter_map(|(m, _)| seen.insert(m.clone()).then_some(m))
                .collect()
        }
        _ => parsed
            .answers
            .into_iter()
            .last()
            .map(|(m, _)| vec![m])
            .unwrap_or_default(),
    };
    SolveOutcome {
        status: parsed.status,
        models,
        raw_cost_lines,
    }
}

fn call(p: &Program, cfg: &SolverConfig, enumerate: bool) -> Result<SolveOutcome, OracleError> {
    let text = emit_text(p);
    let mut args = if enumerate {
        cfg.enumerate_args.clone()
    } else {
        cfg.solve_args.clone()
    };
    if enumerate {
        args.push(cfg.model_limit.to_string());
    }
    log::trace!("solver input:\n{text}");
    let raw = run(cfg, &args, &text)?;
    if raw.timed_out {
        return Ok(SolveOutcome::unknown());
    }
    Ok(outcome(parse_output(&raw)?, enumerate))
}

/// One optimal answer set of `p`.
pub fn solve_optimal(p: &Program, cfg: &SolverConfig) -> Result<SolveOutcome, OracleError> {
    call(p, cfg, false)
}

/// All optimal answer sets of `p`, deduplicated.
pub fn enumerate_optimal(p: &Program, cfg: &SolverConfig) -> Result<SolveOutcome, OracleError> {
    call(p, cfg, true)
}

/// Checks that the solver runs and follows the expected protocol; returns
/// its version line.
pub fn probe(cfg: &SolverConfig) -> Result<String, OracleError> {
    let raw = run(cfg, &["--version".to_string()], "")?;
    let version = raw
        .stdout
        .lines()
        .next()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .ok_or_else(|| OracleError::SolverProtocolError("empty version output".into()))?
        .to_string();
    let p = crate::parser::parse_program("a :- not b. b :- not a. :~ a. [1@1]").expect("probe program parses");
    let out = enumerate_optimal(&p, cfg)?;
    if out.status != SolveStatus::OptimumFound || out.models != vec![crate::ast::props(&["b"])] {
        return Err(OracleError::SolverProtocolError(format!(
            "probe program gave {:?} with models {:?}",
            out.status,
            out.models.iter().map(ToString::to_string).collect::<Vec<_>>()
        )));
    }
    Ok(version)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::props;

    fn raw(s: &str) -> Raw {
        Raw {
            stdout: s.to_string(),
            stderr: String::new(),
            timed_out: false,
        }
    }

    #[test]
    fn parses_enumeration_output() {
        let text = "clingo version 5.8.2\nReading from stdin\nSolving...\n\
            Answer: 1 (Time: 0.000s)\nb\nOptimization: 1\n\
            Answer: 1 (Time: 0.000s)\nb\nOptimization: 1\n\
            Answer: 2 (Time: 0.000s)\na\nOptimization: 1\nOPTIMUM FOUND\n\nModels : 3\n";
        let o = outcome(parse_output(&raw(text)).unwrap(), true);
        assert_eq!(o.status, SolveStatus::OptimumFound);
        assert_eq!(o.models, vec![props(&["b"]), props(&["a"])]);
    }

    #[test]
    fn drops_pre_optimal_answers() {
        let text = "Answer: 1\na\nOptimization: 1\nAnswer: 2\nb\nOptimization: 0\nAnswer: 1\nb\nOptimization: 0\nOPTIMUM FOUND\n";
        let o = outcome(parse_output(&raw(text)).unwrap(), true);
        assert_eq!(o.models, vec![props(&["b"])]);
    }

    #[test]
    fn empty_model_line() {
        let o = outcome(parse_output(&raw("Answer: 1\n\nSATISFIABLE\n")).unwrap(), false);
        assert_eq!(o.models, vec![Interpretation::new()]);
    }

    #[test]
    fn missing_status_is_protocol_error() {
        assert!(matches!(
            parse_output(&raw("garbage\n")),
            Err(OracleError::SolverProtocolError(_))
        ));
        assert!(matches!(
            parse_output(&raw("Answer: 1\nnot(an atom\nSATISFIABLE\n")),
            Err(OracleError::SolverProtocolError(_))
        ));
    }

    #[test]
    fn unsat_has_no_models() {
        let o = outcome(parse_output(&raw("UNSATISFIABLE\n")).unwrap(), false);
        assert_eq!(o.status, SolveStatus::Unsat);
        assert!(o.models.is_empty());
    }

    #[test]
    fn nonexistent_command() {
        let cfg = SolverConfig::default().with_command("/nonexistent/solver");
        assert!(matches!(probe(&cfg), Err(OracleError::SolverSpawnError { .. })));
    }
}
