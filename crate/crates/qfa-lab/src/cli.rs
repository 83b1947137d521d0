//! Command-line front end: machine file loading, checking, running,
//! converting, and oracle sweeps.
//!
//! All output is line-oriented text. Report headers restate the
//! tolerances in effect so results are self-describing. Exit codes:
//! 0 success, 1 semantic failure (failed check, scan disagreement),
//! 2 usage or parse error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::alphabet::{Alphabet, AlphabetError};
use crate::classical::{classify, run_gfa, run_rtpfa, ClassicalError, ClassifyMode, RtPfa};
use crate::convert::{
    equiprobable_union, rtpfa_to_rtkwqfa, rtpfa_to_rtqfa, rtqfa_to_gfa, ConvertError,
};
use crate::format::{from_machine, parse_machine_file, render_machine_file, to_machine, Machine};
use crate::linalg::{ComplexMatrix, RunOutcome};
use crate::machines::{oracle, LanguageOracle, ORACLE_NAMES};
use crate::quantum_rt::{run_rtkwqfa, run_rtqfa, QuantumError, RtKwqfa, RtQfa};
use crate::twoway::{
    classify_membership, path_trace, render_trace, run_twoway, Membership, TwoWayError,
    DEFAULT_MAX_STEPS, DEFAULT_RUN_TOL, MEMBERSHIP_SLACK,
};
use crate::wellformed::{check_rtkwqfa, check_rtpfa, check_rtqfa, check_unitary, CheckReport};

#[derive(Debug, Parser)]
#[command(
    name = "qfa-lab",
    version,
    about = "Simulate, verify, and convert probabilistic and quantum finite automata"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a machine file against the wellformedness conditions for
    /// its type
    Check {
        /// Machine definition file
        path: PathBuf,
    },
    /// Run a machine on an input string and report the outcome
    Run {
        /// Machine definition file
        path: PathBuf,
        /// Input string over the machine's alphabet (may be empty)
        input: String,
        /// Residual mass below which a halting run counts as converged
        #[arg(long, default_value_t = DEFAULT_RUN_TOL)]
        tol: f64,
        /// Step budget for machines that can loop
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: usize,
        /// Print the per-step configuration trace (kwqfa machines only)
        #[arg(long)]
        trace: bool,
    },
    /// Convert a machine into another model and write the result
    Convert {
        /// Which construction to apply
        kind: ConvertKind,
        /// Input machine file(s); `union` takes two, the rest take one
        #[arg(required = true, num_args = 1..=2)]
        inputs: Vec<PathBuf>,
        /// Where to write the converted machine
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run a machine on every string up to a length and compare the
    /// verdicts against a built-in oracle
    Scan {
        /// Machine definition file
        path: PathBuf,
        /// Ground-truth language: lnh, lys, or lfre
        #[arg(long)]
        oracle: String,
        /// Maximum input length, inclusive (the empty string is included)
        #[arg(long)]
        max_len: usize,
        /// Residual mass below which a halting run counts as converged
        #[arg(long, default_value_t = DEFAULT_RUN_TOL)]
        tol: f64,
        /// Step budget for machines that can loop
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
pub enum ConvertKind {
    /// Kraus-operator machine to a generalized automaton over the reals
    RtqfaToGfa,
    /// Stochastic machine to a measure-many unitary machine
    RtpfaToKwqfa,
    /// Stochastic machine to an exactly equivalent Kraus-operator machine
    RtpfaToRtqfa,
    /// Two measure-many machines to their equiprobable union
    Union,
}

/// A command failure carrying its process exit code.
struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn semantic(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

/// Execute a parsed command line and return the process exit code.
/// Results go to stdout; failure messages go to stderr.
pub fn execute(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Check { path } => cmd_check(&path),
        Command::Run {
            path,
            input,
            tol,
            max_steps,
            trace,
        } => cmd_run(&path, &input, tol, max_steps, trace),
        Command::Convert {
            kind,
            inputs,
            output,
        } => cmd_convert(kind, &inputs, &output),
        Command::Scan {
            path,
            oracle,
            max_len,
            tol,
            max_steps,
        } => cmd_scan(&path, &oracle, max_len, tol, max_steps),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn load(path: &Path) -> Result<Machine, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let file = parse_machine_file(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    to_machine(&file).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn describe(path: &Path, machine: &Machine) -> String {
    let n = machine.state_count();
    format!(
        "{} ({}, {n} state{})",
        path.display(),
        machine.type_keyword(),
        if n == 1 { "" } else { "s" }
    )
}

/// Table labels for checker reports, in tape order.
fn tape_labels(alphabet: &Alphabet) -> Vec<String> {
    let mut labels = vec!["cent".to_string()];
    labels.extend(alphabet.symbols().iter().map(|c| c.to_string()));
    labels.push("dollar".to_string());
    labels
}

/// The wellformedness report for a machine, plus any structural errors
/// that the per-matrix checkers cannot express.
fn check_machine(machine: &Machine) -> (Option<CheckReport>, Vec<String>, Vec<String>) {
    match machine {
        Machine::RtPfa(m) => (Some(check_rtpfa(m)), tape_labels(&m.alphabet), vec![]),
        Machine::Gfa(_) => (None, vec![], vec![]),
        Machine::RtQfa(m) => (Some(check_rtqfa(m)), tape_labels(&m.alphabet), vec![]),
        Machine::RtKwqfa(m) => (Some(check_rtkwqfa(m)), tape_labels(&m.alphabet), vec![]),
        Machine::TwoWay(m) => {
            let mats: Vec<&ComplexMatrix> = m.unitaries.iter_tape().map(|(_, u)| u).collect();
            let report = check_unitary(&mats);
            let structural = match m.validate() {
                Ok(()) | Err(TwoWayError::NotUnitary { .. }) => vec![],
                Err(e) => vec![e.to_string()],
            };
            (Some(report), tape_labels(&m.alphabet), structural)
        }
    }
}

fn cmd_check(path: &Path) -> Result<(), Failure> {
    let machine = load(path)?;
    println!("# qfa-lab check");
    println!("# machine: {}", describe(path, &machine));
    let (report, labels, structural) = check_machine(&machine);
    let mut passed = structural.is_empty();
    for line in &structural {
        println!("violation: {line}");
    }
    match report {
        None => println!("no wellformedness conditions apply to this machine type"),
        Some(report) => {
            passed &= report.passed;
            if !report.passed || structural.is_empty() {
                print!("{}", ensure_newline(report.render(&labels)));
            }
        }
    }
    if passed {
        Ok(())
    } else {
        Err(semantic(format!("{} is not well-formed", path.display())))
    }
}

fn ensure_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

/// Map a runner error to an exit code: a symbol outside the machine's
/// alphabet is a usage error, anything else is semantic.
trait RunError: std::fmt::Display {
    fn input_error(&self) -> bool;
}

impl RunError for ClassicalError {
    fn input_error(&self) -> bool {
        matches!(self, ClassicalError::Input(AlphabetError::UnknownSymbol(_)))
    }
}

impl RunError for QuantumError {
    fn input_error(&self) -> bool {
        matches!(self, QuantumError::Input(AlphabetError::UnknownSymbol(_)))
    }
}

impl RunError for TwoWayError {
    fn input_error(&self) -> bool {
        matches!(self, TwoWayError::Input(AlphabetError::UnknownSymbol(_)))
    }
}

fn run_failure(e: impl RunError) -> Failure {
    if e.input_error() {
        usage(e.to_string())
    } else {
        semantic(e.to_string())
    }
}

/// Execute any machine on one input, normalizing to a [`RunOutcome`].
/// Real-time machines read the framed input once, so their step count
/// is `|w| + 2` and they always converge; the generalized automaton
/// reports its value as `p_acc` without any clamping.
fn run_machine(
    machine: &Machine,
    w: &str,
    tol: f64,
    max_steps: usize,
) -> Result<RunOutcome, Failure> {
    let rt = |p: f64, w: &str| RunOutcome {
        p_acc: p,
        p_rej: 1.0 - p,
        residual: 0.0,
        steps: w.chars().count() + 2,
        converged: true,
    };
    match machine {
        Machine::RtPfa(m) => run_rtpfa(m, w).map(|p| rt(p, w)).map_err(run_failure),
        Machine::Gfa(m) => run_gfa(m, w)
            .map(|f| RunOutcome {
                p_acc: f,
                p_rej: 1.0 - f,
                residual: 0.0,
                steps: w.chars().count(),
                converged: true,
            })
            .map_err(run_failure),
        Machine::RtQfa(m) => run_rtqfa(m, w).map(|p| rt(p, w)).map_err(run_failure),
        Machine::RtKwqfa(m) => run_rtkwqfa(m, w).map_err(run_failure),
        Machine::TwoWay(m) => run_twoway(m, w, tol, max_steps).map_err(run_failure),
    }
}

fn print_outcome(machine: &Machine, out: &RunOutcome) {
    if matches!(machine, Machine::Gfa(_)) {
        // The generalized automaton computes a real value, not a
        // probability pair.
        println!("value:      {}", out.p_acc);
    } else {
        println!("p_acc:      {}", out.p_acc);
        println!("p_rej:      {}", out.p_rej);
        println!("residual:   {:e}", out.residual);
    }
    println!("steps:      {}", out.steps);
    println!("converged:  {}", out.converged);
    let p = out.p_acc;
    println!(
        "strict:     {}  (value > 1/2)",
        classify(p, 0.5, ClassifyMode::Strict)
    );
    println!(
        "nonstrict:  {}  (value >= 1/2)",
        classify(p, 0.5, ClassifyMode::Nonstrict)
    );
    println!(
        "equals:     {}  (|value - 1/2| <= 1e-9)",
        classify(p, 0.5, ClassifyMode::equals_default())
    );
    if !matches!(machine, Machine::Gfa(_)) {
        println!("membership: {}", classify_membership(out, MEMBERSHIP_SLACK));
    }
}

fn cmd_run(
    path: &Path,
    input: &str,
    tol: f64,
    max_steps: usize,
    trace: bool,
) -> Result<(), Failure> {
    let machine = load(path)?;
    // Surface foreign symbols as a usage error before any work.
    machine
        .alphabet()
        .encode(input)
        .map_err(|e| usage(e.to_string()))?;
    println!("# qfa-lab run");
    println!("# machine: {}", describe(path, &machine));
    println!("# input: {input:?}");
    println!("# tol: {tol:e}, max-steps: {max_steps}");
    let out = run_machine(&machine, input, tol, max_steps)?;
    print_outcome(&machine, &out);
    if trace {
        let Machine::TwoWay(m) = &machine else {
            return Err(usage("--trace requires a kwqfa-1way or kwqfa-2way machine"));
        };
        let steps = path_trace(m, input, out.steps).map_err(run_failure)?;
        println!("trace:");
        print!("{}", render_trace(m, &steps));
    }
    Ok(())
}

fn convert_failure(e: ConvertError) -> Failure {
    semantic(e.to_string())
}

fn expect_rtqfa(path: &Path, machine: Machine) -> Result<RtQfa, Failure> {
    match machine {
        Machine::RtQfa(m) => Ok(m),
        other => Err(usage(format!(
            "{} is {}, expected rt-qfa",
            path.display(),
            other.type_keyword()
        ))),
    }
}

fn expect_rtpfa(path: &Path, machine: Machine) -> Result<RtPfa, Failure> {
    match machine {
        Machine::RtPfa(m) => Ok(m),
        other => Err(usage(format!(
            "{} is {}, expected rt-pfa",
            path.display(),
            other.type_keyword()
        ))),
    }
}

fn expect_rtkwqfa(path: &Path, machine: Machine) -> Result<RtKwqfa, Failure> {
    match machine {
        Machine::RtKwqfa(m) => Ok(m),
        other => Err(usage(format!(
            "{} is {}, expected rt-kwqfa",
            path.display(),
            other.type_keyword()
        ))),
    }
}

fn cmd_convert(kind: ConvertKind, inputs: &[PathBuf], output: &Path) -> Result<(), Failure> {
    let expected_inputs = if kind == ConvertKind::Union { 2 } else { 1 };
    if inputs.len() != expected_inputs {
        return Err(usage(format!(
            "conversion takes {expected_inputs} input file(s), got {}",
            inputs.len()
        )));
    }
    println!("# qfa-lab convert");
    let mut metadata: Vec<String> = Vec::new();
    let converted: Machine = match kind {
        ConvertKind::RtqfaToGfa => {
            let m = expect_rtqfa(&inputs[0], load(&inputs[0])?)?;
            println!(
                "# input: {}",
                describe(&inputs[0], &Machine::RtQfa(m.clone()))
            );
            let g = rtqfa_to_gfa(&m).map_err(convert_failure)?;
            metadata.push(format!(
                "# states: {} -> {} (squared)",
                m.state_count, g.state_count
            ));
            Machine::Gfa(g)
        }
        ConvertKind::RtpfaToKwqfa => {
            let m = expect_rtpfa(&inputs[0], load(&inputs[0])?)?;
            println!(
                "# input: {}",
                describe(&inputs[0], &Machine::RtPfa(m.clone()))
            );
            let emb = rtpfa_to_rtkwqfa(&m).map_err(convert_failure)?;
            metadata.push(format!(
                "# states: {} -> {} (3n+6)",
                m.state_count, emb.machine.state_count
            ));
            metadata.push(format!("# scale l: {}", emb.scale));
            metadata.push("# decision identity: f' - 1/2 = l^(-2(|w|+2)) * (f - 1/2)".to_string());
            Machine::RtKwqfa(emb.machine)
        }
        ConvertKind::RtpfaToRtqfa => {
            let m = expect_rtpfa(&inputs[0], load(&inputs[0])?)?;
            println!(
                "# input: {}",
                describe(&inputs[0], &Machine::RtPfa(m.clone()))
            );
            let q = rtpfa_to_rtqfa(&m).map_err(convert_failure)?;
            metadata.push(format!(
                "# states: {} -> {} (same state space)",
                m.state_count, q.state_count
            ));
            Machine::RtQfa(q)
        }
        ConvertKind::Union => {
            let m1 = expect_rtkwqfa(&inputs[0], load(&inputs[0])?)?;
            let m2 = expect_rtkwqfa(&inputs[1], load(&inputs[1])?)?;
            println!(
                "# inputs: {}, {}",
                describe(&inputs[0], &Machine::RtKwqfa(m1.clone())),
                describe(&inputs[1], &Machine::RtKwqfa(m2.clone()))
            );
            let u = equiprobable_union(&m1, &m2).map_err(convert_failure)?;
            metadata.push(format!(
                "# states: {} + {} -> {} (n1+n2+1)",
                m1.state_count, m2.state_count, u.state_count
            ));
            Machine::RtKwqfa(u)
        }
    };

    let file = from_machine(&converted);
    let text = render_machine_file(&file);
    fs::write(output, &text)
        .map_err(|e| usage(format!("cannot write {}: {e}", output.display())))?;
    println!("# output: {}", describe(output, &converted));
    for line in &metadata {
        println!("{line}");
    }

    // The written file must itself load and pass its checks.
    let reloaded = load(output)?;
    let (report, labels, structural) = check_machine(&reloaded);
    let ok = structural.is_empty() && report.as_ref().is_none_or(|r| r.passed);
    if ok {
        println!("# output check: well-formed");
        Ok(())
    } else {
        for line in &structural {
            println!("violation: {line}");
        }
        if let Some(report) = report {
            print!("{}", ensure_newline(report.render(&labels)));
        }
        Err(semantic(format!(
            "converted machine {} failed its wellformedness check",
            output.display()
        )))
    }
}

struct ScanRow {
    w: String,
    outcome: RunOutcome,
    membership: Membership,
    is_member: bool,
}

impl ScanRow {
    fn agrees(&self) -> bool {
        match self.membership {
            Membership::Member => self.is_member,
            Membership::NonMember => !self.is_member,
            Membership::Undecided => false,
        }
    }
}

fn scan_rows(
    machine: &Machine,
    oracle: &LanguageOracle,
    strings: Vec<String>,
    tol: f64,
    max_steps: usize,
) -> Result<Vec<ScanRow>, Failure> {
    let pool = build_pool()?;
    pool.install(|| {
        strings
            .into_par_iter()
            .map(|w| {
                let outcome = run_machine(machine, &w, tol, max_steps)?;
                let membership = classify_membership(&outcome, MEMBERSHIP_SLACK);
                let is_member = oracle.accepts(&w);
                Ok(ScanRow {
                    w,
                    outcome,
                    membership,
                    is_member,
                })
            })
            .collect()
    })
}

/// A rayon pool sized by `QFA_LAB_THREADS`; 0 or unset means one thread
/// per logical CPU. Output order never depends on the pool size.
fn build_pool() -> Result<rayon::ThreadPool, Failure> {
    let threads = match std::env::var("QFA_LAB_THREADS") {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map_err(|_| usage(format!("QFA_LAB_THREADS must be a number, got {s:?}")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| usage(format!("cannot build thread pool: {e}")))
}

fn cmd_scan(
    path: &Path,
    oracle_name: &str,
    max_len: usize,
    tol: f64,
    max_steps: usize,
) -> Result<(), Failure> {
    let machine = load(path)?;
    let oracle = oracle(oracle_name)
        .map_err(|e| usage(format!("{e}; known oracles: {}", ORACLE_NAMES.join(", "))))?;
    let strings = machine.alphabet().strings_up_to(max_len);
    println!("# qfa-lab scan");
    println!("# machine: {}", describe(path, &machine));
    println!("# oracle: {}, max-len: {max_len}", oracle.name);
    println!("# tol: {tol:e}, max-steps: {max_steps}");
    println!("w\tp_acc\tresidual\tclass\toracle\tagree");

    let rows = scan_rows(&machine, &oracle, strings, tol, max_steps)?;
    let mut disagreements = 0usize;
    let mut undecided = 0usize;
    for row in &rows {
        let agree = row.agrees();
        if row.membership == Membership::Undecided {
            undecided += 1;
        } else if !agree {
            disagreements += 1;
        }
        println!(
            "{:?}\t{}\t{:e}\t{}\t{}\t{}",
            row.w,
            row.outcome.p_acc,
            row.outcome.residual,
            row.membership,
            if row.is_member {
                "member"
            } else {
                "non-member"
            },
            if agree { "yes" } else { "no" }
        );
    }
    println!(
        "# strings: {}, disagreements: {disagreements}, undecided: {undecided}",
        rows.len()
    );
    if disagreements == 0 && undecided == 0 {
        Ok(())
    } else {
        Err(semantic(format!(
            "scan found {disagreements} disagreement(s) and {undecided} undecided run(s)"
        )))
    }
}
