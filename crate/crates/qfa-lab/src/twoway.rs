//! Two-way (and one-way restricted) measure-many quantum finite automata
//! with a direction function: each state carries a fixed head move, so a
//! single unitary per tape symbol determines the evolution of the joint
//! (state, head position) configuration space.
//!
//! The induced configuration-level operator wraps head positions
//! cyclically. On transitions the computation can actually reach, a wrap
//! is a boundary fault and is reported as a build error; on unreachable
//! configurations the wrap merely closes the operator up to an exact
//! permutation pattern, which keeps it unitary whenever the state-level
//! matrices are. Runs therefore always evolve under a norm-preserving
//! map, and the halting accumulation inherits its conservation guarantee.

use crate::alphabet::{Alphabet, AlphabetError, HeadMove, SymbolMap, TapeSym};
use crate::linalg::{self, ComplexMatrix, ComplexVector, RunOutcome, TOL_WELLFORMED};
use crate::quantum_rt::StateKind;
use num_complex::Complex64;
use thiserror::Error;

/// Default measurement cutoff for a two-way run: the computation is
/// considered halted once the nonhalting mass drops below this.
pub const DEFAULT_RUN_TOL: f64 = 1e-12;

/// Default step budget for a two-way run before it is flagged as not
/// converged.
pub const DEFAULT_MAX_STEPS: usize = 100_000;

/// Amplitudes at or below this magnitude are omitted from path traces.
pub const TRACE_CUTOFF: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum TwoWayError {
    #[error(transparent)]
    Input(#[from] AlphabetError),
    #[error("{what}: expected {expected} entries, found {found}")]
    BadShape {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("initial state {index} out of range for {state_count} states")]
    BadInitialState { index: usize, state_count: usize },
    #[error("initial state {index} must be nonhalting")]
    HaltingInitialState { index: usize },
    #[error(
        "transition matrix for '{symbol}' is not unitary: defect {defect:.3e} exceeds {tolerance:.0e}"
    )]
    NotUnitary {
        symbol: String,
        defect: f64,
        tolerance: f64,
    },
    #[error("one-way machine assigns a left move to state {state}")]
    OneWayMovesLeft { state: String },
    #[error(
        "boundary violation: reading '{symbol}' at position {position} in state {state} \
         sends amplitude {amplitude:.6e} to {target}, whose move leaves the tape"
    )]
    BoundaryViolation {
        state: String,
        position: usize,
        symbol: String,
        target: String,
        amplitude: f64,
    },
}

/// Measure-many finite automaton whose head move is a function of the
/// target state. `moves[q]` is the displacement applied on every
/// transition into state `q`; `unitaries` hold one state-level matrix per
/// tape symbol, including the end-markers.
#[derive(Debug, Clone)]
pub struct TwoWayKwqfa {
    pub state_count: usize,
    pub alphabet: Alphabet,
    pub unitaries: SymbolMap<ComplexMatrix>,
    pub moves: Vec<HeadMove>,
    pub initial: usize,
    pub kinds: Vec<StateKind>,
    pub names: Vec<String>,
    /// When set, the machine claims the one-way restriction: no state may
    /// move the head left. Validation enforces the claim.
    pub one_way: bool,
}

impl TwoWayKwqfa {
    /// Check shapes, the initial state, unitarity of every symbol matrix
    /// within [`TOL_WELLFORMED`], and the one-way restriction if claimed.
    pub fn validate(&self) -> Result<(), TwoWayError> {
        let n = self.state_count;
        for (what, found) in [
            ("head moves", self.moves.len()),
            ("state kinds", self.kinds.len()),
            ("state names", self.names.len()),
        ] {
            if found != n {
                return Err(TwoWayError::BadShape {
                    what,
                    expected: n,
                    found,
                });
            }
        }
        if self.initial >= n {
            return Err(TwoWayError::BadInitialState {
                index: self.initial,
                state_count: n,
            });
        }
        if self.kinds[self.initial] != StateKind::Nonhalting {
            return Err(TwoWayError::HaltingInitialState {
                index: self.initial,
            });
        }
        for (sym, u) in self.unitaries.iter_tape() {
            if u.rows != n || u.cols != n {
                return Err(TwoWayError::BadShape {
                    what: "transition matrix",
                    expected: n * n,
                    found: u.rows * u.cols,
                });
            }
            let defect = unitarity_defect(u);
            if defect > TOL_WELLFORMED {
                return Err(TwoWayError::NotUnitary {
                    symbol: sym.describe(&self.alphabet),
                    defect,
                    tolerance: TOL_WELLFORMED,
                });
            }
        }
        if self.one_way {
            for (q, mv) in self.moves.iter().enumerate() {
                if *mv == HeadMove::Left {
                    return Err(TwoWayError::OneWayMovesLeft {
                        state: self.names[q].clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    let gram = u.dagger().mul(u).expect("square factors");
    gram.max_abs_diff(&ComplexMatrix::identity(u.rows))
}

/// The configuration space of one machine on one framed input, together
/// with the induced configuration-level step operator in sparse
/// column-major form.
///
/// Configurations are pairs (state, position) with positions 1-based over
/// the framed tape; indices are state-major, so
/// `index(q, x) = q * tape_len + (x - 1)`.
#[derive(Debug, Clone)]
pub struct ConfigSpace {
    pub state_count: usize,
    pub tape: Vec<TapeSym>,
    /// `columns[src]` lists the (target, amplitude) entries of the step
    /// operator's column at configuration `src`.
    pub columns: Vec<Vec<(usize, Complex64)>>,
}

impl ConfigSpace {
    pub fn tape_len(&self) -> usize {
        self.tape.len()
    }

    /// Total number of configurations, `state_count * tape_len`.
    pub fn dim(&self) -> usize {
        self.state_count * self.tape.len()
    }

    /// Index of configuration (state, position); `position` is 1-based.
    pub fn index(&self, state: usize, position: usize) -> usize {
        debug_assert!(state < self.state_count);
        debug_assert!((1..=self.tape.len()).contains(&position));
        state * self.tape.len() + (position - 1)
    }

    pub fn state_of(&self, index: usize) -> usize {
        index / self.tape.len()
    }

    /// 1-based head position of a configuration index.
    pub fn position_of(&self, index: usize) -> usize {
        index % self.tape.len() + 1
    }

    /// Apply the step operator to a configuration vector by scattering
    /// each nonzero source entry along its column.
    pub fn apply(&self, psi: &ComplexVector) -> ComplexVector {
        assert_eq!(psi.dim(), self.dim(), "configuration vector dimension");
        let mut out = ComplexVector::zeros(self.dim());
        for (src, amp) in psi.entries.iter().enumerate() {
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            for &(dst, u) in &self.columns[src] {
                out.entries[dst] += u * amp;
            }
        }
        out
    }

    /// Materialize the step operator as a dense matrix.
    pub fn dense(&self) -> ComplexMatrix {
        let d = self.dim();
        let mut m = ComplexMatrix::zeros(d, d);
        for (src, col) in self.columns.iter().enumerate() {
            for &(dst, u) in col {
                m.set(dst, src, u);
            }
        }
        m
    }

    /// `max |(M^† M - I)[i, j]|` computed column-by-column from the
    /// sparse form. The Gram entry for a column pair is the inner product
    /// of their sparse target lists.
    pub fn gram_defect(&self) -> f64 {
        let d = self.dim();
        let mut scratch: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); d];
        let mut defect: f64 = 0.0;
        for j in 0..d {
            for &(dst, u) in &self.columns[j] {
                scratch[dst] = u;
            }
            // Columns j..d against j; lower-triangle entries are the
            // conjugates of upper ones, so one orientation suffices.
            for k in j..d {
                let mut dot = Complex64::new(0.0, 0.0);
                for &(dst, u) in &self.columns[k] {
                    let s = scratch[dst];
                    if s != Complex64::new(0.0, 0.0) {
                        dot += s.conj() * u;
                    }
                }
                let expected = if k == j {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                defect = defect.max((dot - expected).norm());
            }
            for &(dst, _) in &self.columns[j] {
                scratch[dst] = Complex64::new(0.0, 0.0);
            }
        }
        defect
    }
}

/// Build the configuration-level step operator of `m` on input `w`.
///
/// Position arithmetic wraps cyclically over the framed tape, which makes
/// the operator exactly unitary whenever the state-level matrices are.
/// Wrapping is legitimate only where the run can never look: any
/// transition with nonzero amplitude that would wrap — i.e. would step to
/// position 0 or past the end-marker — out of a configuration reachable
/// from the initial one is reported as a [`TwoWayError::BoundaryViolation`].
/// Reachability expands through nonhalting configurations only, since
/// halting configurations are measured away before they could move again.
pub fn build_config_operator(m: &TwoWayKwqfa, w: &str) -> Result<ConfigSpace, TwoWayError> {
    m.validate()?;
    let tape = m.alphabet.tape(w)?;
    let t = tape.len();
    let n = m.state_count;
    let dim = n * t;

    let mut columns: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); dim];
    // columns[q * t + (x - 1)] = transitions out of (q, x).
    for (pos0, &sym) in tape.iter().enumerate() {
        let u = m.unitaries.get(sym);
        for q in 0..n {
            let src = q * t + pos0;
            let col = &mut columns[src];
            for q_next in 0..n {
                let amp = u.get(q_next, q);
                if amp.norm_sqr() == 0.0 {
                    continue;
                }
                let shifted = pos0 as i64 + m.moves[q_next].offset();
                let dst_pos0 = shifted.rem_euclid(t as i64) as usize;
                col.push((q_next * t + dst_pos0, amp));
            }
        }
    }

    let space = ConfigSpace {
        state_count: n,
        tape,
        columns,
    };

    // Breadth-first reach from the initial configuration, through
    // nonhalting configurations only. A wrapping transition out of a
    // reached nonhalting configuration is a boundary fault.
    let mut reached = vec![false; dim];
    let mut queue = vec![space.index(m.initial, 1)];
    reached[queue[0]] = true;
    while let Some(src) = queue.pop() {
        if m.kinds[space.state_of(src)] != StateKind::Nonhalting {
            continue;
        }
        let pos = space.position_of(src);
        for &(dst, amp) in &space.columns[src] {
            let q_next = space.state_of(dst);
            let shifted = pos as i64 + m.moves[q_next].offset();
            if !(1..=t as i64).contains(&shifted) {
                return Err(TwoWayError::BoundaryViolation {
                    state: m.names[space.state_of(src)].clone(),
                    position: pos,
                    symbol: space.tape[pos - 1].describe(&m.alphabet),
                    target: m.names[q_next].clone(),
                    amplitude: amp.norm(),
                });
            }
            if !reached[dst] {
                reached[dst] = true;
                queue.push(dst);
            }
        }
    }
    Ok(space)
}

fn split_step(
    space: &ConfigSpace,
    kinds: &[StateKind],
    psi: &ComplexVector,
) -> (ComplexVector, f64, f64) {
    let mut moved = space.apply(psi);
    let mut d_acc = 0.0;
    let mut d_rej = 0.0;
    for (idx, amp) in moved.entries.iter_mut().enumerate() {
        match kinds[space.state_of(idx)] {
            StateKind::Nonhalting => {}
            StateKind::Accepting => {
                d_acc += amp.norm_sqr();
                *amp = Complex64::new(0.0, 0.0);
            }
            StateKind::Rejecting => {
                d_rej += amp.norm_sqr();
                *amp = Complex64::new(0.0, 0.0);
            }
        }
    }
    (moved, d_acc, d_rej)
}

/// Run `m` on `w`: start in the initial state at position 1, repeatedly
/// apply the configuration-level operator, measure out halting mass, and
/// accumulate until the residual drops below `tol` or `max_steps` is
/// exhausted. Running out of steps is reported through
/// `converged = false`, never as an error.
pub fn run_twoway(
    m: &TwoWayKwqfa,
    w: &str,
    tol: f64,
    max_steps: usize,
) -> Result<RunOutcome, TwoWayError> {
    let space = build_config_operator(m, w)?;
    let init = ComplexVector::basis(space.dim(), space.index(m.initial, 1));
    Ok(linalg::run_halting_loop(init, tol, max_steps, |psi| {
        split_step(&space, &m.kinds, psi)
    }))
}

/// [`run_twoway`] with the default tolerance and step budget.
pub fn run_twoway_default(m: &TwoWayKwqfa, w: &str) -> Result<RunOutcome, TwoWayError> {
    run_twoway(m, w, DEFAULT_RUN_TOL, DEFAULT_MAX_STEPS)
}

/// Slack added to the residual when deciding membership: it absorbs the
/// floating-point error of the accumulated probabilities, which is far
/// below this for every machine in the suite.
pub const MEMBERSHIP_SLACK: f64 = 1e-9;

/// Verdict of an unbounded-error run against the cutpoint 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Member,
    NonMember,
    /// The run hit its step budget before the residual dropped below
    /// tolerance, so neither verdict is supported.
    Undecided,
}

impl std::fmt::Display for Membership {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Membership::Member => "member",
            Membership::NonMember => "non-member",
            Membership::Undecided => "undecided",
        })
    }
}

/// Classify a finished run: a member must clear the cutpoint by more than
/// the unmeasured residual plus `slack`, since the residual could still
/// fall on either side. Anything else that converged is a non-member
/// (`p_acc` at or below 1/2 rejects under unbounded error).
pub fn classify_membership(outcome: &RunOutcome, slack: f64) -> Membership {
    if !outcome.converged {
        return Membership::Undecided;
    }
    if outcome.margin() > outcome.residual + slack {
        Membership::Member
    } else {
        Membership::NonMember
    }
}

/// One surviving configuration amplitude in a path trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub state: usize,
    /// 1-based head position on the framed tape.
    pub position: usize,
    pub amplitude: Complex64,
}

/// The nonhalting superposition after one step of a traced run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub step: usize,
    pub entries: Vec<TraceEntry>,
}

/// Trace the nonhalting superposition of `m` on `w` for `step_limit`
/// steps (or until it empties). Step 0 is the initial configuration with
/// amplitude 1; each later step records the post-measurement amplitudes
/// exceeding [`TRACE_CUTOFF`] in configuration-index order.
pub fn path_trace(
    m: &TwoWayKwqfa,
    w: &str,
    step_limit: usize,
) -> Result<Vec<TraceStep>, TwoWayError> {
    let space = build_config_operator(m, w)?;
    let mut psi = ComplexVector::basis(space.dim(), space.index(m.initial, 1));
    let mut steps = Vec::with_capacity(step_limit + 1);
    for step in 0..=step_limit {
        if step > 0 {
            let (next, _, _) = split_step(&space, &m.kinds, &psi);
            psi = next;
        }
        let entries: Vec<TraceEntry> = psi
            .entries
            .iter()
            .enumerate()
            .filter(|(_, amp)| amp.norm() > TRACE_CUTOFF)
            .map(|(idx, &amp)| TraceEntry {
                state: space.state_of(idx),
                position: space.position_of(idx),
                amplitude: amp,
            })
            .collect();
        let empty = entries.is_empty();
        steps.push(TraceStep { step, entries });
        if empty {
            break;
        }
    }
    Ok(steps)
}

/// Render a trace as fixed-column text: step, state name, position, then
/// the real and imaginary amplitude parts.
pub fn render_trace(m: &TwoWayKwqfa, steps: &[TraceStep]) -> String {
    let name_width = m
        .names
        .iter()
        .map(|s| s.len())
        .max()
        .unwrap_or(5)
        .max("state".len());
    let mut out = format!(
        "{:>6} {:<name_width$} {:>8} {:>24} {:>24}\n",
        "step", "state", "position", "re", "im"
    );
    for step in steps {
        for e in &step.entries {
            out.push_str(&format!(
                "{:>6} {:<name_width$} {:>8} {:>24.16e} {:>24.16e}\n",
                step.step, m.names[e.state], e.position, e.amplitude.re, e.amplitude.im
            ));
        }
    }
    out
}
