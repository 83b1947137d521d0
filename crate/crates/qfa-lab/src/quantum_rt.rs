//! Real-time quantum machines: the general Kraus-operator model and the
//! measure-once unitary model with per-step halting measurement.
//!
//! Both runners consume the framed tape `¢ w $` one symbol at a time.
//! The Kraus model evolves a density matrix and reads acceptance off the
//! diagonal at the end; the measure-many model evolves an unnormalized
//! state vector, draining amplitude into accept/reject accumulators
//! after every symbol.

use crate::alphabet::{Alphabet, AlphabetError, SymbolMap};
use crate::linalg::{
    hermitian_min_eigenvalue, Complex64, ComplexMatrix, ComplexVector, LinalgError, RunOutcome,
    TOL_WELLFORMED,
};
use thiserror::Error;

/// Hermiticity slack accepted when validating a density matrix.
pub const TOL_DENSITY_HERMITIAN: f64 = 1e-12;
/// Trace slack accepted when validating a density matrix.
pub const TOL_DENSITY_TRACE: f64 = 1e-12;
/// Most negative eigenvalue accepted when validating a density matrix.
/// Strictly tighter than rounding noise from a few hundred evolution
/// steps, strictly looser than one step's worth.
pub const TOL_DENSITY_EIGENVALUE: f64 = -1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum QuantumError {
    #[error(transparent)]
    Input(#[from] AlphabetError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("{what} must be {expected}x{expected}, got {rows}x{cols}")]
    BadDimensions {
        what: &'static str,
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("no Kraus elements for symbol {symbol}")]
    EmptyKrausFamily { symbol: String },
    #[error(
        "operators for symbol {symbol} are not trace preserving: \
         completeness defect {defect:e} exceeds {tolerance:e}"
    )]
    NotTracePreserving {
        symbol: String,
        defect: f64,
        tolerance: f64,
    },
    #[error("matrix for symbol {symbol} is not unitary: defect {defect:e} exceeds {tolerance:e}")]
    NotUnitary {
        symbol: String,
        defect: f64,
        tolerance: f64,
    },
    #[error("initial state {initial} out of range for {state_count} states")]
    BadInitialState { initial: usize, state_count: usize },
    #[error("partition lists {kinds} states but the machine has {state_count}")]
    BadPartition { kinds: usize, state_count: usize },
    #[error("matrix is not Hermitian: defect {defect:e}")]
    NotHermitian { defect: f64 },
    #[error("trace is {trace}, expected 1")]
    TraceNotOne { trace: f64 },
    #[error("matrix is not positive semidefinite: eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },
}

/// Halting role of a state in measure-many machines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateKind {
    Nonhalting,
    Accepting,
    Rejecting,
}

/// A quantum operation given by Kraus elements: `rho` maps to
/// `sum_i E_i rho E_i^dagger`. Trace preservation is a validation step,
/// not a construction invariant, so malformed families can be built,
/// checked, and reported.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOp {
    pub kraus: Vec<ComplexMatrix>,
}

impl SuperOp {
    pub fn identity(dim: usize) -> Self {
        SuperOp {
            kraus: vec![ComplexMatrix::identity(dim)],
        }
    }

    /// State-space dimension, taken from the first element.
    pub fn dim(&self) -> usize {
        self.kraus.first().map_or(0, |e| e.rows)
    }

    /// `sum_i E_i^dagger E_i - I`, largest entry in absolute value.
    /// Zero for a trace-preserving family.
    pub fn completeness_defect(&self) -> f64 {
        let n = self.dim();
        let mut sum = ComplexMatrix::zeros(n, n);
        for e in &self.kraus {
            let ete = e.dagger().mul(e).expect("square elements");
            sum = sum.add(&ete);
        }
        sum.max_abs_diff(&ComplexMatrix::identity(n))
    }

    /// Apply to a density matrix: `sum_i E_i rho E_i^dagger`.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
        let n = self.dim();
        let mut out = ComplexMatrix::zeros(n, n);
        for e in &self.kraus {
            let term = e.mul(rho)?.mul(&e.dagger())?;
            out = out.add(&term);
        }
        Ok(out)
    }

    /// The composite operation "self, then `later`": one Kraus element
    /// `L_j E_i` per pair. Applying the result equals applying the two
    /// operations in sequence.
    pub fn then(&self, later: &SuperOp) -> Result<SuperOp, LinalgError> {
        let mut kraus = Vec::with_capacity(self.kraus.len() * later.kraus.len());
        for l in &later.kraus {
            for e in &self.kraus {
                kraus.push(l.mul(e)?);
            }
        }
        Ok(SuperOp { kraus })
    }
}

/// Validated density matrix: Hermitian, unit trace, positive
/// semidefinite, each within the tolerances above.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    /// Pure state `|index><index|`.
    pub fn pure(dim: usize, index: usize) -> Self {
        let mut mat = ComplexMatrix::zeros(dim, dim);
        mat.set(index, index, Complex64::new(1.0, 0.0));
        DensityMatrix { mat }
    }

    pub fn new(mat: ComplexMatrix) -> Result<Self, QuantumError> {
        let defect = mat.hermitian_defect();
        if defect > TOL_DENSITY_HERMITIAN {
            return Err(QuantumError::NotHermitian { defect });
        }
        let trace = mat.trace().re;
        if (trace - 1.0).abs() > TOL_DENSITY_TRACE {
            return Err(QuantumError::TraceNotOne { trace });
        }
        let min_eigenvalue = hermitian_min_eigenvalue(&mat)?;
        if min_eigenvalue < TOL_DENSITY_EIGENVALUE {
            return Err(QuantumError::NotPositive { min_eigenvalue });
        }
        Ok(DensityMatrix { mat })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }
}

/// Real-time QFA in the general operator model: one Kraus family per
/// tape symbol, acceptance probability `tr(P_acc rho)` at the end.
#[derive(Debug, Clone, PartialEq)]
pub struct RtQfa {
    pub state_count: usize,
    pub alphabet: Alphabet,
    pub ops: SymbolMap<SuperOp>,
    pub initial: usize,
    pub accepting: Vec<bool>,
}

impl RtQfa {
    /// Shape and trace-preservation checks for every symbol's family.
    pub fn validate(&self) -> Result<(), QuantumError> {
        let n = self.state_count;
        if self.initial >= n {
            return Err(QuantumError::BadInitialState {
                initial: self.initial,
                state_count: n,
            });
        }
        if self.accepting.len() != n {
            return Err(QuantumError::BadPartition {
                kinds: self.accepting.len(),
                state_count: n,
            });
        }
        for (sym, op) in self.ops.iter_tape() {
            let symbol = sym.describe(&self.alphabet);
            if op.kraus.is_empty() {
                return Err(QuantumError::EmptyKrausFamily { symbol });
            }
            for e in &op.kraus {
                if e.rows != n || e.cols != n {
                    return Err(QuantumError::BadDimensions {
                        what: "Kraus element",
                        expected: n,
                        rows: e.rows,
                        cols: e.cols,
                    });
                }
            }
            let defect = op.completeness_defect();
            if defect > TOL_WELLFORMED {
                return Err(QuantumError::NotTracePreserving {
                    symbol,
                    defect,
                    tolerance: TOL_WELLFORMED,
                });
            }
        }
        Ok(())
    }
}

/// Acceptance probability of `m` on `w`: evolve `|initial><initial|`
/// through the per-symbol operations over `¢ w $`, then sum the diagonal
/// over accepting states.
pub fn run_rtqfa(m: &RtQfa, w: &str) -> Result<f64, QuantumError> {
    m.validate()?;
    let tape = m.alphabet.tape(w)?;
    let mut rho = DensityMatrix::pure(m.state_count, m.initial).into_matrix();
    for sym in tape {
        rho = m.ops.get(sym).apply(&rho)?;
        let trace = rho.trace().re;
        assert!(
            (trace - 1.0).abs() <= 1e-9,
            "trace drifted to {trace} on a validated machine"
        );
    }
    let p_acc = (0..m.state_count)
        .filter(|&i| m.accepting[i])
        .map(|i| rho.get(i, i).re)
        .sum();
    Ok(p_acc)
}

/// Real-time measure-many QFA: one unitary per tape symbol, and after
/// each symbol the halting states are measured out. Amplitude that lands
/// in an accepting or rejecting state is converted to probability there
/// and then removed from the evolving vector.
#[derive(Debug, Clone, PartialEq)]
pub struct RtKwqfa {
    pub state_count: usize,
    pub alphabet: Alphabet,
    pub unitaries: SymbolMap<ComplexMatrix>,
    pub initial: usize,
    pub kinds: Vec<StateKind>,
}

impl RtKwqfa {
    /// Shape and unitarity checks for every symbol's matrix.
    pub fn validate(&self) -> Result<(), QuantumError> {
        let n = self.state_count;
        if self.initial >= n {
            return Err(QuantumError::BadInitialState {
                initial: self.initial,
                state_count: n,
            });
        }
        if self.kinds.len() != n {
            return Err(QuantumError::BadPartition {
                kinds: self.kinds.len(),
                state_count: n,
            });
        }
        for (sym, u) in self.unitaries.iter_tape() {
            if u.rows != n || u.cols != n {
                return Err(QuantumError::BadDimensions {
                    what: "transition matrix",
                    expected: n,
                    rows: u.rows,
                    cols: u.cols,
                });
            }
            let defect = u
                .dagger()
                .mul(u)
                .expect("square")
                .max_abs_diff(&ComplexMatrix::identity(n));
            if defect > TOL_WELLFORMED {
                return Err(QuantumError::NotUnitary {
                    symbol: sym.describe(&self.alphabet),
                    defect,
                    tolerance: TOL_WELLFORMED,
                });
            }
        }
        Ok(())
    }
}

/// Run the measure-many machine on `w`. A real-time run always takes
/// exactly `|w| + 2` steps, so `converged` is always true; `residual`
/// is whatever amplitude mass is still in nonhalting states after the
/// end-marker, and contributes to neither probability.
pub fn run_rtkwqfa(m: &RtKwqfa, w: &str) -> Result<RunOutcome, QuantumError> {
    m.validate()?;
    let tape = m.alphabet.tape(w)?;
    let n = m.state_count;
    let mut state = ComplexVector::basis(n, m.initial);
    let mut p_acc = 0.0;
    let mut p_rej = 0.0;
    let mut steps = 0;
    for sym in &tape {
        let moved = m.unitaries.get(*sym).matvec(&state)?;
        let mut kept = ComplexVector::zeros(n);
        for i in 0..n {
            match m.kinds[i] {
                StateKind::Accepting => p_acc += moved.entries[i].norm_sqr(),
                StateKind::Rejecting => p_rej += moved.entries[i].norm_sqr(),
                StateKind::Nonhalting => kept.entries[i] = moved.entries[i],
            }
        }
        state = kept;
        steps += 1;
        let total = p_acc + p_rej + state.norm_sq();
        assert!(
            (total - 1.0).abs() <= 1e-9,
            "probability mass drifted to {total} on a validated machine"
        );
    }
    Ok(RunOutcome {
        p_acc,
        p_rej,
        residual: state.norm_sq(),
        steps,
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_kraus_family, random_rtkwqfa, random_rtqfa, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ab() -> Alphabet {
        Alphabet::ab()
    }

    /// Identity channels everywhere: the machine never leaves its initial
    /// state, so acceptance is 1 or 0 depending on that state's role.
    #[test]
    fn identity_machine_accepts_iff_initial_accepts() {
        let make = |accepting: Vec<bool>| RtQfa {
            state_count: 2,
            alphabet: ab(),
            ops: SymbolMap {
                cent: SuperOp::identity(2),
                dollar: SuperOp::identity(2),
                per_input: vec![SuperOp::identity(2), SuperOp::identity(2)],
            },
            initial: 0,
            accepting,
        };
        assert_eq!(run_rtqfa(&make(vec![true, false]), "abba").unwrap(), 1.0);
        assert_eq!(run_rtqfa(&make(vec![false, true]), "abba").unwrap(), 0.0);
    }

    /// Classical fair coin as a Kraus family: reading `a` flips state 1
    /// to state 2 with probability 1/2. One `a` gives exactly 1/2.
    #[test]
    fn coin_flip_channel_halves() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let stay = ComplexMatrix::from_real_rows(&[&[s, 0.0], &[0.0, 1.0]]);
        let flip = ComplexMatrix::from_real_rows(&[&[0.0, 0.0], &[s, 0.0]]);
        let coin = SuperOp {
            kraus: vec![stay, flip],
        };
        assert!(coin.completeness_defect() < 1e-15);
        let m = RtQfa {
            state_count: 2,
            alphabet: ab(),
            ops: SymbolMap {
                cent: SuperOp::identity(2),
                dollar: SuperOp::identity(2),
                per_input: vec![coin, SuperOp::identity(2)],
            },
            initial: 0,
            accepting: vec![false, true],
        };
        assert!((run_rtqfa(&m, "a").unwrap() - 0.5).abs() < 1e-15);
        assert!((run_rtqfa(&m, "aa").unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn trace_losing_family_is_rejected() {
        let half = ComplexMatrix::from_real_rows(&[&[0.5, 0.0], &[0.0, 0.5]]);
        let m = RtQfa {
            state_count: 2,
            alphabet: ab(),
            ops: SymbolMap {
                cent: SuperOp { kraus: vec![half] },
                dollar: SuperOp::identity(2),
                per_input: vec![SuperOp::identity(2), SuperOp::identity(2)],
            },
            initial: 0,
            accepting: vec![true, false],
        };
        match run_rtqfa(&m, "a") {
            Err(QuantumError::NotTracePreserving { symbol, defect, .. }) => {
                assert_eq!(symbol, "cent");
                assert!((defect - 0.75).abs() < 1e-15);
            }
            other => panic!("expected trace-preservation failure, got {other:?}"),
        }
    }

    /// Evolution keeps the state a valid density matrix: Hermitian,
    /// unit trace, and positive semidefinite within rounding.
    #[test]
    fn evolution_preserves_density_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..10 {
            let m = random_rtqfa(&mut rng, 4, 3, &ab());
            let mut rho = DensityMatrix::pure(4, 0).into_matrix();
            for sym in m.alphabet.tape("abba").unwrap() {
                rho = m.ops.get(sym).apply(&rho).unwrap();
                assert!(rho.hermitian_defect() <= 1e-12);
                assert!((rho.trace().re - 1.0).abs() <= 1e-9);
                assert!(hermitian_min_eigenvalue(&rho).unwrap() >= -1e-8);
            }
        }
    }

    #[test]
    fn density_matrix_validation_rejects_bad_inputs() {
        let bad_trace = ComplexMatrix::from_real_rows(&[&[0.7, 0.0], &[0.0, 0.7]]);
        assert!(matches!(
            DensityMatrix::new(bad_trace),
            Err(QuantumError::TraceNotOne { .. })
        ));
        let not_hermitian = ComplexMatrix::from_real_rows(&[&[0.5, 0.3], &[0.0, 0.5]]);
        assert!(matches!(
            DensityMatrix::new(not_hermitian),
            Err(QuantumError::NotHermitian { .. })
        ));
        // Hermitian with unit trace but an eigenvalue of -1/2.
        let indefinite = ComplexMatrix::from_real_rows(&[&[1.5, 1.0], &[1.0, -0.5]]);
        assert!(matches!(
            DensityMatrix::new(indefinite),
            Err(QuantumError::NotPositive { .. })
        ));
        let pure = DensityMatrix::pure(3, 1);
        assert!(DensityMatrix::new(pure.matrix().clone()).is_ok());
    }

    /// Applying two operations in sequence equals applying their
    /// composite in one go.
    #[test]
    fn composition_matches_sequential_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let first = random_kraus_family(&mut rng, 3, 2);
            let later = random_kraus_family(&mut rng, 3, 3);
            let rho = DensityMatrix::pure(3, 0).into_matrix();
            let sequential = later.apply(&first.apply(&rho).unwrap()).unwrap();
            let composed = first.then(&later).unwrap().apply(&rho).unwrap();
            assert!(sequential.max_abs_diff(&composed) <= 1e-12);
            assert!(first.then(&later).unwrap().completeness_defect() <= 1e-12);
        }
    }

    /// With no halting states the full mass stays in the residual.
    #[test]
    fn all_nonhalting_run_keeps_residual_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let m = RtKwqfa {
            state_count: 3,
            alphabet: ab(),
            unitaries: SymbolMap {
                cent: random_unitary(&mut rng, 3),
                dollar: random_unitary(&mut rng, 3),
                per_input: vec![random_unitary(&mut rng, 3), random_unitary(&mut rng, 3)],
            },
            initial: 0,
            kinds: vec![StateKind::Nonhalting; 3],
        };
        let out = run_rtkwqfa(&m, "ab").unwrap();
        assert_eq!(out.p_acc, 0.0);
        assert_eq!(out.p_rej, 0.0);
        assert!((out.residual - 1.0).abs() <= 1e-12);
        assert_eq!(out.steps, 4);
        assert!(out.converged);
    }

    /// An immediate Hadamard-like split on the end-marker read: half the
    /// mass accepts, half rejects, nothing is left over.
    #[test]
    fn hadamard_split_on_cent() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let split = ComplexMatrix::from_real_rows(&[
            &[0.0, s, s],
            &[s, s * s, -s * s],
            &[s, -s * s, s * s],
        ]);
        let m = RtKwqfa {
            state_count: 3,
            alphabet: ab(),
            unitaries: SymbolMap {
                cent: split,
                dollar: ComplexMatrix::identity(3),
                per_input: vec![ComplexMatrix::identity(3), ComplexMatrix::identity(3)],
            },
            initial: 0,
            kinds: vec![
                StateKind::Nonhalting,
                StateKind::Accepting,
                StateKind::Rejecting,
            ],
        };
        let out = run_rtkwqfa(&m, "").unwrap();
        assert!((out.p_acc - 0.5).abs() <= 1e-12);
        assert!((out.p_rej - 0.5).abs() <= 1e-12);
        assert!(out.residual <= 1e-15);
    }

    /// Measuring after every symbol differs from measuring once at the
    /// end: an interference pattern that would cancel is frozen by the
    /// intermediate measurement. Hadamard twice returns to the start if
    /// unmeasured, but with a halting state in between, mass drains.
    #[test]
    fn intermediate_measurement_breaks_interference() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = ComplexMatrix::from_real_rows(&[&[s, s], &[s, -s]]);
        let both = RtKwqfa {
            state_count: 2,
            alphabet: ab(),
            unitaries: SymbolMap {
                cent: ComplexMatrix::identity(2),
                dollar: ComplexMatrix::identity(2),
                per_input: vec![h.clone(), ComplexMatrix::identity(2)],
            },
            initial: 0,
            kinds: vec![StateKind::Nonhalting, StateKind::Accepting],
        };
        // `aa` would be the identity without measurement; with it, the
        // first `a` halts half the mass and the second halts half of
        // what remains.
        let out = run_rtkwqfa(&both, "aa").unwrap();
        assert!((out.p_acc - 0.75).abs() <= 1e-12);
        assert!((out.residual - 0.25).abs() <= 1e-12);
    }

    #[test]
    fn non_unitary_matrix_is_rejected_with_symbol_name() {
        let mut bad = ComplexMatrix::identity(2);
        bad.set(0, 0, Complex64::new(0.5, 0.0));
        let m = RtKwqfa {
            state_count: 2,
            alphabet: ab(),
            unitaries: SymbolMap {
                cent: ComplexMatrix::identity(2),
                dollar: bad,
                per_input: vec![ComplexMatrix::identity(2), ComplexMatrix::identity(2)],
            },
            initial: 0,
            kinds: vec![StateKind::Nonhalting, StateKind::Accepting],
        };
        match run_rtkwqfa(&m, "a") {
            Err(QuantumError::NotUnitary { symbol, .. }) => assert_eq!(symbol, "dollar"),
            other => panic!("expected unitarity failure, got {other:?}"),
        }
    }

    /// Random well-formed machines conserve probability on every prefix.
    #[test]
    fn random_machines_conserve_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..10 {
            let m = random_rtkwqfa(&mut rng, 2, 1, 1, &ab());
            for w in ["", "a", "ab", "abba", "bbbbab"] {
                let out = run_rtkwqfa(&m, w).unwrap();
                assert!((out.p_acc + out.p_rej + out.residual - 1.0).abs() <= 1e-12);
            }
        }
    }
}
