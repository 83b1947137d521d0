//! Wellformedness checkers. Each machine model has a norm-preservation
//! condition: stochastic columns for probabilistic machines, unitarity
//! or Kraus completeness for quantum ones, and local summation
//! conditions for two-way tables. Checkers never throw; they collect
//! counterexample witnesses into a [`CheckReport`] so callers can print
//! or branch on them.

use crate::alphabet::HeadMove;
use crate::classical::{RealMatrix, RtPfa};
use crate::linalg::{Complex64, ComplexMatrix, TOL_CONSTRUCTION, TOL_WELLFORMED};
use crate::quantum_rt::{RtKwqfa, RtQfa, SuperOp};
use std::fmt;

/// One failed condition. `table` is the position of the offending
/// matrix, family, or symbol slice in the checker's input; `indices`
/// are condition-specific (documented on each checker) and 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub condition: &'static str,
    pub table: usize,
    pub indices: Vec<usize>,
    pub measured: f64,
    pub tolerance: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} in table {} at {:?}: measured {:e}, tolerance {:e}",
            self.condition, self.table, self.indices, self.measured, self.tolerance
        )
    }
}

/// Outcome of a wellformedness check. `passed` holds exactly when
/// `violations` is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
}

impl CheckReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        CheckReport {
            passed: violations.is_empty(),
            violations,
        }
    }

    /// Merge single-table sub-reports; each violation's table index
    /// becomes the position of its part in the input sequence.
    fn merge<I: IntoIterator<Item = CheckReport>>(parts: I) -> Self {
        let mut violations = Vec::new();
        for (position, part) in parts.into_iter().enumerate() {
            for mut v in part.violations {
                v.table = position;
                violations.push(v);
            }
        }
        CheckReport::from_violations(violations)
    }

    /// Human-readable rendering, one line per violation. `labels` names
    /// the tables (typically tape symbols); missing labels fall back to
    /// the numeric index.
    pub fn render(&self, labels: &[String]) -> String {
        if self.passed {
            return "well-formed".to_string();
        }
        let mut out = String::new();
        for v in &self.violations {
            let table = labels
                .get(v.table)
                .cloned()
                .unwrap_or_else(|| format!("table {}", v.table));
            out.push_str(&format!(
                "violation: {} for {} at {:?}: measured {:e}, tolerance {:e}\n",
                v.condition, table, v.indices, v.measured, v.tolerance
            ));
        }
        out
    }

    /// Machine-readable rendering: one tab-separated line per violation
    /// (condition, table, indices, measured, tolerance).
    pub fn tsv(&self) -> String {
        let mut out = String::new();
        for v in &self.violations {
            let indices: Vec<String> = v.indices.iter().map(|i| i.to_string()).collect();
            out.push_str(&format!(
                "{}\t{}\t{}\t{:e}\t{:e}\n",
                v.condition,
                v.table,
                indices.join(","),
                v.measured,
                v.tolerance
            ));
        }
        out
    }
}

fn check_stochastic_at(ms: &[&RealMatrix], tol: f64) -> CheckReport {
    let mut violations = Vec::new();
    for (t, m) in ms.iter().enumerate() {
        assert!(m.rows == m.cols, "stochastic check expects square matrices");
        for j in 0..m.cols {
            let mut sum = 0.0;
            for i in 0..m.rows {
                let x = m.get(i, j);
                if x < -tol {
                    violations.push(Violation {
                        condition: "negative-entry",
                        table: t,
                        indices: vec![i, j],
                        measured: x,
                        tolerance: tol,
                    });
                }
                sum += x;
            }
            if (sum - 1.0).abs() > tol {
                violations.push(Violation {
                    condition: "column-sum",
                    table: t,
                    indices: vec![j],
                    measured: sum,
                    tolerance: tol,
                });
            }
        }
    }
    CheckReport::from_violations(violations)
}

/// Check that every matrix has nonnegative entries and unit column
/// sums, within 1e-12. Witness indices: `[row, col]` for a negative
/// entry (measured = the entry), `[col]` for a bad sum (measured = the
/// sum).
pub fn check_stochastic(ms: &[&RealMatrix]) -> CheckReport {
    check_stochastic_at(ms, TOL_CONSTRUCTION)
}

fn gram_violations(gram_minus_id: &ComplexMatrix, table: usize, tol: f64) -> Vec<Violation> {
    let mut violations = Vec::new();
    for i in 0..gram_minus_id.rows {
        for j in 0..gram_minus_id.cols {
            let defect = gram_minus_id.get(i, j).norm();
            if defect > tol {
                violations.push(Violation {
                    condition: if i == j {
                        "column-norm"
                    } else {
                        "column-orthogonality"
                    },
                    table,
                    indices: vec![i, j],
                    measured: defect,
                    tolerance: tol,
                });
            }
        }
    }
    violations
}

fn check_superop_at(s: &SuperOp, tol: f64) -> CheckReport {
    let n = s.dim();
    let mut sum = ComplexMatrix::zeros(n, n);
    for e in &s.kraus {
        assert!(
            e.rows == n && e.cols == n,
            "superop check expects equal square elements"
        );
        sum = sum.add(&e.dagger().mul(e).expect("square"));
    }
    let defect = sum.sub(&ComplexMatrix::identity(n));
    CheckReport::from_violations(gram_violations(&defect, 0, tol))
}

/// Check Kraus completeness: the elementwise defect of
/// `sum E_i^dagger E_i` against the identity stays within 1e-9.
/// Equivalently, the columns of the stacked-element matrix form an
/// orthonormal set. Witness indices: `[row, col]` into the defect.
pub fn check_superop(s: &SuperOp) -> CheckReport {
    check_superop_at(s, TOL_WELLFORMED)
}

fn check_unitary_at(us: &[&ComplexMatrix], tol: f64) -> CheckReport {
    let mut violations = Vec::new();
    for (t, u) in us.iter().enumerate() {
        assert!(u.rows == u.cols, "unitarity check expects square matrices");
        let gram = u.dagger().mul(u).expect("square");
        let defect = gram.sub(&ComplexMatrix::identity(u.rows));
        violations.extend(gram_violations(&defect, t, tol));
    }
    CheckReport::from_violations(violations)
}

/// Check that each matrix is unitary: `U^dagger U = I` entrywise
/// within 1e-9. Witness indices: `[col_a, col_b]`, the Gram entry that
/// is off (equal indices mean a column norm, distinct ones an inner
/// product between columns).
pub fn check_unitary(us: &[&ComplexMatrix]) -> CheckReport {
    check_unitary_at(us, TOL_WELLFORMED)
}

/// Stochasticity of every per-symbol matrix of a probabilistic machine,
/// in tape order (cent, inputs, dollar).
pub fn check_rtpfa(m: &RtPfa) -> CheckReport {
    let ms: Vec<&RealMatrix> = m.transitions.iter_tape().map(|(_, t)| t).collect();
    check_stochastic(&ms)
}

/// Kraus completeness of every per-symbol family, in tape order.
pub fn check_rtqfa(m: &RtQfa) -> CheckReport {
    CheckReport::merge(m.ops.iter_tape().map(|(_, op)| check_superop(op)))
}

/// Unitarity of every per-symbol matrix, in tape order.
pub fn check_rtkwqfa(m: &RtKwqfa) -> CheckReport {
    let us: Vec<&ComplexMatrix> = m.unitaries.iter_tape().map(|(_, u)| u).collect();
    check_unitary(&us)
}

/// Dense amplitude table for a fully general two-way machine:
/// `delta(q, sigma, q', d, omega)` where `sigma` indexes the checker
/// input's symbol slices, `d` is a head direction, and `omega` a
/// measurement outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoWayLocalTable {
    pub state_count: usize,
    pub symbol_count: usize,
    pub outcome_count: usize,
    amps: Vec<Complex64>,
}

impl TwoWayLocalTable {
    pub fn zeros(state_count: usize, symbol_count: usize, outcome_count: usize) -> Self {
        TwoWayLocalTable {
            state_count,
            symbol_count,
            outcome_count,
            amps: vec![
                Complex64::new(0.0, 0.0);
                state_count * symbol_count * state_count * 3 * outcome_count
            ],
        }
    }

    fn offset(&self, q: usize, s: usize, qp: usize, d: HeadMove, w: usize) -> usize {
        (((q * self.symbol_count + s) * self.state_count + qp) * 3 + d.index()) * self.outcome_count
            + w
    }

    pub fn get(&self, q: usize, s: usize, qp: usize, d: HeadMove, w: usize) -> Complex64 {
        self.amps[self.offset(q, s, qp, d, w)]
    }

    pub fn set(&mut self, q: usize, s: usize, qp: usize, d: HeadMove, w: usize, v: Complex64) {
        let at = self.offset(q, s, qp, d, w);
        self.amps[at] = v;
    }
}

/// Amplitude table for machines whose head direction is a function of
/// the target state: `delta(q, sigma, q', omega)` together with the
/// per-state direction `moves[q']`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnidirectionalLocalTable {
    pub state_count: usize,
    pub symbol_count: usize,
    pub outcome_count: usize,
    pub moves: Vec<HeadMove>,
    amps: Vec<Complex64>,
}

impl UnidirectionalLocalTable {
    pub fn zeros(
        state_count: usize,
        symbol_count: usize,
        outcome_count: usize,
        moves: Vec<HeadMove>,
    ) -> Self {
        assert_eq!(moves.len(), state_count);
        UnidirectionalLocalTable {
            state_count,
            symbol_count,
            outcome_count,
            moves,
            amps: vec![
                Complex64::new(0.0, 0.0);
                state_count * symbol_count * state_count * outcome_count
            ],
        }
    }

    fn offset(&self, q: usize, s: usize, qp: usize, w: usize) -> usize {
        ((q * self.symbol_count + s) * self.state_count + qp) * self.outcome_count + w
    }

    pub fn get(&self, q: usize, s: usize, qp: usize, w: usize) -> Complex64 {
        self.amps[self.offset(q, s, qp, w)]
    }

    pub fn set(&mut self, q: usize, s: usize, qp: usize, w: usize, v: Complex64) {
        let at = self.offset(q, s, qp, w);
        self.amps[at] = v;
    }

    /// Expand to the general table: the direction index is forced to
    /// `moves[q']`, all other directions carry amplitude zero.
    pub fn to_two_way(&self) -> TwoWayLocalTable {
        let mut out =
            TwoWayLocalTable::zeros(self.state_count, self.symbol_count, self.outcome_count);
        for q in 0..self.state_count {
            for s in 0..self.symbol_count {
                for qp in 0..self.state_count {
                    for w in 0..self.outcome_count {
                        out.set(q, s, qp, self.moves[qp], w, self.get(q, s, qp, w));
                    }
                }
            }
        }
        out
    }

    /// The stacked operator family for one symbol: element `omega` has
    /// `E[q', q] = delta(q, s, q', omega)`. Wellformedness of the table
    /// at symbol `s` is Kraus completeness of this family.
    pub fn superop_for_symbol(&self, s: usize) -> SuperOp {
        let kraus = (0..self.outcome_count)
            .map(|w| {
                ComplexMatrix::from_fn(self.state_count, self.state_count, |qp, q| {
                    self.get(q, s, qp, w)
                })
            })
            .collect();
        SuperOp { kraus }
    }
}

fn check_local_2qfa_at(delta: &TwoWayLocalTable, tol: f64) -> CheckReport {
    let n = delta.state_count;
    let mut violations = Vec::new();
    for s in 0..delta.symbol_count {
        for q1 in 0..n {
            for q2 in 0..n {
                // Heads at the same cell: full overlap must be the
                // identity on state pairs.
                let mut same = Complex64::new(0.0, 0.0);
                for qp in 0..n {
                    for d in HeadMove::ALL {
                        for w in 0..delta.outcome_count {
                            same += delta.get(q1, s, qp, d, w).conj() * delta.get(q2, s, qp, d, w);
                        }
                    }
                }
                let expected = if q1 == q2 { 1.0 } else { 0.0 };
                let defect = (same - Complex64::new(expected, 0.0)).norm();
                if defect > tol {
                    violations.push(Violation {
                        condition: "same-position",
                        table: s,
                        indices: vec![q1, q2],
                        measured: defect,
                        tolerance: tol,
                    });
                }
                // Heads one cell apart: the right/stay and stay/left
                // overlaps must cancel. The mirrored case is the
                // conjugate of this sum with q1 and q2 swapped, so
                // sweeping ordered pairs covers it.
                let mut one = Complex64::new(0.0, 0.0);
                let mut two = Complex64::new(0.0, 0.0);
                for qp in 0..n {
                    for w in 0..delta.outcome_count {
                        one += delta.get(q1, s, qp, HeadMove::Right, w).conj()
                            * delta.get(q2, s, qp, HeadMove::Stay, w);
                        one += delta.get(q1, s, qp, HeadMove::Stay, w).conj()
                            * delta.get(q2, s, qp, HeadMove::Left, w);
                        two += delta.get(q1, s, qp, HeadMove::Right, w).conj()
                            * delta.get(q2, s, qp, HeadMove::Left, w);
                    }
                }
                if one.norm() > tol {
                    violations.push(Violation {
                        condition: "offset-one",
                        table: s,
                        indices: vec![q1, q2],
                        measured: one.norm(),
                        tolerance: tol,
                    });
                }
                // Heads two cells apart: only right-movers from the left
                // cell can meet left-movers from the right cell.
                if two.norm() > tol {
                    violations.push(Violation {
                        condition: "offset-two",
                        table: s,
                        indices: vec![q1, q2],
                        measured: two.norm(),
                        tolerance: tol,
                    });
                }
            }
        }
    }
    CheckReport::from_violations(violations)
}

/// Local wellformedness of a general two-way table: for every symbol
/// and every ordered state pair, the same-cell overlap is the identity
/// and the one- and two-cell-apart overlaps vanish, within 1e-9.
/// Witness indices: `[q1, q2]`, table = symbol.
pub fn check_local_2qfa(delta: &TwoWayLocalTable) -> CheckReport {
    check_local_2qfa_at(delta, TOL_WELLFORMED)
}

fn check_local_unidirectional_at(delta: &UnidirectionalLocalTable, tol: f64) -> CheckReport {
    let n = delta.state_count;
    let mut violations = Vec::new();
    for s in 0..delta.symbol_count {
        for q1 in 0..n {
            for q2 in 0..n {
                let mut same = Complex64::new(0.0, 0.0);
                for qp in 0..n {
                    for w in 0..delta.outcome_count {
                        same += delta.get(q1, s, qp, w).conj() * delta.get(q2, s, qp, w);
                    }
                }
                let expected = if q1 == q2 { 1.0 } else { 0.0 };
                let defect = (same - Complex64::new(expected, 0.0)).norm();
                if defect > tol {
                    violations.push(Violation {
                        condition: "same-position",
                        table: s,
                        indices: vec![q1, q2],
                        measured: defect,
                        tolerance: tol,
                    });
                }
            }
        }
    }
    CheckReport::from_violations(violations)
}

/// Local wellformedness for direction-by-target-state machines: one
/// orthonormality condition per symbol and ordered state pair, within
/// 1e-9. The directions do not enter the condition; they are carried so
/// the table can be expanded with [`UnidirectionalLocalTable::to_two_way`].
pub fn check_local_unidirectional(delta: &UnidirectionalLocalTable) -> CheckReport {
    check_local_unidirectional_at(delta, TOL_WELLFORMED)
}
