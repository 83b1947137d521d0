//! Machine-to-machine constructions: Kraus-model quantum machines to
//! generalized automata over the reals, stochastic machines embedded
//! into measure-many quantum machines (both the scaled-unitary and the
//! exact-Kraus routes), and the equiprobable union of two measure-many
//! machines.
//!
//! Every construction validates its input first and returns structured
//! errors; the numeric identities each output is supposed to satisfy
//! are exercised in the tests and the acceptance suite.

use crate::alphabet::SymbolMap;
use crate::classical::{Gfa, RealMatrix, RtPfa};
use crate::linalg::{
    complete_partial_unitary, complete_to_unitary, BasisOrder, Complex64, ComplexMatrix,
    ComplexVector, LinalgError,
};
use crate::quantum_rt::{DensityMatrix, QuantumError, RtKwqfa, RtQfa, StateKind, SuperOp};
use crate::wellformed::{check_rtpfa, CheckReport};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConvertError {
    #[error("input machine is not well-formed: {} violation(s)", .0.violations.len())]
    Malformed(CheckReport),
    #[error("alphabet mismatch: left machine uses {left:?}, right machine uses {right:?}")]
    AlphabetMismatch { left: Vec<char>, right: Vec<char> },
    #[error(
        "column scaling failed for symbol {symbol} at column {column}: \
         stacked norm {norm} reached the scale {scale}"
    )]
    ScaleExhausted {
        symbol: String,
        column: usize,
        norm: f64,
        scale: f64,
    },
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Encode a complex matrix as a real one twice the size: each entry
/// `a+bi` becomes the 2x2 block `[[a, b], [-b, a]]`. The map is an
/// algebra homomorphism, so products and sums commute with encoding.
pub fn real_pair_matrix(a: &ComplexMatrix) -> RealMatrix {
    let mut out = RealMatrix::zeros(2 * a.rows, 2 * a.cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let z = a.get(i, j);
            out.set(2 * i, 2 * j, z.re);
            out.set(2 * i, 2 * j + 1, z.im);
            out.set(2 * i + 1, 2 * j, -z.im);
            out.set(2 * i + 1, 2 * j + 1, z.re);
        }
    }
    out
}

/// Encode a complex column vector as the first column of its block
/// encoding: entry `a+bi` becomes the pair `(a, -b)`. Then
/// `real_pair_matrix(M) * real_pair_column(v) = real_pair_column(M v)`.
pub fn real_pair_column(v: &ComplexVector) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * v.entries.len());
    for z in &v.entries {
        out.push(z.re);
        out.push(-z.im);
    }
    out
}

/// Encode a complex row functional as the first row of the block
/// encoding: entry `a+bi` becomes `(a, b)`. Then
/// `real_pair_row(f) * real_pair_matrix(M) = real_pair_row(f M)` and
/// `real_pair_row(f) . real_pair_column(v)` is the real part of `f . v`.
pub fn real_pair_row(v: &ComplexVector) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * v.entries.len());
    for z in &v.entries {
        out.push(z.re);
        out.push(z.im);
    }
    out
}

/// The compression pair for Hermitian matrices on an `n`-state space.
/// A Hermitian matrix has n^2 real parameters; `compress` projects the
/// 2n^2-entry real-pair encoding of its row-major vectorization onto
/// that parameterization, and `expand` rebuilds the encoding.
///
/// Parameter layout (0-based, t = i*n + j): diagonal entries keep their
/// slot; for i < j slot (i,j) holds the real part and slot (j,i) the
/// imaginary part of the upper-triangle entry.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianCompression {
    pub dim: usize,
    /// n^2 x 2n^2, entries in {-1, 0, 1}.
    pub compress: RealMatrix,
    /// 2n^2 x n^2, entries in {-1, 0, 1}.
    pub expand: RealMatrix,
}

/// `compress * expand` is the identity on parameter space outright;
/// `expand * compress` is the identity exactly on encodings of
/// Hermitian matrices (it forces conjugate symmetry).
pub fn hermitian_compression(n: usize) -> HermitianCompression {
    let nn = n * n;
    let mut compress = RealMatrix::zeros(nn, 2 * nn);
    let mut expand = RealMatrix::zeros(2 * nn, nn);
    for i in 0..n {
        for j in 0..n {
            let t = i * n + j;
            if i == j {
                compress.set(t, 2 * t, 1.0);
                expand.set(2 * t, t, 1.0);
            } else if i < j {
                // Slot (i,j): the real part, stored directly.
                compress.set(t, 2 * t, 1.0);
                expand.set(2 * t, t, 1.0);
                expand.set(2 * t + 1, j * n + i, -1.0);
            } else {
                // Slot (i,j), i > j: the imaginary part of entry (j,i).
                // The column encoding stores -Im, hence the sign.
                let upper = j * n + i;
                compress.set(t, 2 * upper + 1, -1.0);
                expand.set(2 * t, j * n + i, 1.0);
                expand.set(2 * t + 1, i * n + j, 1.0);
            }
        }
    }
    HermitianCompression {
        dim: n,
        compress,
        expand,
    }
}

/// The matrix that a Kraus family induces on row-major vectorized
/// density matrices: `vec(E rho E^dagger) = (E kron conj(E)) vec(rho)`,
/// summed over elements.
pub fn transfer_matrix(op: &SuperOp) -> ComplexMatrix {
    let n = op.dim();
    let mut out = ComplexMatrix::zeros(n * n, n * n);
    for e in &op.kraus {
        out = out.add(&e.kron(&e.conj()));
    }
    out
}

fn row_times_real(row: &[f64], m: &RealMatrix) -> Vec<f64> {
    assert_eq!(row.len(), m.rows);
    (0..m.cols)
        .map(|j| (0..m.rows).map(|i| row[i] * m.get(i, j)).sum())
        .collect()
}

fn row_times_complex(row: &ComplexVector, m: &ComplexMatrix) -> ComplexVector {
    assert_eq!(row.entries.len(), m.rows);
    ComplexVector {
        entries: (0..m.cols)
            .map(|j| (0..m.rows).map(|i| row.entries[i] * m.get(i, j)).sum())
            .collect(),
    }
}

/// Convert a Kraus-model quantum machine with `n` states into a
/// generalized automaton with exactly `n^2` states computing the same
/// acceptance value: the end-marker operations are folded into the
/// initial vector and final functional, the per-symbol transfer
/// matrices are encoded over the reals, and the Hermitian compression
/// brings the dimension down from 2n^2 to n^2.
pub fn rtqfa_to_gfa(m: &RtQfa) -> Result<Gfa, ConvertError> {
    m.validate()?;
    let n = m.state_count;
    let comp = hermitian_compression(n);

    let rho0 = DensityMatrix::pure(n, m.initial).into_matrix();
    let after_cent = m.ops.cent.apply(&rho0)?;
    let initial_vector = comp.compress.matvec(&real_pair_column(&after_cent.vec()));

    let per_input = m
        .ops
        .per_input
        .iter()
        .map(|op| {
            let encoded = real_pair_matrix(&transfer_matrix(op));
            comp.compress.mul(&encoded).mul(&comp.expand)
        })
        .collect();

    let projector = ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j && m.accepting[i] {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let functional = row_times_complex(&projector.vec(), &transfer_matrix(&m.ops.dollar));
    let final_functional = row_times_real(&real_pair_row(&functional), &comp.expand);

    Ok(Gfa {
        state_count: n * n,
        alphabet: m.alphabet.clone(),
        per_input,
        initial_vector,
        final_functional,
    })
}

/// Per-symbol record of the column-scaling loop: the stacked norm
/// found at each step, the (negative) diagonal entry chosen, and the
/// nonnegative off-diagonal row entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingTrace {
    /// Stacked norm of column i before its diagonal entry is placed.
    pub column_norms: Vec<f64>,
    /// Diagonal entries, all negative.
    pub diagonal: Vec<f64>,
    /// Row i holds the entries placed at columns i+1.., all >= 0.
    pub off_diagonal: Vec<Vec<f64>>,
}

/// Output of [`rtpfa_to_rtkwqfa`]: the machine itself plus the data
/// that the construction's invariants quantify over.
#[derive(Debug, Clone, PartialEq)]
pub struct KwqfaEmbedding {
    pub machine: RtKwqfa,
    /// The common column scale; every specified column of every
    /// transition matrix has stacked norm exactly this before division.
    pub scale: f64,
    /// The extended (n+2)-state stochastic-plus-halting blocks, kept
    /// for the rescaled-run comparison.
    pub extended: SymbolMap<RealMatrix>,
    pub traces: SymbolMap<ScalingTrace>,
}

fn column_dot(m: &RealMatrix, a: usize, b: usize) -> f64 {
    (0..m.rows).map(|i| m.get(i, a) * m.get(i, b)).sum()
}

/// Embed a stochastic machine with `n` states into a measure-many
/// unitary machine with `3n+6` states whose decision agrees with it:
/// acceptance probability relates to the stochastic one by
/// `f' - 1/2 = scale^(-2(|w|+2)) * (f - 1/2)`.
///
/// Each stochastic matrix is extended with a two-state halting block
/// (the end-marker matrix routes accepting mass to the first and
/// rejecting mass to the second), then every column is padded with a
/// triangular block, repeated once per halting kind, so that all
/// stacked columns reach a common norm `scale = 2n+7` and become
/// orthogonal; dividing by the scale yields orthonormal columns that a
/// basis completion extends to a full unitary. The padding rows halt
/// in balanced accept/reject pairs, so they cancel out of the decision.
pub fn rtpfa_to_rtkwqfa(p: &RtPfa) -> Result<KwqfaEmbedding, ConvertError> {
    let report = check_rtpfa(p);
    if !report.passed {
        return Err(ConvertError::Malformed(report));
    }
    let n = p.state_count;
    let ext = n + 2;
    let total = 3 * n + 6;
    let scale = (2 * n + 7) as f64;

    // Extended blocks: inputs and the left end-marker keep the halting
    // rows idle; the right end-marker empties the stochastic part into
    // the halting pair.
    let extend_plain = |a: &RealMatrix| {
        RealMatrix::from_fn(ext, ext, |i, j| {
            if i < n && j < n {
                a.get(i, j)
            } else if i == j {
                1.0
            } else {
                0.0
            }
        })
    };
    let dollar = {
        let a = &p.transitions.dollar;
        RealMatrix::from_fn(ext, ext, |i, j| {
            if i < n {
                0.0
            } else if j < n {
                // Row n collects accepting mass, row n+1 rejecting.
                let mass: f64 = (0..n)
                    .filter(|&k| p.accepting[k] == (i == n))
                    .map(|k| a.get(k, j))
                    .sum();
                mass
            } else if i == j {
                1.0
            } else {
                0.0
            }
        })
    };
    let extended = SymbolMap {
        cent: extend_plain(&p.transitions.cent),
        dollar,
        per_input: p.transitions.per_input.iter().map(extend_plain).collect(),
    };

    let mut unitaries: Vec<ComplexMatrix> = Vec::new();
    let mut traces: Vec<ScalingTrace> = Vec::new();
    for (sym, block) in extended.iter_tape() {
        // Triangular padding: column j of the full stacked column is
        // [block col j; pad col j; pad col j] / scale with the pad
        // weighted by 1/sqrt(2) so its two copies contribute its
        // squared norm once.
        let mut pad = RealMatrix::zeros(ext, ext);
        let mut trace = ScalingTrace {
            column_norms: Vec::with_capacity(ext),
            diagonal: Vec::with_capacity(ext),
            off_diagonal: Vec::with_capacity(ext),
        };
        for i in 0..ext {
            let norm_sq = column_dot(block, i, i)
                + (0..i).map(|k| pad.get(k, i) * pad.get(k, i)).sum::<f64>();
            let norm = norm_sq.sqrt();
            trace.column_norms.push(norm);
            if norm >= scale {
                return Err(ConvertError::ScaleExhausted {
                    symbol: sym.describe(&p.alphabet),
                    column: i,
                    norm,
                    scale,
                });
            }
            let diag = -(scale * scale - norm_sq).sqrt();
            pad.set(i, i, diag);
            trace.diagonal.push(diag);
            let mut row = Vec::with_capacity(ext - i - 1);
            for j in (i + 1)..ext {
                // The unique nonnegative entry making stacked columns i
                // and j orthogonal, given that only row i is still open.
                let partial = column_dot(block, i, j)
                    + (0..i).map(|k| pad.get(k, i) * pad.get(k, j)).sum::<f64>();
                let entry = partial / -diag;
                pad.set(i, j, entry);
                row.push(entry);
            }
            trace.off_diagonal.push(row);
        }
        traces.push(trace);

        let pad_weight = 1.0 / (2.0f64.sqrt() * scale);
        let mut specified = ComplexMatrix::zeros(total, ext);
        for j in 0..ext {
            for i in 0..ext {
                specified.set(i, j, Complex64::new(block.get(i, j) / scale, 0.0));
                specified.set(ext + i, j, Complex64::new(pad.get(i, j) * pad_weight, 0.0));
                specified.set(
                    2 * ext + i,
                    j,
                    Complex64::new(pad.get(i, j) * pad_weight, 0.0),
                );
            }
        }
        unitaries.push(complete_to_unitary(&specified, BasisOrder::Ascending)?);
    }

    // iter_tape order is cent, inputs, dollar.
    let dollar_u = unitaries.pop().expect("dollar present");
    let cent_u = unitaries.remove(0);
    let mut trace_iter = traces.into_iter();
    let cent_trace = trace_iter.next().expect("cent present");
    let mut input_traces: Vec<ScalingTrace> = trace_iter.collect();
    let dollar_trace = input_traces.pop().expect("dollar present");

    let mut kinds = vec![StateKind::Nonhalting; n];
    kinds.push(StateKind::Accepting);
    kinds.push(StateKind::Rejecting);
    kinds.extend(std::iter::repeat_n(StateKind::Accepting, ext));
    kinds.extend(std::iter::repeat_n(StateKind::Rejecting, ext));

    Ok(KwqfaEmbedding {
        machine: RtKwqfa {
            state_count: total,
            alphabet: p.alphabet.clone(),
            unitaries: SymbolMap {
                cent: cent_u,
                dollar: dollar_u,
                per_input: unitaries,
            },
            initial: p.initial,
            kinds,
        },
        scale,
        extended,
        traces: SymbolMap {
            cent: cent_trace,
            dollar: dollar_trace,
            per_input: input_traces,
        },
    })
}

/// Convert a stochastic machine into a Kraus-model quantum machine
/// that simulates it exactly: each positive entry `A[j,k]` becomes its
/// own element `sqrt(A[j,k]) |j><k|`. Column sums of 1 make the family
/// trace preserving up to one rounding step, and a diagonal density
/// matrix stays diagonal with the stochastic vector on its diagonal.
pub fn rtpfa_to_rtqfa(p: &RtPfa) -> Result<RtQfa, ConvertError> {
    let report = check_rtpfa(p);
    if !report.passed {
        return Err(ConvertError::Malformed(report));
    }
    let n = p.state_count;
    let family = |a: &RealMatrix| {
        let mut kraus = Vec::new();
        for j in 0..n {
            for k in 0..n {
                let x = a.get(j, k);
                if x > 0.0 {
                    let mut e = ComplexMatrix::zeros(n, n);
                    e.set(j, k, Complex64::new(x.sqrt(), 0.0));
                    kraus.push(e);
                }
            }
        }
        SuperOp { kraus }
    };
    Ok(RtQfa {
        state_count: n,
        alphabet: p.alphabet.clone(),
        ops: p.transitions.map(family),
        initial: p.initial,
        accepting: p.accepting.clone(),
    })
}

/// Combine two measure-many machines over the same alphabet into one
/// that runs each with probability 1/2: a fresh initial state splits
/// evenly into both copies' post-left-marker states, every other
/// symbol acts block-diagonally, and the halting partition is
/// inherited, so the union accepts with the average probability.
pub fn equiprobable_union(m1: &RtKwqfa, m2: &RtKwqfa) -> Result<RtKwqfa, ConvertError> {
    m1.validate()?;
    m2.validate()?;
    if m1.alphabet != m2.alphabet {
        return Err(ConvertError::AlphabetMismatch {
            left: m1.alphabet.symbols().to_vec(),
            right: m2.alphabet.symbols().to_vec(),
        });
    }
    let n1 = m1.state_count;
    let n2 = m2.state_count;
    let total = 1 + n1 + n2;
    let weight = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);

    // The left-marker operator: the fresh state takes the mixed image
    // of both initial states; the copies' other states keep their own
    // images. The two columns that would belong to the copies' initial
    // states never see amplitude (the left marker is read exactly once,
    // from the fresh state), so basis completion may fill them freely.
    let mut placed: Vec<(usize, ComplexVector)> = Vec::new();
    let mut mix = ComplexVector::zeros(total);
    let first = m1.unitaries.cent.column(m1.initial);
    let second = m2.unitaries.cent.column(m2.initial);
    for i in 0..n1 {
        mix.entries[1 + i] = weight * first.entries[i];
    }
    for i in 0..n2 {
        mix.entries[1 + n1 + i] = weight * second.entries[i];
    }
    placed.push((0, mix));
    for j in 0..n1 {
        if j == m1.initial {
            continue;
        }
        let col = m1.unitaries.cent.column(j);
        let mut embedded = ComplexVector::zeros(total);
        for i in 0..n1 {
            embedded.entries[1 + i] = col.entries[i];
        }
        placed.push((1 + j, embedded));
    }
    for j in 0..n2 {
        if j == m2.initial {
            continue;
        }
        let col = m2.unitaries.cent.column(j);
        let mut embedded = ComplexVector::zeros(total);
        for i in 0..n2 {
            embedded.entries[1 + n1 + i] = col.entries[i];
        }
        placed.push((1 + n1 + j, embedded));
    }
    let cent = complete_partial_unitary(total, &placed, BasisOrder::Ascending)?;

    let block_diag = |u1: &ComplexMatrix, u2: &ComplexMatrix| {
        ComplexMatrix::from_fn(total, total, |i, j| {
            if i == 0 && j == 0 {
                Complex64::new(1.0, 0.0)
            } else if i >= 1 && i < 1 + n1 && j >= 1 && j < 1 + n1 {
                u1.get(i - 1, j - 1)
            } else if i > n1 && j > n1 {
                u2.get(i - 1 - n1, j - 1 - n1)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    };

    let mut kinds = vec![StateKind::Nonhalting];
    kinds.extend_from_slice(&m1.kinds);
    kinds.extend_from_slice(&m2.kinds);

    Ok(RtKwqfa {
        state_count: total,
        alphabet: m1.alphabet.clone(),
        unitaries: SymbolMap {
            cent,
            dollar: block_diag(&m1.unitaries.dollar, &m2.unitaries.dollar),
            per_input: m1
                .unitaries
                .per_input
                .iter()
                .zip(&m2.unitaries.per_input)
                .map(|(u1, u2)| block_diag(u1, u2))
                .collect(),
        },
        initial: 0,
        kinds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::classical::{run_gfa, run_rtpfa};
    use crate::quantum_rt::{run_rtkwqfa, run_rtqfa};
    use crate::random::{
        fair_coin_rtpfa, random_complex_entries, random_rtkwqfa, random_rtpfa, random_rtqfa,
    };
    use crate::wellformed::check_rtkwqfa;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ab() -> Alphabet {
        Alphabet::ab()
    }

    fn strings_through(alphabet: &Alphabet, max_len: usize) -> Vec<String> {
        alphabet.strings_up_to(max_len)
    }

    #[test]
    fn real_pair_encoding_is_a_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for _ in 0..20 {
            let x = random_complex_entries(&mut rng, 3, 3);
            let y = random_complex_entries(&mut rng, 3, 3);
            let product = real_pair_matrix(&x.mul(&y).unwrap());
            let encoded = real_pair_matrix(&x).mul(&real_pair_matrix(&y));
            assert!(max_abs_diff_real(&product, &encoded) <= 1e-12);
            let sum = real_pair_matrix(&x.add(&y));
            let encoded_sum = add_real(&real_pair_matrix(&x), &real_pair_matrix(&y));
            assert!(max_abs_diff_real(&sum, &encoded_sum) <= 1e-15);
        }
    }

    #[test]
    fn encoding_respects_column_and_row_actions() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let m = random_complex_entries(&mut rng, 4, 3);
        let v = ComplexVector {
            entries: random_complex_entries(&mut rng, 3, 1).column(0).entries,
        };
        let direct = real_pair_column(&m.matvec(&v).unwrap());
        let encoded = real_pair_matrix(&m).matvec(&real_pair_column(&v));
        for (a, b) in direct.iter().zip(&encoded) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    fn max_abs_diff_real(a: &RealMatrix, b: &RealMatrix) -> f64 {
        assert_eq!((a.rows, a.cols), (b.rows, b.cols));
        let mut worst: f64 = 0.0;
        for i in 0..a.rows {
            for j in 0..a.cols {
                worst = worst.max((a.get(i, j) - b.get(i, j)).abs());
            }
        }
        worst
    }

    fn add_real(a: &RealMatrix, b: &RealMatrix) -> RealMatrix {
        RealMatrix::from_fn(a.rows, a.cols, |i, j| a.get(i, j) + b.get(i, j))
    }

    #[test]
    fn compression_entries_and_round_trips() {
        let n = 3;
        let comp = hermitian_compression(n);
        for m in [&comp.compress, &comp.expand] {
            for i in 0..m.rows {
                for j in 0..m.cols {
                    let x = m.get(i, j);
                    assert!(x == 0.0 || x == 1.0 || x == -1.0);
                }
            }
        }
        // compress . expand is the identity on parameter space, exactly.
        let id = comp.compress.mul(&comp.expand);
        assert_eq!(id, RealMatrix::identity(n * n));

        // expand . compress fixes encodings of Hermitian matrices, exactly.
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let m = random_complex_entries(&mut rng, n, n);
        let hermitian = m.add(&m.dagger());
        let encoded = real_pair_column(&hermitian.vec());
        let round = comp.expand.matvec(&comp.compress.matvec(&encoded));
        assert_eq!(encoded, round);
    }

    #[test]
    fn one_state_identity_machine_becomes_constant_one() {
        let m = RtQfa {
            state_count: 1,
            alphabet: ab(),
            ops: SymbolMap {
                cent: SuperOp::identity(1),
                dollar: SuperOp::identity(1),
                per_input: vec![SuperOp::identity(1), SuperOp::identity(1)],
            },
            initial: 0,
            accepting: vec![true],
        };
        let g = rtqfa_to_gfa(&m).unwrap();
        assert_eq!(g.state_count, 1);
        for w in ["", "a", "ab", "bbba"] {
            assert_eq!(run_gfa(&g, w).unwrap(), 1.0);
        }
    }

    #[test]
    fn gfa_state_count_is_squared() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let m = random_rtqfa(&mut rng, 4, 2, &ab());
        assert_eq!(rtqfa_to_gfa(&m).unwrap().state_count, 16);
    }

    #[test]
    fn gfa_matches_density_simulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        for _ in 0..5 {
            let m = random_rtqfa(&mut rng, 3, 3, &ab());
            let g = rtqfa_to_gfa(&m).unwrap();
            for w in strings_through(&ab(), 4) {
                let quantum = run_rtqfa(&m, &w).unwrap();
                let linear = run_gfa(&g, &w).unwrap();
                assert!(
                    (quantum - linear).abs() <= 1e-9,
                    "disagreement on {w:?}: {quantum} vs {linear}"
                );
            }
        }
    }

    #[test]
    fn malformed_machines_are_refused() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let mut m = random_rtqfa(&mut rng, 2, 2, &ab());
        let old = m.ops.cent.kraus[0].get(0, 0);
        m.ops.cent.kraus[0].set(0, 0, old + Complex64::new(0.1, 0.0));
        assert!(matches!(
            rtqfa_to_gfa(&m),
            Err(ConvertError::Quantum(
                QuantumError::NotTracePreserving { .. }
            ))
        ));

        let mut p = fair_coin_rtpfa();
        p.transitions.per_input[0].set(0, 0, 0.7);
        assert!(matches!(
            rtpfa_to_rtkwqfa(&p),
            Err(ConvertError::Malformed(_))
        ));
        assert!(matches!(
            rtpfa_to_rtqfa(&p),
            Err(ConvertError::Malformed(_))
        ));
    }

    #[test]
    fn embedding_of_fair_coin_has_twelve_states_and_balanced_run() {
        let p = fair_coin_rtpfa();
        let emb = rtpfa_to_rtkwqfa(&p).unwrap();
        assert_eq!(emb.machine.state_count, 12);
        assert_eq!(emb.scale, 11.0);
        assert!(check_rtkwqfa(&emb.machine).passed);
        // f("a") = 1/2 exactly, so the embedded machine sits exactly on
        // the cutpoint and halts completely.
        let out = run_rtkwqfa(&emb.machine, "a").unwrap();
        assert!((out.p_acc - 0.5).abs() <= 1e-12);
        assert!(out.residual <= 1e-24);
    }

    #[test]
    fn scaling_loop_respects_proof_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(56);
        for n in 2..=5 {
            let p = random_rtpfa(&mut rng, n, &ab());
            let emb = rtpfa_to_rtkwqfa(&p).unwrap();
            let scale = emb.scale;
            for (_, trace) in emb.traces.iter_tape() {
                for &l_i in &trace.column_norms {
                    assert!(l_i < 2.0, "stacked prefix norm {l_i} out of bound");
                }
                for &d in &trace.diagonal {
                    assert!(d < 0.0);
                    assert!(d.abs() > scale - 1.0 && d.abs() < scale);
                }
                for row in &trace.off_diagonal {
                    for &b in row {
                        assert!(
                            (0.0..1.0 / (n as f64 + 3.0)).contains(&b),
                            "off-diagonal {b} out of [0, 1/(n+3))"
                        );
                    }
                }
            }
        }
    }

    /// The nonhalting top block of the embedded run is an exact rescaling
    /// of the extended stochastic run: after t steps the pre-measurement
    /// amplitudes of the first n+2 states equal scale^-t times the
    /// extended-block product applied to the start vector.
    #[test]
    fn embedded_run_is_a_rescaled_stochastic_run() {
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        for n in 2..=3 {
            let p = random_rtpfa(&mut rng, n, &ab());
            let emb = rtpfa_to_rtkwqfa(&p).unwrap();
            let ext = n + 2;
            for w in ["", "a", "ab", "abba"] {
                let tape = p.alphabet.tape(w).unwrap();
                let mut state = ComplexVector::basis(emb.machine.state_count, emb.machine.initial);
                let mut stochastic = vec![0.0; ext];
                stochastic[p.initial] = 1.0;
                for (t, sym) in tape.iter().enumerate() {
                    let moved = emb.machine.unitaries.get(*sym).matvec(&state).unwrap();
                    stochastic = emb.extended.get(*sym).matvec(&stochastic);
                    let rescale = emb.scale.powi(-(t as i32 + 1));
                    for (i, &s) in stochastic.iter().enumerate() {
                        let expected = s * rescale;
                        let actual = moved.entries[i];
                        assert!(actual.im == 0.0);
                        if expected == 0.0 {
                            assert!(actual.re == 0.0, "phantom amplitude at {i}");
                        } else {
                            assert!(
                                (actual.re - expected).abs() <= 1e-12 * expected.abs(),
                                "state {i} step {t}: {} vs {expected}",
                                actual.re
                            );
                        }
                    }
                    let mut kept = ComplexVector::zeros(emb.machine.state_count);
                    for i in 0..emb.machine.state_count {
                        if emb.machine.kinds[i] == StateKind::Nonhalting {
                            kept.entries[i] = moved.entries[i];
                        }
                    }
                    state = kept;
                }
            }
        }
    }

    /// Acceptance probability of the embedded machine differs from 1/2
    /// by the stochastic margin shrunk by scale^-2(|w|+2).
    #[test]
    fn embedding_decision_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(58);
        for n in 1..=3 {
            let p = random_rtpfa(&mut rng, n, &ab());
            let emb = rtpfa_to_rtkwqfa(&p).unwrap();
            for w in ["", "a", "b", "ab", "ba", "bb"] {
                let classical = run_rtpfa(&p, w).unwrap();
                let quantum = run_rtkwqfa(&emb.machine, w).unwrap();
                let shrink = emb.scale.powi(-2 * (w.len() as i32 + 2));
                let expected = shrink * (classical - 0.5);
                assert!(
                    ((quantum.p_acc - 0.5) - expected).abs() <= 1e-13,
                    "decision identity off on {w:?}"
                );
                assert!(quantum.residual <= 1e-20);
            }
        }
    }

    #[test]
    fn exact_quantum_simulation_of_stochastic_machines() {
        // A deterministic permutation machine keeps 0/1 probabilities.
        let swap = RealMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let perm = RtPfa {
            state_count: 2,
            alphabet: ab(),
            transitions: SymbolMap {
                cent: RealMatrix::identity(2),
                dollar: RealMatrix::identity(2),
                per_input: vec![swap, RealMatrix::identity(2)],
            },
            initial: 0,
            accepting: vec![false, true],
        };
        let q = rtpfa_to_rtqfa(&perm).unwrap();
        for (w, expected) in [("", 0.0), ("a", 1.0), ("aa", 0.0), ("ab", 1.0)] {
            assert_eq!(run_rtqfa(&q, w).unwrap(), expected);
        }

        let coin = rtpfa_to_rtqfa(&fair_coin_rtpfa()).unwrap();
        assert!((run_rtqfa(&coin, "a").unwrap() - 0.5).abs() <= 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for _ in 0..5 {
            let p = random_rtpfa(&mut rng, 4, &ab());
            let q = rtpfa_to_rtqfa(&p).unwrap();
            for (_, op) in q.ops.iter_tape() {
                assert!(op.completeness_defect() <= 1e-15);
            }
            for w in strings_through(&ab(), 4) {
                let classical = run_rtpfa(&p, &w).unwrap();
                let quantum = run_rtqfa(&q, &w).unwrap();
                assert!((classical - quantum).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn union_of_machine_with_itself_preserves_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        let m = random_rtkwqfa(&mut rng, 2, 1, 1, &ab());
        let u = equiprobable_union(&m, &m).unwrap();
        assert_eq!(u.state_count, 9);
        for w in ["", "a", "ab", "bab"] {
            let single = run_rtkwqfa(&m, w).unwrap();
            let double = run_rtkwqfa(&u, w).unwrap();
            assert!((single.p_acc - double.p_acc).abs() <= 1e-12);
            assert!((single.p_rej - double.p_rej).abs() <= 1e-12);
        }
    }

    #[test]
    fn union_of_all_accept_and_all_reject_is_balanced() {
        let trivial = |kind: StateKind| RtKwqfa {
            state_count: 1,
            alphabet: ab(),
            unitaries: SymbolMap {
                cent: ComplexMatrix::identity(1),
                dollar: ComplexMatrix::identity(1),
                per_input: vec![ComplexMatrix::identity(1), ComplexMatrix::identity(1)],
            },
            initial: 0,
            kinds: vec![kind],
        };
        let u = equiprobable_union(
            &trivial(StateKind::Accepting),
            &trivial(StateKind::Rejecting),
        )
        .unwrap();
        for w in ["", "a", "abba"] {
            let out = run_rtkwqfa(&u, w).unwrap();
            assert!((out.p_acc - 0.5).abs() <= 1e-12);
            assert!((out.p_rej - 0.5).abs() <= 1e-12);
        }
    }

    #[test]
    fn union_averages_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..5 {
            let m1 = random_rtkwqfa(&mut rng, 2, 1, 1, &ab());
            let m2 = random_rtkwqfa(&mut rng, 3, 1, 1, &ab());
            let u = equiprobable_union(&m1, &m2).unwrap();
            for w in strings_through(&ab(), 3) {
                let p1 = run_rtkwqfa(&m1, &w).unwrap().p_acc;
                let p2 = run_rtkwqfa(&m2, &w).unwrap().p_acc;
                let pu = run_rtkwqfa(&u, &w).unwrap().p_acc;
                assert!((pu - (p1 + p2) / 2.0).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn union_requires_matching_alphabets() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let m1 = random_rtkwqfa(&mut rng, 2, 1, 1, &ab());
        let m2 = random_rtkwqfa(&mut rng, 2, 1, 1, &Alphabet::new(vec!['a']).unwrap());
        assert!(matches!(
            equiprobable_union(&m1, &m2),
            Err(ConvertError::AlphabetMismatch { .. })
        ));
    }
}
