//! Seeded generators for machines and operators. These back the property
//! and acceptance suites, which sample hundreds of random machines; all
//! functions take the RNG explicitly so every run is reproducible from
//! its seed.

use crate::alphabet::{Alphabet, SymbolMap};
use crate::classical::{RealMatrix, RtPfa};
use crate::linalg::{Complex64, ComplexMatrix, ComplexVector};
use crate::quantum_rt::{RtKwqfa, RtQfa, StateKind, SuperOp};
use rand::Rng;

/// Random left-stochastic matrix: each column is an independent point of
/// the probability simplex (normalized uniforms).
pub fn random_stochastic<R: Rng>(rng: &mut R, n: usize) -> RealMatrix {
    let mut m = RealMatrix::zeros(n, n);
    for j in 0..n {
        let mut col: Vec<f64> = (0..n)
            .map(|_| rng.gen_range(0.0f64..1.0).max(1e-12))
            .collect();
        let sum: f64 = col.iter().sum();
        for x in col.iter_mut() {
            *x /= sum;
        }
        // Push rounding slack into the largest entry so the column sums
        // to 1 exactly as required of fixtures.
        let total: f64 = col.iter().sum();
        let imax = col
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        col[imax] += 1.0 - total;
        for (i, &entry) in col.iter().enumerate() {
            m.set(i, j, entry);
        }
    }
    m
}

/// Random RT-PFA over `alphabet` with `n` states; roughly half of the
/// states accept, and the machine starts in state 0.
pub fn random_rtpfa<R: Rng>(rng: &mut R, n: usize, alphabet: &Alphabet) -> RtPfa {
    let accepting: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    RtPfa {
        state_count: n,
        alphabet: alphabet.clone(),
        transitions: SymbolMap {
            cent: random_stochastic(rng, n),
            dollar: random_stochastic(rng, n),
            per_input: (0..alphabet.len())
                .map(|_| random_stochastic(rng, n))
                .collect(),
        },
        initial: 0,
        accepting,
    }
}

/// The two-state half/half machine: reading `a` in state 1 moves to
/// state 2 with probability 1/2; state 2 accepts and absorbs.
pub fn fair_coin_rtpfa() -> RtPfa {
    let a = RealMatrix::from_rows(&[&[0.5, 0.0], &[0.5, 1.0]]);
    let b = RealMatrix::identity(2);
    RtPfa {
        state_count: 2,
        alphabet: Alphabet::ab(),
        transitions: SymbolMap {
            cent: RealMatrix::identity(2),
            dollar: RealMatrix::identity(2),
            per_input: vec![a, b],
        },
        initial: 0,
        accepting: vec![false, true],
    }
}

fn random_complex<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Matrix with independent complex entries from the unit square.
pub fn random_complex_entries<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| random_complex(rng))
}

/// Columns of a Haar-ish random isometry from C^cols into C^rows
/// (`rows >= cols`), via twice-iterated Gram-Schmidt on a random matrix.
pub fn random_isometry_columns<R: Rng>(
    rng: &mut R,
    rows: usize,
    cols: usize,
) -> Vec<ComplexVector> {
    assert!(rows >= cols);
    loop {
        let mut out: Vec<ComplexVector> = Vec::with_capacity(cols);
        for _ in 0..cols {
            let mut v = ComplexVector {
                entries: (0..rows).map(|_| random_complex(rng)).collect(),
            };
            for _ in 0..2 {
                for u in &out {
                    let c = u.inner(&v);
                    v = v.sub(&u.scale(c));
                }
            }
            let n = v.norm();
            if n < 1e-6 {
                break;
            }
            out.push(v.scale(Complex64::new(1.0 / n, 0.0)));
        }
        if out.len() == cols {
            return out;
        }
    }
}

/// Random unitary matrix of the given dimension.
pub fn random_unitary<R: Rng>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let cols = random_isometry_columns(rng, dim, dim);
    let mut m = ComplexMatrix::zeros(dim, dim);
    for (j, col) in cols.iter().enumerate() {
        m.set_column(j, col);
    }
    m
}

/// Random Kraus family of `k` elements on an `n`-dimensional space,
/// trace preserving up to Gram-Schmidt rounding: the stacked elements
/// form an isometry from C^n into C^(k n).
pub fn random_kraus_family<R: Rng>(rng: &mut R, n: usize, k: usize) -> SuperOp {
    let cols = random_isometry_columns(rng, k * n, n);
    let kraus = (0..k)
        .map(|block| ComplexMatrix::from_fn(n, n, |i, j| cols[j].entries[block * n + i]))
        .collect();
    SuperOp { kraus }
}

/// Random RT-QFA with up to `max_kraus` elements per symbol and a
/// nonempty accepting set.
pub fn random_rtqfa<R: Rng>(rng: &mut R, n: usize, max_kraus: usize, alphabet: &Alphabet) -> RtQfa {
    let mut accepting: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    if !accepting.iter().any(|&x| x) {
        accepting[rng.gen_range(0..n)] = true;
    }
    let family = |rng: &mut R| {
        let k = rng.gen_range(1..=max_kraus);
        random_kraus_family(rng, n, k)
    };
    RtQfa {
        state_count: n,
        alphabet: alphabet.clone(),
        ops: SymbolMap {
            cent: family(rng),
            dollar: family(rng),
            per_input: (0..alphabet.len()).map(|_| family(rng)).collect(),
        },
        initial: 0,
        accepting,
    }
}

/// Random RT-KWQFA with the given partition sizes (nonhalting states
/// first, then accepting, then rejecting) and random unitaries.
pub fn random_rtkwqfa<R: Rng>(
    rng: &mut R,
    nonhalting: usize,
    accepting: usize,
    rejecting: usize,
    alphabet: &Alphabet,
) -> RtKwqfa {
    assert!(nonhalting >= 1, "initial state must be nonhalting");
    let n = nonhalting + accepting + rejecting;
    let mut kinds = Vec::with_capacity(n);
    kinds.extend(std::iter::repeat_n(StateKind::Nonhalting, nonhalting));
    kinds.extend(std::iter::repeat_n(StateKind::Accepting, accepting));
    kinds.extend(std::iter::repeat_n(StateKind::Rejecting, rejecting));
    RtKwqfa {
        state_count: n,
        alphabet: alphabet.clone(),
        unitaries: SymbolMap {
            cent: random_unitary(rng, n),
            dollar: random_unitary(rng, n),
            per_input: (0..alphabet.len())
                .map(|_| random_unitary(rng, n))
                .collect(),
        },
        initial: 0,
        kinds,
    }
}
