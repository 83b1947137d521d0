//! Real-time probabilistic finite automata and generalized finite
//! automata: stochastic column dynamics and raw linear-functional values.

use crate::alphabet::{Alphabet, AlphabetError, SymbolMap};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ClassicalError {
    #[error(transparent)]
    Input(#[from] AlphabetError),
    #[error("matrix for {what} must be {expected}x{expected}, got {rows}x{cols}")]
    BadDimensions {
        what: String,
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("vector {what} must have length {expected}, got {got}")]
    BadVectorLength {
        what: String,
        expected: usize,
        got: usize,
    },
}

/// Dense row-major real matrix. The classical machines are real by
/// definition, so they do not reuse the complex type.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        Self::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| v.iter().enumerate().map(|(j, x)| self.get(i, j) * x).sum())
            .collect()
    }

    pub fn mul(&self, other: &RealMatrix) -> RealMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = RealMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.set(i, j, out.get(i, j) + a * other.get(k, j));
                }
            }
        }
        out
    }

    pub fn column_sum(&self, j: usize) -> f64 {
        (0..self.rows).map(|i| self.get(i, j)).sum()
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Real-time probabilistic finite automaton: left-stochastic matrices
/// over the framed tape, acceptance mass read off the final vector.
#[derive(Debug, Clone, PartialEq)]
pub struct RtPfa {
    pub state_count: usize,
    pub alphabet: Alphabet,
    pub transitions: SymbolMap<RealMatrix>,
    pub initial: usize,
    pub accepting: Vec<bool>,
}

impl RtPfa {
    fn check_dims(&self) -> Result<(), ClassicalError> {
        let n = self.state_count;
        for (sym, m) in self.transitions.iter_tape() {
            if m.rows != n || m.cols != n {
                return Err(ClassicalError::BadDimensions {
                    what: format!("symbol {}", sym.describe(&self.alphabet)),
                    expected: n,
                    rows: m.rows,
                    cols: m.cols,
                });
            }
        }
        if self.accepting.len() != n {
            return Err(ClassicalError::BadVectorLength {
                what: "accepting flags".into(),
                expected: n,
                got: self.accepting.len(),
            });
        }
        Ok(())
    }

    /// The probability vector after reading the framed tape for `w`.
    pub fn final_vector(&self, w: &str) -> Result<Vec<f64>, ClassicalError> {
        self.check_dims()?;
        let tape = self.alphabet.tape(w)?;
        let mut v = vec![0.0; self.state_count];
        v[self.initial] = 1.0;
        for sym in tape {
            v = self.transitions.get(sym).matvec(&v);
        }
        Ok(v)
    }
}

/// Acceptance probability: total mass on accepting states after the
/// framed tape. Raw floating sum; the stochastic invariant keeps it in
/// `[0, 1]` up to rounding for wellformed machines.
pub fn run_rtpfa(m: &RtPfa, w: &str) -> Result<f64, ClassicalError> {
    let v = m.final_vector(w)?;
    Ok(v.iter()
        .zip(&m.accepting)
        .filter(|(_, &acc)| acc)
        .map(|(x, _)| x)
        .sum())
}

/// Generalized finite automaton: arbitrary real matrices, no
/// end-markers, value is a raw linear functional (unbounded).
#[derive(Debug, Clone, PartialEq)]
pub struct Gfa {
    pub state_count: usize,
    pub alphabet: Alphabet,
    pub per_input: Vec<RealMatrix>,
    pub initial_vector: Vec<f64>,
    pub final_functional: Vec<f64>,
}

/// `f · A_w · v0` with the empty product as identity. The value is
/// reported raw; clamping or cutpoint comparison is the classifier's
/// business.
pub fn run_gfa(g: &Gfa, w: &str) -> Result<f64, ClassicalError> {
    let n = g.state_count;
    if g.initial_vector.len() != n {
        return Err(ClassicalError::BadVectorLength {
            what: "initial vector".into(),
            expected: n,
            got: g.initial_vector.len(),
        });
    }
    if g.final_functional.len() != n {
        return Err(ClassicalError::BadVectorLength {
            what: "final functional".into(),
            expected: n,
            got: g.final_functional.len(),
        });
    }
    for (i, m) in g.per_input.iter().enumerate() {
        if m.rows != n || m.cols != n {
            return Err(ClassicalError::BadDimensions {
                what: format!("symbol {}", g.alphabet.symbols()[i]),
                expected: n,
                rows: m.rows,
                cols: m.cols,
            });
        }
    }
    let mut v = g.initial_vector.clone();
    for idx in g.alphabet.encode(w)? {
        v = g.per_input[idx].matvec(&v);
    }
    Ok(g.final_functional.iter().zip(&v).map(|(f, x)| f * x).sum())
}

/// Cutpoint comparison modes. `Equals` is for languages recognized at
/// probability exactly equal to the cutpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassifyMode {
    Strict,
    Nonstrict,
    Equals { tol: f64 },
}

pub const DEFAULT_EQUALS_TOL: f64 = 1e-9;

impl ClassifyMode {
    pub fn equals_default() -> Self {
        ClassifyMode::Equals {
            tol: DEFAULT_EQUALS_TOL,
        }
    }
}

pub fn classify(value: f64, cutpoint: f64, mode: ClassifyMode) -> bool {
    match mode {
        ClassifyMode::Strict => value > cutpoint,
        ClassifyMode::Nonstrict => value >= cutpoint,
        ClassifyMode::Equals { tol } => (value - cutpoint).abs() <= tol,
    }
}
