//! Dense complex linear algebra sized for small operator spaces.
//!
//! Automata in this crate live in state spaces of at most a few hundred
//! dimensions, so everything here is dense, row-major, and direct: no
//! sparsity, no blocking, no iterative refinement. The one iterative
//! routine, [`accumulate_halting`], is iterative because the quantity it
//! computes is an infinite series; a direct fixpoint solve is provided as
//! a cross-check for small spaces.

use thiserror::Error;

pub type Complex64 = num_complex::Complex<f64>;

/// Tolerance for identities that hold by construction (exact arithmetic
/// up to rounding): embeddings, compressions, algebraic rewrites.
pub const TOL_CONSTRUCTION: f64 = 1e-12;

/// Acceptance tolerance for wellformedness verdicts on user-supplied or
/// generated machines (unitarity, stochasticity, trace preservation).
pub const TOL_WELLFORMED: f64 = 1e-9;

/// Residual norm below which a Gram-Schmidt candidate is considered
/// degenerate (already spanned) and skipped rather than normalized.
pub const TOL_DEGENERATE: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch in {op}: left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    DimensionMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("columns {col_a} and {col_b} are not orthonormal: |<a,b> - delta| = {defect:.3e} exceeds {tolerance:.3e}")]
    NotOrthonormal {
        col_a: usize,
        col_b: usize,
        defect: f64,
        tolerance: f64,
    },
    #[error("cannot complete {given} columns of dimension {dim} to a unitary: basis candidates exhausted")]
    CompletionExhausted { dim: usize, given: usize },
    #[error("more columns ({cols}) than rows ({rows}); nothing to complete")]
    TooManyColumns { rows: usize, cols: usize },
    #[error("stacked halting blocks are not norm preserving at column {col}: total squared norm {norm_sq} deviates from 1 by more than {tolerance:.3e}")]
    NotNormPreserving {
        col: usize,
        norm_sq: f64,
        tolerance: f64,
    },
    #[error("direct fixpoint solve only supports dimension <= {max}, got {dim}")]
    DimensionTooLarge { dim: usize, max: usize },
    #[error("linear system is singular or too ill conditioned (pivot {pivot:.3e} at step {step})")]
    Singular { step: usize, pivot: f64 },
    #[error("matrix is not Hermitian: max |A - A^dagger| entry = {defect:.3e}")]
    NotHermitian { defect: f64 },
}

/// Column vector over `Complex64`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector {
    pub entries: Vec<Complex64>,
}

impl ComplexVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: vec![Complex64::new(0.0, 0.0); dim],
        }
    }

    /// Standard basis vector `e_index` (0-based).
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.entries[index] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn from_reals(values: &[f64]) -> Self {
        Self {
            entries: values.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Inner product, conjugate linear in `self`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            entries: self.entries.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Reshape into an `n x n` matrix, inverse of [`ComplexMatrix::vec`].
    pub fn unvec(&self, n: usize) -> ComplexMatrix {
        assert_eq!(self.dim(), n * n, "unvec dimension mismatch");
        ComplexMatrix {
            rows: n,
            cols: n,
            data: self.entries.clone(),
        }
    }
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Build from row slices of real values; handy in tests.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        Self::from_fn(r, c, |i, j| Complex64::new(rows[i][j], 0.0))
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn column(&self, j: usize) -> ComplexVector {
        ComplexVector {
            entries: (0..self.rows).map(|i| self.get(i, j)).collect(),
        }
    }

    pub fn set_column(&mut self, j: usize, v: &ComplexVector) {
        assert_eq!(v.dim(), self.rows);
        for i in 0..self.rows {
            self.set(i, j, v.entries[i]);
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j).conj())
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| {
            self.get(i, j) + other.get(i, j)
        })
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| {
            self.get(i, j) - other.get(i, j)
        })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j) * s)
    }

    pub fn mul(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "mul",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &ComplexVector) -> Result<ComplexVector, LinalgError> {
        if self.cols != v.dim() {
            return Err(LinalgError::DimensionMismatch {
                op: "matvec",
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: v.dim(),
                right_cols: 1,
            });
        }
        let mut out = ComplexVector::zeros(self.rows);
        for i in 0..self.rows {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..self.cols {
                acc += self.get(i, j) * v.entries[j];
            }
            out.entries[i] = acc;
        }
        Ok(out)
    }

    /// Row-major flattening: `vec(A)[i*n + j] = A[i][j]` (0-based), so the
    /// first row comes first. Requires a square matrix.
    pub fn vec(&self) -> ComplexVector {
        assert!(self.is_square(), "vec is defined for square matrices");
        ComplexVector {
            entries: self.data.clone(),
        }
    }

    /// Kronecker product; `(A kron B)[i1*r2+i2][j1*c2+j2] = A[i1][j1] * B[i2][j2]`.
    pub fn kron(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows * other.rows, self.cols * other.cols);
        for i1 in 0..self.rows {
            for j1 in 0..self.cols {
                let a = self.get(i1, j1);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for i2 in 0..other.rows {
                    for j2 in 0..other.cols {
                        out.set(
                            i1 * other.rows + i2,
                            j1 * other.cols + j2,
                            a * other.get(i2, j2),
                        );
                    }
                }
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    /// Largest entry magnitude; the max norm used by the checkers.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |(self - other)[i][j]|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.sub(other).max_abs()
    }

    /// Index of the largest-magnitude entry of `self - other`.
    pub fn argmax_abs_diff(&self, other: &Self) -> (usize, usize, f64) {
        let mut best = (0, 0, -1.0);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let d = (self.get(i, j) - other.get(i, j)).norm();
                if d > best.2 {
                    best = (i, j, d);
                }
            }
        }
        best
    }

    /// Hermitian defect `max |A - A^dagger|`.
    pub fn hermitian_defect(&self) -> f64 {
        self.max_abs_diff(&self.dagger())
    }
}

/// Candidate ordering for unitary completion. The completion walks the
/// standard basis in this order, keeping candidates that are not already
/// spanned. Completions with different orderings differ, but any machine
/// behavior reachable from the initial state must not (tested against the
/// shipped fixtures).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisOrder {
    Ascending,
    Descending,
}

/// Extend `k` orthonormal columns to a full `d x d` unitary whose first
/// `k` columns are the input, by Gram-Schmidt over standard basis
/// candidates taken in `order`. Candidates whose residual norm falls
/// below [`TOL_DEGENERATE`] are skipped.
pub fn complete_to_unitary(
    specified: &ComplexMatrix,
    order: BasisOrder,
) -> Result<ComplexMatrix, LinalgError> {
    let d = specified.rows;
    let k = specified.cols;
    let placed: Vec<(usize, ComplexVector)> = (0..k).map(|j| (j, specified.column(j))).collect();
    complete_partial_unitary(d, &placed, order)
}

/// As [`complete_to_unitary`], but the given columns sit at arbitrary
/// column indices; the remaining indices receive completion columns in
/// ascending index order. Used when loading machines whose transition
/// tables specify only some source states.
pub fn complete_partial_unitary(
    dim: usize,
    placed: &[(usize, ComplexVector)],
    order: BasisOrder,
) -> Result<ComplexMatrix, LinalgError> {
    if placed.len() > dim {
        return Err(LinalgError::TooManyColumns {
            rows: dim,
            cols: placed.len(),
        });
    }
    let mut seen = vec![false; dim];
    for (idx, col) in placed {
        assert!(*idx < dim, "column index {idx} out of range");
        assert!(!seen[*idx], "column index {idx} specified twice");
        assert_eq!(col.dim(), dim, "column has wrong dimension");
        seen[*idx] = true;
    }
    // Orthonormality of the specified columns gates everything else.
    for (a, (ia, ca)) in placed.iter().enumerate() {
        for (ib, cb) in placed.iter().skip(a) {
            let ip = ca.inner(cb);
            let target = if ia == ib { 1.0 } else { 0.0 };
            let defect = (ip - Complex64::new(target, 0.0)).norm();
            if defect > TOL_WELLFORMED {
                return Err(LinalgError::NotOrthonormal {
                    col_a: *ia,
                    col_b: *ib,
                    defect,
                    tolerance: TOL_WELLFORMED,
                });
            }
        }
    }

    let mut basis: Vec<ComplexVector> = placed.iter().map(|(_, c)| c.clone()).collect();
    let mut extra: Vec<ComplexVector> = Vec::new();
    let candidates: Vec<usize> = match order {
        BasisOrder::Ascending => (0..dim).collect(),
        BasisOrder::Descending => (0..dim).rev().collect(),
    };
    for c in candidates {
        if basis.len() == dim {
            break;
        }
        let mut v = ComplexVector::basis(dim, c);
        // Two projection passes keep the completion orthogonal to working
        // precision even when a candidate nearly lies in the span.
        for _ in 0..2 {
            for u in &basis {
                let coeff = u.inner(&v);
                v = v.sub(&u.scale(coeff));
            }
        }
        let n = v.norm();
        if n < TOL_DEGENERATE {
            continue;
        }
        let v = v.scale(Complex64::new(1.0 / n, 0.0));
        basis.push(v.clone());
        extra.push(v);
    }
    if basis.len() < dim {
        return Err(LinalgError::CompletionExhausted {
            dim,
            given: placed.len(),
        });
    }

    let mut out = ComplexMatrix::zeros(dim, dim);
    for (idx, col) in placed {
        out.set_column(*idx, col);
    }
    let mut extra_iter = extra.into_iter();
    for (j, seen) in seen.iter().enumerate() {
        if !seen {
            out.set_column(j, &extra_iter.next().expect("completion column count"));
        }
    }
    Ok(out)
}

/// Outcome of a halting accumulation run. Probabilities are raw floating
/// sums; clamping to `[0, 1]` happens only when reports are rendered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    pub p_acc: f64,
    pub p_rej: f64,
    pub residual: f64,
    pub steps: usize,
    pub converged: bool,
}

impl RunOutcome {
    /// `p_acc - 1/2`, the quantity compared against the residual when
    /// classifying against the unbounded-error cutpoint.
    pub fn margin(&self) -> f64 {
        self.p_acc - 0.5
    }
}

/// Shared accumulation loop: repeatedly applies one evolution step that
/// returns the next nonhalting vector together with the accept and reject
/// mass it shed, until the nonhalting mass drops below `tol` or
/// `max_steps` is reached. Running past `max_steps` is reported through
/// `converged = false`, never as an error.
///
/// Conservation (`p_acc + p_rej + residual` equals the initial mass
/// within 1e-9) and monotonicity of the residual are asserted on every
/// step; a violation means the supplied step is not the halting split of
/// a norm-preserving map and is a caller bug.
pub(crate) fn run_halting_loop<F>(
    init: ComplexVector,
    tol: f64,
    max_steps: usize,
    mut step: F,
) -> RunOutcome
where
    F: FnMut(&ComplexVector) -> (ComplexVector, f64, f64),
{
    let total = init.norm_sq();
    let mut psi = init;
    let mut residual = total;
    let mut p_acc = 0.0;
    let mut p_rej = 0.0;
    let mut steps = 0;
    while residual >= tol && steps < max_steps {
        let (next, d_acc, d_rej) = step(&psi);
        p_acc += d_acc;
        p_rej += d_rej;
        let next_residual = next.norm_sq();
        assert!(
            next_residual <= residual + 1e-12,
            "residual increased from {residual} to {next_residual} at step {steps}"
        );
        assert!(
            (p_acc + p_rej + next_residual - total).abs() <= 1e-9,
            "probability mass not conserved at step {steps}: acc {p_acc} + rej {p_rej} + residual {next_residual} != {total}"
        );
        residual = next_residual;
        psi = next;
        steps += 1;
    }
    RunOutcome {
        p_acc,
        p_rej,
        residual,
        steps,
        converged: residual < tol,
    }
}

/// Accumulate total accept and reject mass of the halting iteration
/// `psi -> nonhalt * psi`, where `accept * psi` and `reject * psi` are
/// measured out each step. The three maps must be the blocks of a single
/// norm-preserving operator; this is gated by checking that stacked
/// column norms are 1 within [`TOL_WELLFORMED`].
pub fn accumulate_halting(
    nonhalt: &ComplexMatrix,
    accept: &ComplexMatrix,
    reject: &ComplexMatrix,
    init: &ComplexVector,
    tol: f64,
    max_steps: usize,
) -> Result<RunOutcome, LinalgError> {
    let d = init.dim();
    for (name, m) in [("nonhalt", nonhalt), ("accept", accept), ("reject", reject)] {
        if m.cols != d {
            return Err(LinalgError::DimensionMismatch {
                op: match name {
                    "nonhalt" => "accumulate_halting nonhalt",
                    "accept" => "accumulate_halting accept",
                    _ => "accumulate_halting reject",
                },
                left_rows: m.rows,
                left_cols: m.cols,
                right_rows: d,
                right_cols: 1,
            });
        }
    }
    if !nonhalt.is_square() {
        return Err(LinalgError::NonSquare {
            rows: nonhalt.rows,
            cols: nonhalt.cols,
        });
    }
    for j in 0..d {
        let norm_sq =
            nonhalt.column(j).norm_sq() + accept.column(j).norm_sq() + reject.column(j).norm_sq();
        if (norm_sq - 1.0).abs() > TOL_WELLFORMED {
            return Err(LinalgError::NotNormPreserving {
                col: j,
                norm_sq,
                tolerance: TOL_WELLFORMED,
            });
        }
    }
    Ok(run_halting_loop(init.clone(), tol, max_steps, |psi| {
        let next = nonhalt.matvec(psi).expect("dimensions checked");
        let da = accept.matvec(psi).expect("dimensions checked").norm_sq();
        let dr = reject.matvec(psi).expect("dimensions checked").norm_sq();
        (next, da, dr)
    }))
}

/// Largest dimension accepted by [`solve_halting_fixpoint`]; the solve
/// works on the squared space, so this caps the linear system at 4096.
pub const MAX_FIXPOINT_DIM: usize = 64;

/// Directly solve `X = M + N^dagger X N` through the flattening identity
/// `vec(A B C) = (A kron C^T) vec(B)`. With `M = A^dagger A` this gives
/// the exact infinite-horizon halting mass `psi0^dagger X psi0`, which
/// cross-checks the iterative accumulator on small spaces.
pub fn solve_halting_fixpoint(
    nonhalt: &ComplexMatrix,
    m: &ComplexMatrix,
) -> Result<ComplexMatrix, LinalgError> {
    if !nonhalt.is_square() {
        return Err(LinalgError::NonSquare {
            rows: nonhalt.rows,
            cols: nonhalt.cols,
        });
    }
    let n = nonhalt.rows;
    if n > MAX_FIXPOINT_DIM {
        return Err(LinalgError::DimensionTooLarge {
            dim: n,
            max: MAX_FIXPOINT_DIM,
        });
    }
    if m.rows != n || m.cols != n {
        return Err(LinalgError::DimensionMismatch {
            op: "solve_halting_fixpoint",
            left_rows: nonhalt.rows,
            left_cols: nonhalt.cols,
            right_rows: m.rows,
            right_cols: m.cols,
        });
    }
    // (I - N^dagger kron N^T) vec(X) = vec(M)
    let big = ComplexMatrix::identity(n * n).sub(&nonhalt.dagger().kron(&nonhalt.transpose()));
    let x = lu_solve(big, m.vec().entries)?;
    Ok(ComplexVector { entries: x }.unvec(n))
}

/// Exact accept and reject mass for the halting iteration, via two
/// fixpoint solves. Oracle counterpart of [`accumulate_halting`].
pub fn accumulate_halting_exact(
    nonhalt: &ComplexMatrix,
    accept: &ComplexMatrix,
    reject: &ComplexMatrix,
    init: &ComplexVector,
) -> Result<(f64, f64), LinalgError> {
    let quad = |block: &ComplexMatrix| -> Result<f64, LinalgError> {
        let m = block.dagger().mul(block)?;
        let x = solve_halting_fixpoint(nonhalt, &m)?;
        let xv = x.matvec(init)?;
        Ok(init.inner(&xv).re)
    };
    Ok((quad(accept)?, quad(reject)?))
}

/// LU solve with partial pivoting; consumes the matrix.
fn lu_solve(mut a: ComplexMatrix, mut b: Vec<Complex64>) -> Result<Vec<Complex64>, LinalgError> {
    let n = a.rows;
    assert!(a.is_square() && b.len() == n);
    for k in 0..n {
        let mut pivot_row = k;
        let mut pivot_mag = a.get(k, k).norm();
        for i in (k + 1)..n {
            let mag = a.get(i, k).norm();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = i;
            }
        }
        if pivot_mag < 1e-300 {
            return Err(LinalgError::Singular {
                step: k,
                pivot: pivot_mag,
            });
        }
        if pivot_row != k {
            for j in 0..n {
                let tmp = a.get(k, j);
                a.set(k, j, a.get(pivot_row, j));
                a.set(pivot_row, j, tmp);
            }
            b.swap(k, pivot_row);
        }
        let pivot = a.get(k, k);
        for i in (k + 1)..n {
            let factor = a.get(i, k) / pivot;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in k..n {
                let v = a.get(i, j) - factor * a.get(k, j);
                a.set(i, j, v);
            }
            let pivot_rhs = b[k];
            b[i] -= factor * pivot_rhs;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut acc = b[i];
        for (j, xv) in x.iter().enumerate().skip(i + 1) {
            acc -= a.get(i, j) * xv;
        }
        x[i] = acc / a.get(i, i);
    }
    Ok(x)
}

/// Smallest eigenvalue of a Hermitian matrix, via cyclic Jacobi sweeps on
/// the real symmetric embedding `[[Re H, -Im H], [Im H, Re H]]` (which
/// duplicates each eigenvalue). Used for positive semidefiniteness
/// checks on density matrices.
pub fn hermitian_min_eigenvalue(h: &ComplexMatrix) -> Result<f64, LinalgError> {
    if !h.is_square() {
        return Err(LinalgError::NonSquare {
            rows: h.rows,
            cols: h.cols,
        });
    }
    let defect = h.hermitian_defect();
    if defect > TOL_WELLFORMED {
        return Err(LinalgError::NotHermitian { defect });
    }
    let n = h.rows;
    if n == 0 {
        return Ok(0.0);
    }
    let m = 2 * n;
    let mut s = vec![0.0f64; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = h.get(i, j);
            s[i * m + j] = z.re;
            s[i * m + (n + j)] = -z.im;
            s[(n + i) * m + j] = z.im;
            s[(n + i) * m + (n + j)] = z.re;
        }
    }
    // Symmetrize away the Hermitian defect so the sweeps converge cleanly.
    for i in 0..m {
        for j in (i + 1)..m {
            let avg = 0.5 * (s[i * m + j] + s[j * m + i]);
            s[i * m + j] = avg;
            s[j * m + i] = avg;
        }
    }
    let scale = s.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for i in 0..m {
            for j in (i + 1)..m {
                off += s[i * m + j] * s[i * m + j];
            }
        }
        if off.sqrt() < 1e-14 * scale {
            break;
        }
        for p in 0..m {
            for q in (p + 1)..m {
                let apq = s[p * m + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = s[p * m + p];
                let aqq = s[q * m + q];
                // Classical Jacobi rotation choosing the angle that
                // annihilates s[p][q].
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                for k in 0..m {
                    let skp = s[k * m + p];
                    let skq = s[k * m + q];
                    s[k * m + p] = c * skp - sn * skq;
                    s[k * m + q] = sn * skp + c * skq;
                }
                for k in 0..m {
                    let spk = s[p * m + k];
                    let sqk = s[q * m + k];
                    s[p * m + k] = c * spk - sn * sqk;
                    s[q * m + k] = sn * spk + c * sqk;
                }
            }
        }
    }
    let min = (0..m).map(|i| s[i * m + i]).fold(f64::INFINITY, f64::min);
    Ok(min)
}
