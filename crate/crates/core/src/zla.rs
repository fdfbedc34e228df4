//! Exact integer linear algebra: Hermite and Smith normal forms, cokernels,
//! integer linear solving and a few lattice helpers.
//!
//! Everything works over arbitrary-precision integers. Matrices act on row
//! vectors where a convention matters: the Hermite form is row-style
//! (`u * m = h`), and lattices are given by their generating rows.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<BigInt>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count must equal rows * cols");
        IntMatrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    /// Builds a matrix from explicit rows. `cols` is needed for the 0-row case.
    pub fn from_rows(rows: Vec<Vec<BigInt>>, cols: usize) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged row");
            data.extend(r);
        }
        IntMatrix { rows: n, cols, data }
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        Self::from_rows(
            rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect(),
            cols,
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut t = IntMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    /// `self * v` for a column vector `v`.
    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self.get(i, j).is_zero()))
    }

    /// Diagonal entries `(0,0), (1,1), ...` up to `min(rows, cols)`.
    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i).clone()).collect()
    }

    /// Fraction-free (Bareiss) determinant. Panics on non-square input.
    pub fn determinant(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.to_rows();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                    Some(i) => {
                        a.swap(i, k);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                    a[i][j] = v / &prev;
                }
            }
            prev = a[k][k].clone();
        }
        sign * a[n - 1][n - 1].clone()
    }

    pub fn is_unimodular(&self) -> bool {
        self.rows == self.cols && self.determinant().abs().is_one()
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for (j, x) in self.row(i).iter().enumerate() {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// Serializes a value through `Display`, so big integers become strings.
pub fn ser_display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

pub fn ser_display_seq<T: std::fmt::Display, S: serde::Serializer>(v: &[T], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x.to_string()))
}

/// A finitely generated abelian group `Z^free_rank + Z/d1 + ... + Z/dk` in
/// invariant-factor form (`d1 | d2 | ... | dk`, every `di >= 2`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AbelianGroupStructure {
    pub free_rank: usize,
    pub torsion: Vec<BigInt>,
}

impl AbelianGroupStructure {
    pub fn free(rank: usize) -> Self {
        AbelianGroupStructure { free_rank: rank, torsion: Vec::new() }
    }

    pub fn is_torsion_free(&self) -> bool {
        self.torsion.is_empty()
    }

    pub fn torsion_u64(&self) -> Vec<u64> {
        self.torsion.iter().map(|d| u64::try_from(d).unwrap_or(u64::MAX)).collect()
    }
}

impl fmt::Display for AbelianGroupStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.free_rank > 0 {
            parts.push(if self.free_rank == 1 { "Z".to_string() } else { format!("Z^{}", self.free_rank) });
        }
        for d in &self.torsion {
            parts.push(format!("Z/{d}"));
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

impl Serialize for AbelianGroupStructure {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("AbelianGroupStructure", 2)?;
        st.serialize_field("free_rank", &self.free_rank)?;
        let torsion: Vec<String> = self.torsion.iter().map(ToString::to_string).collect();
        st.serialize_field("torsion", &torsion)?;
        st.end()
    }
}

// ---------------------------------------------------------------------------
// Hermite normal form

fn sub_scaled_row(target: &mut [BigInt], source: &[BigInt], q: &BigInt) {
    if q.is_zero() {
        return;
    }
    for (t, s) in target.iter_mut().zip(source) {
        if !s.is_zero() {
            *t -= q * s;
        }
    }
}

fn negate_row(row: &mut [BigInt]) {
    for x in row.iter_mut() {
        *x = -std::mem::take(x);
    }
}

/// Row-style HNF on a row list, optionally tracking the transform. Returns
/// the rank. Pivots are positive and entries above a pivot lie in `[0, pivot)`.
fn hnf_in_place(a: &mut [Vec<BigInt>], cols: usize, mut u: Option<&mut [Vec<BigInt>]>) -> usize {
    let n = a.len();
    let mut r = 0;
    for c in 0..cols {
        if r == n {
            break;
        }
        loop {
            // smallest nonzero entry at or below r becomes the pivot candidate
            let mut best: Option<usize> = None;
            for i in r..n {
                if !a[i][c].is_zero() && best.is_none_or(|b| a[i][c].abs() < a[b][c].abs()) {
                    best = Some(i);
                }
            }
            let Some(p) = best else { break };
            if p != r {
                a.swap(p, r);
                if let Some(u) = u.as_deref_mut() {
                    u.swap(p, r);
                }
            }
            let mut done = true;
            for i in r + 1..n {
                if a[i][c].is_zero() {
                    continue;
                }
                let q = a[i][c].div_floor(&a[r][c]);
                let (head, tail) = a.split_at_mut(i);
                sub_scaled_row(&mut tail[0], &head[r], &q);
                if let Some(u) = u.as_deref_mut() {
                    let (head, tail) = u.split_at_mut(i);
                    sub_scaled_row(&mut tail[0], &head[r], &q);
                }
                if !a[i][c].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if a[r][c].is_zero() {
            continue;
        }
        if a[r][c].is_negative() {
            negate_row(&mut a[r]);
            if let Some(u) = u.as_deref_mut() {
                negate_row(&mut u[r]);
            }
        }
        for i in 0..r {
            let q = a[i][c].div_floor(&a[r][c]);
            if q.is_zero() {
                continue;
            }
            let (head, tail) = a.split_at_mut(r);
            sub_scaled_row(&mut head[i], &tail[0], &q);
            if let Some(u) = u.as_deref_mut() {
                let (head, tail) = u.split_at_mut(r);
                sub_scaled_row(&mut head[i], &tail[0], &q);
            }
        }
        r += 1;
    }
    r
}

/// Row-style Hermite normal form: returns `(h, u)` with `u` unimodular and
/// `u * m = h`.
pub fn hnf(m: &IntMatrix) -> (IntMatrix, IntMatrix) {
    let mut a = m.to_rows();
    let mut u = IntMatrix::identity(m.rows).to_rows();
    hnf_in_place(&mut a, m.cols, Some(&mut u));
    (IntMatrix::from_rows(a, m.cols), IntMatrix::from_rows(u, m.rows))
}

/// Nonzero rows of the Hermite normal form of the lattice spanned by `rows`.
/// Two row sets span the same lattice iff these agree.
pub fn lattice_basis(rows: &[Vec<BigInt>], cols: usize) -> Vec<Vec<BigInt>> {
    let mut a = rows.to_vec();
    let r = hnf_in_place(&mut a, cols, None);
    a.truncate(r);
    a
}

pub fn same_lattice(a: &[Vec<BigInt>], b: &[Vec<BigInt>], cols: usize) -> bool {
    lattice_basis(a, cols) == lattice_basis(b, cols)
}

/// Basis of `{ y : y * m = 0 }` (integer left kernel).
pub fn left_kernel(m: &IntMatrix) -> Vec<Vec<BigInt>> {
    let mut a = m.to_rows();
    let mut u = IntMatrix::identity(m.rows).to_rows();
    let r = hnf_in_place(&mut a, m.cols, Some(&mut u));
    u.split_off(r)
}

/// Whether `v` is an integer combination of `rows`.
pub fn in_lattice(rows: &[Vec<BigInt>], v: &[BigInt]) -> bool {
    let cols = v.len();
    let m = IntMatrix::from_rows(rows.to_vec(), cols).transpose();
    solve_linear(&m, v).is_ok()
}

// ---------------------------------------------------------------------------
// Smith normal form

fn swap_cols(m: &mut IntMatrix, a: usize, b: usize) {
    if a == b {
        return;
    }
    for i in 0..m.rows {
        m.data.swap(i * m.cols + a, i * m.cols + b);
    }
}

fn swap_rows(m: &mut IntMatrix, a: usize, b: usize) {
    if a == b {
        return;
    }
    for j in 0..m.cols {
        m.data.swap(a * m.cols + j, b * m.cols + j);
    }
}

/// Smith normal form via alternating row and column Hermite passes. Returns
/// `(s, u, v)` with `u * m * v = s`, `s` diagonal, nonnegative, and the
/// nonzero diagonal entries forming a divisibility chain followed by zeros.
pub fn snf(m: &IntMatrix) -> (IntMatrix, IntMatrix, IntMatrix) {
    let mut s = m.clone();
    let mut u = IntMatrix::identity(m.rows);
    let mut v = IntMatrix::identity(m.cols);
    loop {
        diagonalize(&mut s, &mut u, &mut v);
        let k = s.rows.min(s.cols);
        // zeros to the end
        let mut nz = 0;
        for i in 0..k {
            if !s.get(i, i).is_zero() {
                if i != nz {
                    swap_rows(&mut s, i, nz);
                    swap_rows(&mut u, i, nz);
                    swap_cols(&mut s, i, nz);
                    swap_cols(&mut v, i, nz);
                }
                nz += 1;
            }
        }
        // first divisibility violation, if any
        let violation = (0..nz).find_map(|i| {
            (i + 1..nz).find(|&j| !s.get(j, j).is_multiple_of(s.get(i, i))).map(|j| (i, j))
        });
        match violation {
            None => break,
            Some((i, j)) => {
                // col_i += col_j puts d_j at (j, i); the next Hermite pass
                // pulls gcd(d_i, d_j) onto the diagonal.
                for r in 0..s.rows {
                    let x = s.get(r, j).clone();
                    s.data[r * s.cols + i] += x;
                }
                for r in 0..v.rows {
                    let x = v.get(r, j).clone();
                    v.data[r * v.cols + i] += x;
                }
            }
        }
    }
    (s, u, v)
}

fn diagonalize(s: &mut IntMatrix, u: &mut IntMatrix, v: &mut IntMatrix) {
    loop {
        let (h, u1) = hnf(s);
        *s = h;
        *u = u1.mul(u);
        if s.is_diagonal() {
            break;
        }
        let (h2, v1) = hnf(&s.transpose());
        *s = h2.transpose();
        *v = v.mul(&v1.transpose());
        if s.is_diagonal() {
            break;
        }
    }
}

/// Structure of `Z^cols / rowspan(m)`.
pub fn cokernel_structure(m: &IntMatrix) -> AbelianGroupStructure {
    if m.rows == 0 {
        return AbelianGroupStructure::free(m.cols);
    }
    let (s, _, _) = snf(m);
    let diag: Vec<BigInt> = s.diagonal().into_iter().filter(|d| !d.is_zero()).collect();
    AbelianGroupStructure {
        free_rank: m.cols - diag.len(),
        torsion: diag.into_iter().filter(|d| !d.is_one()).collect(),
    }
}

// ---------------------------------------------------------------------------
// Linear systems

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("system is inconsistent over the rationals")]
    Inconsistent,
    #[error("system has rational solutions but no integral solution")]
    NoIntegralSolution,
    #[error("right-hand side has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearSolution {
    pub particular: Vec<BigInt>,
    /// Basis of the integer kernel `{ k : a * k = 0 }`.
    pub kernel: Vec<Vec<BigInt>>,
}

/// Solves `a * x = b` over the integers.
pub fn solve_linear(a: &IntMatrix, b: &[BigInt]) -> Result<LinearSolution, SolveError> {
    if b.len() != a.rows {
        return Err(SolveError::DimensionMismatch { expected: a.rows, got: b.len() });
    }
    let n = a.cols;
    // u * a^T = h, hence a * u^T = h^T (column echelon form)
    let (h, u) = hnf(&a.transpose());
    let rank = (0..h.rows).take_while(|&k| h.row(k).iter().any(|x| !x.is_zero())).count();
    let pivots: Vec<usize> =
        (0..rank).map(|k| h.row(k).iter().position(|x| !x.is_zero()).unwrap()).collect();

    let mut y: Vec<BigRational> = Vec::with_capacity(rank);
    for (k, &p) in pivots.iter().enumerate() {
        let mut acc = BigRational::from_integer(b[p].clone());
        for (kk, yk) in y.iter().enumerate() {
            acc -= yk * BigRational::from_integer(h.get(kk, p).clone());
        }
        y.push(acc / BigRational::from_integer(h.get(k, p).clone()));
    }
    for i in 0..a.rows {
        let lhs: BigRational =
            y.iter().enumerate().map(|(k, yk)| yk * BigRational::from_integer(h.get(k, i).clone())).sum();
        if lhs != BigRational::from_integer(b[i].clone()) {
            return Err(SolveError::Inconsistent);
        }
    }
    if y.iter().any(|q| !q.is_integer()) {
        return Err(SolveError::NoIntegralSolution);
    }
    let mut x = vec![BigInt::zero(); n];
    for (k, yk) in y.iter().enumerate() {
        let c = yk.to_integer();
        if c.is_zero() {
            continue;
        }
        for (xj, ukj) in x.iter_mut().zip(u.row(k)) {
            *xj += &c * ukj;
        }
    }
    let kernel = (rank..n).map(|k| u.row(k).to_vec()).collect();
    Ok(LinearSolution { particular: x, kernel })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn hnf_of_diagonal_is_unchanged() {
        let m = IntMatrix::from_i64(&[&[2, 0], &[0, 3]]);
        let (h, u) = hnf(&m);
        assert_eq!(h, m);
        assert!(u.is_unimodular());
    }

    #[test]
    fn hnf_column_gcd() {
        let m = IntMatrix::from_i64(&[&[2], &[3]]);
        let (h, u) = hnf(&m);
        assert_eq!(h, IntMatrix::from_i64(&[&[1], &[0]]));
        assert_eq!(u.mul(&m), h);
    }

    #[test]
    fn hnf_reduces_above_pivots() {
        let m = IntMatrix::from_i64(&[&[1, 7], &[0, 3]]);
        let (h, _) = hnf(&m);
        assert_eq!(h, IntMatrix::from_i64(&[&[1, 1], &[0, 3]]));
    }

    #[test]
    fn snf_examples() {
        let (s, u, v) = snf(&IntMatrix::from_i64(&[&[2, 0], &[0, 3]]));
        assert_eq!(s, IntMatrix::from_i64(&[&[1, 0], &[0, 6]]));
        assert!(u.is_unimodular() && v.is_unimodular());

        let z = IntMatrix::zeros(2, 3);
        assert_eq!(snf(&z).0, z);

        let m = IntMatrix::from_i64(&[&[24]]);
        assert_eq!(snf(&m).0, m);
    }

    #[test]
    fn snf_moves_zeros_last() {
        let m = IntMatrix::from_i64(&[&[0, 0], &[0, 4]]);
        let (s, u, v) = snf(&m);
        assert_eq!(s, IntMatrix::from_i64(&[&[4, 0], &[0, 0]]));
        assert_eq!(u.mul(&m).mul(&v), s);
    }

    #[test]
    fn cokernels() {
        assert_eq!(cokernel_structure(&IntMatrix::zeros(0, 5)), AbelianGroupStructure::free(5));
        let m = IntMatrix::from_i64(&[&[24, 0], &[0, 1]]);
        assert_eq!(
            cokernel_structure(&m),
            AbelianGroupStructure { free_rank: 0, torsion: ints(&[24]) }
        );
        // degree-2 piece of Z[l]/(24 l^2): one monomial, one relation
        let m = IntMatrix::from_i64(&[&[24]]);
        assert_eq!(cokernel_structure(&m).to_string(), "Z/24");
    }

    #[test]
    fn solve_identity() {
        let a = IntMatrix::identity(3);
        let b = ints(&[4, -5, 6]);
        let sol = solve_linear(&a, &b).unwrap();
        assert_eq!(sol.particular, b);
        assert!(sol.kernel.is_empty());
    }

    #[test]
    fn solve_distinguishes_failures() {
        let a = IntMatrix::from_i64(&[&[2]]);
        assert_eq!(solve_linear(&a, &ints(&[1])), Err(SolveError::NoIntegralSolution));
        let a = IntMatrix::from_i64(&[&[1, 1], &[2, 2]]);
        assert_eq!(solve_linear(&a, &ints(&[1, 3])), Err(SolveError::Inconsistent));
        assert!(matches!(
            solve_linear(&a, &ints(&[1])),
            Err(SolveError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn solve_with_kernel() {
        let a = IntMatrix::from_i64(&[&[1, 2, 3]]);
        let sol = solve_linear(&a, &ints(&[6])).unwrap();
        assert_eq!(a.mul_vec(&sol.particular), ints(&[6]));
        assert_eq!(sol.kernel.len(), 2);
        for k in &sol.kernel {
            assert_eq!(a.mul_vec(k), ints(&[0]));
        }
    }

    #[test]
    fn determinant_small() {
        assert_eq!(IntMatrix::from_i64(&[&[1, 1, 0], &[1, 0, 1], &[0, 1, 1]]).determinant(), BigInt::from(-2));
        assert_eq!(IntMatrix::from_i64(&[&[0, 1], &[1, 0]]).determinant(), BigInt::from(-1));
        assert_eq!(IntMatrix::from_i64(&[&[2, 4], &[1, 2]]).determinant(), BigInt::from(0));
    }

    #[test]
    fn left_kernel_annihilates() {
        let m = IntMatrix::from_i64(&[&[1, 2], &[2, 4], &[3, 1]]);
        let ker = left_kernel(&m);
        assert_eq!(ker.len(), 1);
        let y = IntMatrix::from_rows(ker, 3);
        assert!(y.mul(&m).is_zero());
    }
}
