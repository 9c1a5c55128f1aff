//! Bit-packed linear algebra over GF(2).
//!
//! Rows are stored as runs of `u64` words; elimination XORs whole words.
//! Matrices here are small (a few dozen columns at most) but are built
//! and reduced hundreds of thousands of times during range scans.

use std::fmt;
use thiserror::Error;

const WORD: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("matrix is {rows}x{cols}, not square")]
    NotSquare { rows: usize, cols: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// A vector over GF(2); storage bits past `len` are always zero.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct F2Vector {
    len: usize,
    words: Vec<u64>,
}

impl F2Vector {
    pub fn zeros(len: usize) -> Self {
        Self { len, words: vec![0; words_for(len)] }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self::zeros(len);
        for i in 0..len {
            v.set(i, true);
        }
        v
    }

    /// Unit vector `e_i`.
    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(i, true);
        v
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let bits: Vec<bool> = bits.into_iter().collect();
        let mut v = Self::zeros(bits.len());
        for (i, b) in bits.into_iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    /// Convenience constructor from 0/1 integers.
    pub fn from_u8(bits: &[u8]) -> Self {
        Self::from_bits(bits.iter().map(|&b| b & 1 == 1))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, b: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % WORD);
        if b {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn xor_assign(&mut self, other: &F2Vector) {
        assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &F2Vector) -> F2Vector {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    pub fn dot(&self, other: &F2Vector) -> bool {
        assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
            & 1
            == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Parity of the sum of all entries.
    pub fn sum(&self) -> bool {
        self.count_ones() % 2 == 1
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Entries at the given indices, in that order.
    pub fn select(&self, idx: &[usize]) -> F2Vector {
        F2Vector::from_bits(idx.iter().map(|&i| self.get(i)))
    }

    pub fn permuted(&self, perm: &[usize]) -> F2Vector {
        self.select(perm)
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

impl fmt::Debug for F2Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for b in self.iter() {
            write!(f, "{}", u8::from(b))?;
        }
        write!(f, ")")
    }
}

/// A dense matrix over GF(2), row-major, each row padded to whole words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct F2Matrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl F2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self { rows, cols, stride, data: vec![0; rows * stride] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn diag(v: &F2Vector) -> Self {
        let mut m = Self::zeros(v.len(), v.len());
        for i in 0..v.len() {
            m.set(i, i, v.get(i));
        }
        m
    }

    /// Builds from 0/1 rows; all rows must have equal length.
    pub fn from_rows(rows: &[&[u8]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged rows");
            for (j, &b) in r.iter().enumerate() {
                m.set(i, j, b & 1 == 1);
            }
        }
        m
    }

    /// Outer product `u v^T`.
    pub fn outer(u: &F2Vector, v: &F2Vector) -> Self {
        let mut m = Self::zeros(u.len(), v.len());
        for i in 0..u.len() {
            if u.get(i) {
                m.set_row(i, v);
            }
        }
        m
    }

    pub fn column(v: &F2Vector) -> Self {
        let mut m = Self::zeros(v.len(), 1);
        for i in 0..v.len() {
            m.set(i, 0, v.get(i));
        }
        m
    }

    pub fn row_vector(v: &F2Vector) -> Self {
        let mut m = Self::zeros(1, v.len());
        m.set_row(0, v);
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    fn row_words(&self, i: usize) -> &[u64] {
        &self.data[i * self.stride..(i + 1) * self.stride]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.rows && j < self.cols);
        (self.data[i * self.stride + j / WORD] >> (j % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, b: bool) {
        debug_assert!(i < self.rows && j < self.cols);
        let w = &mut self.data[i * self.stride + j / WORD];
        let mask = 1u64 << (j % WORD);
        if b {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize, j: usize) {
        self.data[i * self.stride + j / WORD] ^= 1u64 << (j % WORD);
    }

    pub fn row(&self, i: usize) -> F2Vector {
        F2Vector { len: self.cols, words: self.row_words(i).to_vec() }
    }

    pub fn col(&self, j: usize) -> F2Vector {
        F2Vector::from_bits((0..self.rows).map(|i| self.get(i, j)))
    }

    pub fn set_row(&mut self, i: usize, v: &F2Vector) {
        assert_eq!(v.len(), self.cols);
        let s = self.stride;
        self.data[i * s..(i + 1) * s].copy_from_slice(&v.words);
    }

    pub fn transpose(&self) -> F2Matrix {
        let mut t = F2Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) {
                    t.set(j, i, true);
                }
            }
        }
        t
    }

    pub fn add(&self, other: &F2Matrix) -> F2Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a ^= b;
        }
        out
    }

    pub fn mul_vec(&self, v: &F2Vector) -> F2Vector {
        assert_eq!(v.len(), self.cols);
        F2Vector::from_bits((0..self.rows).map(|i| {
            self.row_words(i)
                .iter()
                .zip(v.words())
                .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
                & 1
                == 1
        }))
    }

    pub fn mul(&self, other: &F2Matrix) -> F2Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = F2Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self.get(i, k) {
                    let (s, os) = (out.stride, other.stride);
                    for w in 0..os {
                        out.data[i * s + w] ^= other.data[k * os + w];
                    }
                }
            }
        }
        out
    }

    /// Submatrix on the given row and column index lists.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> F2Matrix {
        let mut m = F2Matrix::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                m.set(a, b, self.get(i, j));
            }
        }
        m
    }

    /// Simultaneous row and column permutation `P M P^T` with `new[i] = old[perm[i]]`.
    pub fn permuted(&self, perm: &[usize]) -> F2Matrix {
        self.submatrix(perm, perm)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    /// Row-reduces a copy in place, returning the pivot columns.
    fn echelon(&self) -> (F2Matrix, Vec<usize>) {
        let mut m = self.clone();
        let s = m.stride;
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let (wi, bit) = (c / WORD, 1u64 << (c % WORD));
            let Some(p) = (r..m.rows).find(|&i| m.data[i * s + wi] & bit != 0) else {
                continue;
            };
            if p != r {
                for w in 0..s {
                    m.data.swap(p * s + w, r * s + w);
                }
            }
            for i in 0..m.rows {
                if i != r && m.data[i * s + wi] & bit != 0 {
                    for w in wi..s {
                        let v = m.data[r * s + w];
                        m.data[i * s + w] ^= v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        // forward elimination only; cheaper than full reduced echelon form
        let mut m = self.clone();
        let s = m.stride;
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let (wi, bit) = (c / WORD, 1u64 << (c % WORD));
            let Some(p) = (r..m.rows).find(|&i| m.data[i * s + wi] & bit != 0) else {
                continue;
            };
            if p != r {
                for w in 0..s {
                    m.data.swap(p * s + w, r * s + w);
                }
            }
            for i in r + 1..m.rows {
                if m.data[i * s + wi] & bit != 0 {
                    for w in wi..s {
                        let v = m.data[r * s + w];
                        m.data[i * s + w] ^= v;
                    }
                }
            }
            r += 1;
        }
        r
    }

    /// Dimension of the right kernel.
    pub fn corank(&self) -> usize {
        self.cols - self.rank()
    }

    pub fn det(&self) -> Result<bool, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare { rows: self.rows, cols: self.cols });
        }
        Ok(self.rank() == self.cols)
    }

    /// Basis of the right kernel `{v : M v = 0}`.
    pub fn kernel_basis(&self) -> Vec<F2Vector> {
        let (m, pivots) = self.echelon();
        let mut is_pivot = vec![false; self.cols];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        let mut basis = Vec::new();
        for free in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v = F2Vector::zeros(self.cols);
            v.set(free, true);
            for (r, &pc) in pivots.iter().enumerate() {
                if m.get(r, free) {
                    v.set(pc, true);
                }
            }
            basis.push(v);
        }
        basis
    }

    /// Inverse when the matrix is square and nonsingular.
    pub fn inverse(&self) -> Option<F2Matrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let aug = block(&[vec![Cell::M(self.clone()), Cell::M(F2Matrix::identity(n))]]).ok()?;
        let (red, pivots) = aug.echelon();
        if pivots.len() < n || pivots[n - 1] >= n {
            return None;
        }
        let right: Vec<usize> = (n..2 * n).collect();
        let all: Vec<usize> = (0..n).collect();
        Some(red.submatrix(&all, &right))
    }
}

impl fmt::Debug for F2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "[")?;
            for j in 0..self.cols {
                write!(f, "{}", u8::from(self.get(i, j)))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// One cell of a block layout.
#[derive(Debug, Clone)]
pub enum Cell {
    /// A full matrix block.
    M(F2Matrix),
    /// A column vector (`len x 1`).
    Col(F2Vector),
    /// A row vector (`1 x len`).
    Row(F2Vector),
    /// A `1 x 1` entry.
    Bit(bool),
    /// Zero block whose shape is taken from its block row and column.
    Zero,
}

impl Cell {
    fn shape(&self) -> Option<(usize, usize)> {
        match self {
            Cell::M(m) => Some((m.rows(), m.cols())),
            Cell::Col(v) => Some((v.len(), 1)),
            Cell::Row(v) => Some((1, v.len())),
            Cell::Bit(_) => Some((1, 1)),
            Cell::Zero => None,
        }
    }
}

/// Assembles a block matrix. Block row heights and column widths are read
/// off the non-`Zero` cells and must agree.
pub fn block(layout: &[Vec<Cell>]) -> Result<F2Matrix, LinalgError> {
    let nbr = layout.len();
    let nbc = layout.first().map_or(0, |r| r.len());
    if layout.iter().any(|r| r.len() != nbc) {
        return Err(LinalgError::ShapeMismatch("ragged block grid".into()));
    }
    let mut heights: Vec<Option<usize>> = vec![None; nbr];
    let mut widths: Vec<Option<usize>> = vec![None; nbc];
    for (bi, row) in layout.iter().enumerate() {
        for (bj, cell) in row.iter().enumerate() {
            if let Some((h, w)) = cell.shape() {
                for (slot, val, what, idx) in
                    [(&mut heights[bi], h, "row", bi), (&mut widths[bj], w, "column", bj)]
                {
                    match *slot {
                        Some(prev) if prev != val => {
                            return Err(LinalgError::ShapeMismatch(format!(
                                "block {what} {idx}: {prev} vs {val}"
                            )))
                        }
                        _ => *slot = Some(val),
                    }
                }
            }
        }
    }
    let heights: Vec<usize> = heights
        .into_iter()
        .enumerate()
        .map(|(i, h)| h.ok_or_else(|| LinalgError::ShapeMismatch(format!("block row {i} undetermined"))))
        .collect::<Result<_, _>>()?;
    let widths: Vec<usize> = widths
        .into_iter()
        .enumerate()
        .map(|(j, w)| w.ok_or_else(|| LinalgError::ShapeMismatch(format!("block column {j} undetermined"))))
        .collect::<Result<_, _>>()?;
    let mut out = F2Matrix::zeros(heights.iter().sum(), widths.iter().sum());
    let mut r0 = 0;
    for (bi, row) in layout.iter().enumerate() {
        let mut c0 = 0;
        for (bj, cell) in row.iter().enumerate() {
            match cell {
                Cell::M(m) => {
                    for i in 0..m.rows() {
                        for j in 0..m.cols() {
                            if m.get(i, j) {
                                out.set(r0 + i, c0 + j, true);
                            }
                        }
                    }
                }
                Cell::Col(v) => {
                    for i in 0..v.len() {
                        out.set(r0 + i, c0, v.get(i));
                    }
                }
                Cell::Row(v) => {
                    for j in 0..v.len() {
                        out.set(r0, c0 + j, v.get(j));
                    }
                }
                Cell::Bit(b) => out.set(r0, c0, *b),
                Cell::Zero => {}
            }
            c0 += widths[bj];
        }
        r0 += heights[bi];
    }
    Ok(out)
}

/// Determinant by cofactor expansion along the first row; exponential, test use only.
pub fn det_laplace(m: &F2Matrix) -> bool {
    assert_eq!(m.rows(), m.cols());
    let n = m.rows();
    if n == 0 {
        return true;
    }
    let rows: Vec<usize> = (1..n).collect();
    let mut acc = false;
    for j in 0..n {
        if m.get(0, j) {
            let cols: Vec<usize> = (0..n).filter(|&c| c != j).collect();
            acc ^= det_laplace(&m.submatrix(&rows, &cols));
        }
    }
    acc
}
