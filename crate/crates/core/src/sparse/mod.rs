//! Compressed-row sparse matrices and the row kernel every algorithm shares.
//!
//! Rows are stored in canonical form (strictly ascending column indices) and
//! every SpMV accumulates a row in stored order. All distributed kernels go
//! through [`row_dot`], so results are bitwise identical regardless of how
//! rows are distributed or scheduled.

mod generate;
mod mtx;

pub use generate::{anderson_disorder, gen_anderson, gen_irregular, gen_stencil, AndersonMatrix, AndersonParams, StencilKind};
pub use mtx::{read_disorder, read_matrix_market, write_disorder, write_matrix_market};

use serde::Serialize;

use crate::error::{invalid, MpkError, Result};
use crate::scalar::Scalar;

/// Largest nonzero count representable with 32-bit offsets.
pub const MAX_NNZ: usize = i32::MAX as usize;

#[derive(Debug, Clone, PartialEq)]
pub struct CrsMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<u32>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
}

/// Accumulates one row against `x` in stored column order.
#[inline(always)]
pub fn row_dot<S: Scalar>(cols: &[u32], vals: &[f64], x: &[S]) -> S {
    let mut sum = S::zero();
    for (&c, &v) in cols.iter().zip(vals) {
        sum = sum + x[c as usize] * v;
    }
    sum
}

impl CrsMatrix {
    /// Builds a matrix from raw CRS arrays, checking every invariant.
    pub fn from_raw(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<u32>,
        col_idx: Vec<u32>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let m = CrsMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        };
        m.validate()?;
        Ok(m)
    }

    /// Assembles from (row, col, value) triplets. Duplicates are summed and
    /// rows come out sorted.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        if n_cols > u32::MAX as usize {
            return invalid(format!("{n_cols} columns exceed 32-bit indexing"));
        }
        let mut entries: Vec<(usize, u32, f64)> = Vec::new();
        for (r, c, v) in triplets {
            if r >= n_rows || c >= n_cols {
                return invalid(format!(
                    "entry ({r}, {c}) outside a {n_rows}x{n_cols} matrix"
                ));
            }
            entries.push((r, c as u32, v));
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_ptr = vec![0u32; n_rows + 1];
        let mut col_idx: Vec<u32> = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, u32)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            col_idx.push(c);
            values.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        if col_idx.len() > MAX_NNZ {
            return invalid(format!(
                "{} nonzeros exceed the 32-bit index limit",
                col_idx.len()
            ));
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self::from_raw(n_rows, n_cols, row_ptr, col_idx, values)
    }

    pub fn identity(n: usize) -> Self {
        CrsMatrix {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n as u32).collect(),
            col_idx: (0..n as u32).collect(),
            values: vec![1.0; n],
        }
    }

    /// Checks the CRS invariants: offsets monotone and complete, columns in
    /// range and strictly ascending within each row.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(MpkError::InvalidArgument(msg));
        if self.row_ptr.len() != self.n_rows + 1 {
            return bad(format!(
                "row_ptr has length {}, expected {}",
                self.row_ptr.len(),
                self.n_rows + 1
            ));
        }
        if self.row_ptr[0] != 0 {
            return bad("row_ptr[0] must be 0".into());
        }
        if self.col_idx.len() != self.values.len() {
            return bad("col_idx and values differ in length".into());
        }
        if self.row_ptr[self.n_rows] as usize != self.col_idx.len() {
            return bad("row_ptr[n_rows] must equal the number of nonzeros".into());
        }
        if self.col_idx.len() > MAX_NNZ {
            return bad("nonzero count exceeds the 32-bit index limit".into());
        }
        for r in 0..self.n_rows {
            let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
            if hi < lo {
                return bad(format!("row_ptr decreases at row {r}"));
            }
            let cols = &self.col_idx[lo as usize..hi as usize];
            for (k, &c) in cols.iter().enumerate() {
                if c as usize >= self.n_cols {
                    return bad(format!("column {c} out of range in row {r}"));
                }
                if k > 0 && cols[k - 1] >= c {
                    return bad(format!("columns not strictly ascending in row {r}"));
                }
            }
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[u32] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[u32] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let lo = self.row_ptr[r] as usize;
        let hi = self.row_ptr[r + 1] as usize;
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        (self.row_ptr[r + 1] - self.row_ptr[r]) as usize
    }

    /// Value at (r, c), or `None` when the entry is not stored.
    pub fn get(&self, r: usize, c: usize) -> Option<f64> {
        let (cols, vals) = self.row(r);
        cols.binary_search(&(c as u32)).ok().map(|k| vals[k])
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    /// Exact structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.n_rows).all(|r| {
                let (cols, vals) = self.row(r);
                cols.iter()
                    .zip(vals)
                    .all(|(&c, &v)| self.get(c as usize, r) == Some(v))
            })
    }

    /// Maximum |r - c| over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n_rows)
            .flat_map(|r| self.row(r).0.iter().map(move |&c| r.abs_diff(c as usize)))
            .max()
            .unwrap_or(0)
    }

    /// Symmetric permutation `P A Pᵀ`, where `new_to_old[i]` is the original
    /// index placed at position `i`. Rows of the result are re-sorted.
    pub fn permute_symmetric(&self, new_to_old: &[usize]) -> Result<Self> {
        if !self.is_square() || new_to_old.len() != self.n_rows {
            return invalid("symmetric permutation needs a square matrix and a full permutation");
        }
        let mut old_to_new = vec![usize::MAX; self.n_rows];
        for (new, &old) in new_to_old.iter().enumerate() {
            if old >= self.n_rows || old_to_new[old] != usize::MAX {
                return invalid("not a permutation");
            }
            old_to_new[old] = new;
        }
        let mut row_ptr = Vec::with_capacity(self.n_rows + 1);
        let mut col_idx = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        row_ptr.push(0u32);
        let mut buf: Vec<(u32, f64)> = Vec::new();
        for &old in new_to_old {
            let (cols, vals) = self.row(old);
            buf.clear();
            buf.extend(
                cols.iter()
                    .zip(vals)
                    .map(|(&c, &v)| (old_to_new[c as usize] as u32, v)),
            );
            buf.sort_unstable_by_key(|e| e.0);
            for &(c, v) in &buf {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len() as u32);
        }
        Ok(CrsMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Row-major dense copy. Only meant for small oracles.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (r, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c as usize] = v;
            }
        }
        d
    }
}

/// `y = A x`. Rows accumulate in ascending column order.
pub fn spmv<S: Scalar>(a: &CrsMatrix, x: &[S], y: &mut [S]) -> Result<()> {
    if x.len() < a.n_cols || y.len() < a.n_rows {
        return invalid(format!(
            "spmv on {}x{} needs |x| >= {} and |y| >= {}, got {} and {}",
            a.n_rows,
            a.n_cols,
            a.n_cols,
            a.n_rows,
            x.len(),
            y.len()
        ));
    }
    for (r, out) in y.iter_mut().take(a.n_rows).enumerate() {
        let (cols, vals) = a.row(r);
        *out = row_dot(cols, vals, x);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatrixStats {
    pub n_rows: usize,
    pub n_nz: usize,
    pub nnzr: f64,
    pub crs_bytes: u64,
    pub crs_mib: f64,
}

impl MatrixStats {
    /// Stats from counts alone: CRS size is `4 N_r + 12 N_nz` bytes.
    pub fn from_counts(n_rows: usize, n_nz: usize) -> Self {
        let crs_bytes = 4 * n_rows as u64 + 12 * n_nz as u64;
        MatrixStats {
            n_rows,
            n_nz,
            nnzr: if n_rows == 0 {
                0.0
            } else {
                n_nz as f64 / n_rows as f64
            },
            crs_bytes,
            crs_mib: crs_bytes as f64 / (1u64 << 20) as f64,
        }
    }
}

pub fn matrix_stats(a: &CrsMatrix) -> MatrixStats {
    MatrixStats::from_counts(a.n_rows, a.nnz())
}
