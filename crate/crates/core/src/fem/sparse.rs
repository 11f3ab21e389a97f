//! Compressed sparse row storage and Jacobi-preconditioned conjugate gradients.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds an `n × n` matrix from triplets, summing duplicates. Entries are
    /// summed in triplet order, so the result is deterministic.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(i, _, _) in triplets {
            counts[i + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut order = vec![0usize; triplets.len()];
        let mut fill = counts.clone();
        for (k, &(i, _, _)) in triplets.iter().enumerate() {
            order[fill[i]] = k;
            fill[i] += 1;
        }

        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for i in 0..n {
            row.clear();
            row.extend(
                order[counts[i]..counts[i + 1]]
                    .iter()
                    .map(|&k| (triplets[k].1, triplets[k].2)),
            );
            // stable sort keeps summation order within a column
            row.sort_by_key(|&(j, _)| j);
            let mut iter = row.iter().peekable();
            while let Some(&(j, v)) = iter.next() {
                let mut sum = v;
                while let Some(&&(j2, v2)) = iter.peek() {
                    if j2 != j {
                        break;
                    }
                    sum += v2;
                    iter.next();
                }
                col_idx.push(j);
                values.push(sum);
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// Largest |a_ij - a_ji| over stored entries.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Restriction to the rows and columns where `keep[i]` holds, renumbered
    /// consecutively.
    pub fn submatrix(&self, keep: &[bool]) -> (CsrMatrix, Vec<usize>) {
        let mut new_index = vec![usize::MAX; self.n];
        let mut kept = Vec::new();
        for (i, &k) in keep.iter().enumerate() {
            if k {
                new_index[i] = kept.len();
                kept.push(i);
            }
        }
        let mut row_ptr = Vec::with_capacity(kept.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for &i in &kept {
            for (j, v) in self.row(i) {
                if keep[j] {
                    col_idx.push(new_index[j]);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        (
            CsrMatrix {
                n: kept.len(),
                row_ptr,
                col_idx,
                values,
            },
            kept,
        )
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy)]
pub struct CgReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves `A x = b` for SPD `A` with Jacobi-preconditioned CG, starting from
/// `x`. Stops once `‖b − A x‖ ≤ rel_tol ‖b‖`; fails after `10 n` iterations.
pub fn pcg(a: &CsrMatrix, b: &[f64], x: &mut [f64], rel_tol: f64) -> Result<CgReport> {
    let n = a.dim();
    assert_eq!(b.len(), n);
    assert_eq!(x.len(), n);
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgReport {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut r = a.mul_vec(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let max_iter = 10 * n.max(1);
    let mut res = dot(&r, &r).sqrt() / b_norm;
    let mut it = 0;
    while !(res <= rel_tol) {
        if it == max_iter || !res.is_finite() {
            return Err(Error::Solver {
                iterations: it,
                relative_residual: res,
            });
        }
        a.mul_vec_into(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = dot(&r, &r).sqrt() / b_norm;
        it += 1;
    }
    Ok(CgReport {
        iterations: it,
        relative_residual: res,
    })
}
