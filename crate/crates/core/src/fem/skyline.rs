//! Direct solver for sparse symmetric positive definite systems: reverse
//! Cuthill-McKee ordering followed by a profile (skyline) LDL^T
//! factorization.  All systems in this crate (mass matrices, shifted
//! stiffness K - sigma*M with sigma < 0, resolvent operators K + M) are
//! positive definite, so no pivoting is needed.

use super::sparse::CsrMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FactorError {
    #[error("matrix is not positive definite: pivot {value:.3e} at index {index}")]
    NotPositiveDefinite { index: usize, value: f64 },
    #[error("matrix must be square")]
    NotSquare,
}

/// Reverse Cuthill-McKee permutation of a symmetric sparsity pattern.
/// Returns `perm` with `perm[new] = old`.  Tie-breaking is by vertex index,
/// so the ordering is deterministic.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    loop {
        // lowest-degree unvisited vertex starts the next component
        let start = match (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
        {
            Some(s) => s,
            None => break,
        };
        visited[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = a.row(v).0.iter().map(|&c| c as usize).collect();
            nbrs.sort_unstable_by_key(|&w| (degree[w], w));
            for w in nbrs {
                if w != v && !visited[w] {
                    visited[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order.reverse();
    order
}

/// LDL^T factorization in skyline (variable band) storage under an RCM
/// permutation.
pub struct SkylineFactor {
    n: usize,
    perm: Vec<usize>,  // perm[new] = old
    start: Vec<usize>, // first stored column of each row
    ptr: Vec<usize>,   // offset of each row in `data`
    data: Vec<f64>,    // unit-lower rows, excluding the diagonal
    diag: Vec<f64>,    // D
}

impl SkylineFactor {
    /// Factors the SPD matrix `a`.
    pub fn new(a: &CsrMatrix) -> Result<Self, FactorError> {
        if a.nrows() != a.ncols() {
            return Err(FactorError::NotSquare);
        }
        let n = a.nrows();
        let perm = reverse_cuthill_mckee(a);
        let mut inv_perm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv_perm[old] = new;
        }

        // profile: start[i] = min over the permuted row of the column index
        let mut start = vec![0usize; n];
        for (i, s) in start.iter_mut().enumerate() {
            let old = perm[i];
            let mut lo = i;
            for &c in a.row(old).0 {
                let j = inv_perm[c as usize];
                if j < lo {
                    lo = j;
                }
            }
            *s = lo;
        }
        let mut ptr = vec![0usize; n + 1];
        for i in 0..n {
            ptr[i + 1] = ptr[i] + (i - start[i]);
        }
        let mut data = vec![0.0; ptr[n]];
        let mut diag = vec![0.0; n];

        // scatter A into the profile
        for i in 0..n {
            let old = perm[i];
            let (cols, vals) = a.row(old);
            for (&c, &v) in cols.iter().zip(vals) {
                let j = inv_perm[c as usize];
                if j == i {
                    diag[i] += v;
                } else if j < i {
                    data[ptr[i] + (j - start[i])] += v;
                }
            }
        }

        // row-oriented LDL^T on the profile
        for i in 0..n {
            let si = start[i];
            for j in si..i {
                // data row i holds L[i][start_i..i]
                let sj = start[j];
                let lo = si.max(sj);
                let mut sum = data[ptr[i] + (j - si)];
                let row_i = ptr[i] + (lo - si);
                let row_j = ptr[j] + (lo - sj);
                for k in 0..(j - lo) {
                    sum -= data[row_i + k] * data[row_j + k] * diag[lo + k];
                }
                data[ptr[i] + (j - si)] = sum / diag[j];
            }
            let mut d = diag[i];
            for j in si..i {
                let l = data[ptr[i] + (j - si)];
                d -= l * l * diag[j];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(FactorError::NotPositiveDefinite { index: i, value: d });
            }
            diag[i] = d;
        }

        Ok(Self {
            n,
            perm,
            start,
            ptr,
            data,
            diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut y: Vec<f64> = (0..self.n).map(|i| b[self.perm[i]]).collect();
        // forward: L y' = y
        for i in 0..self.n {
            let si = self.start[i];
            let mut sum = y[i];
            let row = self.ptr[i];
            for j in si..i {
                sum -= self.data[row + (j - si)] * y[j];
            }
            y[i] = sum;
        }
        // diagonal
        for i in 0..self.n {
            y[i] /= self.diag[i];
        }
        // backward: L^T x = y
        for i in (0..self.n).rev() {
            let si = self.start[i];
            let row = self.ptr[i];
            let yi = y[i];
            for j in si..i {
                y[j] -= self.data[row + (j - si)] * yi;
            }
        }
        let mut x = vec![0.0; self.n];
        for i in 0..self.n {
            x[self.perm[i]] = y[i];
        }
        x
    }
}
