//! Envelope (skyline) LDLᵀ factorization under reverse Cuthill–McKee
//! ordering.
//!
//! Used for the shift-invert solves of the eigensolver and for Sylvester
//! inertia counts. No pivoting: the factorization of an indefinite shifted
//! matrix is only used for its pivot signs.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub struct EnvelopeLdl {
    n: usize,
    /// new index -> original index
    perm: Vec<usize>,
    /// original index -> new index
    inv: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
    /// strictly lower envelope of L, row-major by permuted row
    lower: Vec<f64>,
    d: Vec<f64>,
}

impl EnvelopeLdl {
    /// Factor `A + diag(shift_diag)`.
    pub fn factor(a: &CsrMatrix, shift_diag: &[f64]) -> Result<Self> {
        let perm = rcm_order(a);
        Self::factor_with_order(a, shift_diag, perm)
    }

    pub fn factor_with_order(a: &CsrMatrix, shift_diag: &[f64], perm: Vec<usize>) -> Result<Self> {
        let n = a.n();
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first = vec![0usize; n];
        for p in 0..n {
            let (cols, _) = a.row(perm[p]);
            first[p] = cols.iter().map(|&c| inv[c]).filter(|&c| c <= p).min().unwrap_or(p);
        }
        let mut offset = vec![0usize; n + 1];
        for p in 0..n {
            offset[p + 1] = offset[p] + (p - first[p]);
        }
        let mut lower = vec![0.0; offset[n]];
        let mut d = vec![0.0; n];

        for i in 0..n {
            let fi = first[i];
            let (cols, vals) = a.row(perm[i]);
            let mut diag = shift_diag[perm[i]];
            {
                let row = &mut lower[offset[i]..offset[i + 1]];
                for (&c, &v) in cols.iter().zip(vals) {
                    let j = inv[c];
                    if j < i {
                        row[j - fi] += v;
                    } else if j == i {
                        diag += v;
                    }
                }
            }
            // row holds w_k = l_ik d_k while j advances
            for j in fi..i {
                let fj = first[j];
                let start = fi.max(fj);
                let (before, rest) = lower.split_at_mut(offset[i]);
                let row = &mut rest[..i - fi];
                let rowj = &before[offset[j]..offset[j + 1]];
                let mut s = row[j - fi];
                for k in start..j {
                    s -= row[k - fi] * rowj[k - fj];
                }
                row[j - fi] = s;
            }
            let row = &mut lower[offset[i]..offset[i + 1]];
            for (k, w) in (fi..i).zip(row.iter_mut()) {
                let l = *w / d[k];
                diag -= *w * l;
                *w = l;
            }
            if diag == 0.0 || !diag.is_finite() {
                return Err(Error::Numerical(alloc::format!("zero or non-finite pivot at row {i}")));
            }
            d[i] = diag;
        }
        Ok(Self {
            n,
            perm,
            inv,
            first,
            offset,
            lower,
            d,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored envelope entries.
    pub fn envelope_size(&self) -> usize {
        self.lower.len()
    }

    /// Number of negative pivots, i.e. negative eigenvalues of the
    /// factored matrix (Sylvester's law of inertia).
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|&&v| v < 0.0).count()
    }

    /// Solve in place.
    pub fn solve(&self, b: &mut [f64], work: &mut Vec<f64>) {
        let n = self.n;
        work.clear();
        work.extend(self.perm.iter().map(|&o| b[o]));
        let x = work.as_mut_slice();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.lower[self.offset[i]..self.offset[i + 1]];
            let mut s = x[i];
            for (k, l) in (fi..i).zip(row) {
                s -= l * x[k];
            }
            x[i] = s;
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let xi = x[i];
            let row = &self.lower[self.offset[i]..self.offset[i + 1]];
            for (k, l) in (fi..i).zip(row) {
                x[k] -= l * xi;
            }
        }
        for (o, bi) in b.iter_mut().enumerate() {
            *bi = x[self.inv[o]];
        }
    }
}

/// Reverse Cuthill–McKee ordering of the sparsity graph, one
/// pseudo-peripheral start per connected component.
pub fn rcm_order(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.iter().filter(|&&c| c != i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut level = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    let mut nbrs: Vec<usize> = Vec::new();

    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral node: repeat BFS from the farthest min-degree node
        let mut start = seed;
        let mut ecc = 0;
        for _ in 0..8 {
            let (far, depth) = farthest(a, start, &degree, &mut level, &mut queue);
            if depth <= ecc {
                break;
            }
            ecc = depth;
            start = far;
        }
        visited[start] = true;
        queue.clear();
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            nbrs.clear();
            nbrs.extend(a.row(v).0.iter().copied().filter(|&c| c != v && !visited[c]));
            nbrs.sort_by_key(|&c| (degree[c], c));
            for &c in &nbrs {
                visited[c] = true;
                queue.push_back(c);
            }
        }
    }
    order.reverse();
    order
}

fn farthest(
    a: &CsrMatrix,
    start: usize,
    degree: &[usize],
    level: &mut [usize],
    queue: &mut VecDeque<usize>,
) -> (usize, usize) {
    let mut touched = Vec::new();
    queue.clear();
    level[start] = 0;
    touched.push(start);
    queue.push_back(start);
    let mut best = (start, 0usize);
    while let Some(v) = queue.pop_front() {
        let lv = level[v];
        if lv > best.1 || (lv == best.1 && degree[v] < degree[best.0]) {
            best = (v, lv);
        }
        for &c in a.row(v).0 {
            if level[c] == usize::MAX {
                level[c] = lv + 1;
                touched.push(c);
                queue.push_back(c);
            }
        }
    }
    for t in touched {
        level[t] = usize::MAX;
    }
    best
}
