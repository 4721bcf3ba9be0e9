use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};

/// Compressed sparse row matrix with complex entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<Cplx<T>>,
}

impl<T: Real> CsrMatrix<T> {
    pub fn from_parts(n: usize, row_ptr: Vec<usize>, col: Vec<usize>, val: Vec<Cplx<T>>) -> Result<Self> {
        if row_ptr.len() != n + 1 || col.len() != val.len() || row_ptr.last() != Some(&col.len()) {
            return Err(Error::Shape("inconsistent CSR arrays".into()));
        }
        if row_ptr.windows(2).any(|w| w[0] > w[1]) || col.iter().any(|&c| c >= n) {
            return Err(Error::Shape("CSR row pointers or column indices out of range".into()));
        }
        Ok(Self { n, row_ptr, col, val })
    }

    /// Builds from unsorted triplets, summing duplicates.
    pub fn from_triplets(n: usize, mut entries: Vec<(usize, usize, Cplx<T>)>) -> Self {
        entries.sort_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col = Vec::with_capacity(entries.len());
        let mut val: Vec<Cplx<T>> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *val.last_mut().unwrap() += v;
                continue;
            }
            row_ptr[r + 1] += 1;
            col.push(c);
            val.push(v);
            last = Some((r, c));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, col, val }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col(&self) -> &[usize] {
        &self.col
    }

    pub fn values(&self) -> &[Cplx<T>] {
        &self.val
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Cplx<T>)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col[r.clone()].iter().copied().zip(self.val[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> Cplx<T> {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col[r.clone()].binary_search(&j) {
            Ok(k) => self.val[r.start + k],
            Err(_) => Cplx::new(T::zero(), T::zero()),
        }
    }

    pub fn diagonal(&self) -> Vec<Cplx<T>> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`, rows in parallel.
    pub fn matvec(&self, x: &[Cplx<T>], y: &mut [Cplx<T>]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        y.par_iter_mut().with_min_len(1024).enumerate().for_each(|(i, yi)| {
            let mut acc = Cplx::new(T::zero(), T::zero());
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.val[k] * x[self.col[k]];
            }
            *yi = acc;
        });
    }

    pub fn apply(&self, x: &[Cplx<T>]) -> Vec<Cplx<T>> {
        let mut y = vec![Cplx::new(T::zero(), T::zero()); self.n];
        self.matvec(x, &mut y);
        y
    }

    /// Entrywise `A == A^*` with no tolerance.
    pub fn is_hermitian(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v.conj()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_and_products() {
        let c = |re: f64, im: f64| Cplx::new(re, im);
        let m = CsrMatrix::from_triplets(
            3,
            vec![(0, 0, c(2.0, 0.0)), (1, 0, c(1.0, -1.0)), (0, 1, c(1.0, 1.0)), (2, 2, c(3.0, 0.0)), (0, 0, c(1.0, 0.0))],
        );
        assert_eq!(m.nnz(), 4);
        assert_eq!(m.get(0, 0), c(3.0, 0.0));
        assert!(m.is_hermitian());
        let y = m.apply(&[c(1.0, 0.0), c(0.0, 1.0), c(1.0, 0.0)]);
        assert_eq!(y[0], c(3.0, 0.0) + c(1.0, 1.0) * c(0.0, 1.0));
        assert_eq!(y[2], c(3.0, 0.0));
        let bad = CsrMatrix::from_triplets(2, vec![(0, 1, c(1.0, 1.0)), (1, 0, c(1.0, 1.0))]);
        assert!(!bad.is_hermitian());
        assert!(CsrMatrix::<f64>::from_parts(2, vec![0, 1], vec![0], vec![c(1.0, 0.0)]).is_err());
    }
}
