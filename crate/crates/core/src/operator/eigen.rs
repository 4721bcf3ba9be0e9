use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rand::Rng;
use serde::Serialize;

use super::assemble::DiscreteOperator;
use super::csr::CsrMatrix;
use super::dense::hermitian_eigen;
use crate::error::{Error, Result};
use crate::scalar::{axpy, dot, lit, norm2, to_f64, Cplx, Real};

/// Default seed of the Krylov start vector.
pub const DEFAULT_SEED: u64 = 0x6d67_7731;

#[derive(Debug, Clone)]
pub struct SolverOptions<T> {
    /// Relative residual `|Hv - lambda v| / lambda` required of every pair.
    pub tol: T,
    pub seed: u64,
    /// Krylov basis size; default `max(2m + 16, 24)`.
    pub krylov_dim: Option<usize>,
    pub max_restarts: usize,
    /// Relative residual of the inner conjugate-gradient solves.
    pub cg_tol: T,
    pub cg_max_iter: usize,
    /// Start vector (in the weighted picture) replacing the random one.
    pub start: Option<Vec<Cplx<T>>>,
    /// Return unconverged pairs instead of a convergence error.
    pub allow_unconverged: bool,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            tol: lit::<T>(1e-8).max(T::epsilon() * lit(1e4)),
            seed: DEFAULT_SEED,
            krylov_dim: None,
            max_restarts: 300,
            cg_tol: lit::<T>(1e-11).max(T::epsilon() * lit(100.0)),
            cg_max_iter: 50_000,
            start: None,
            allow_unconverged: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenResult<T> {
    pub h: T,
    pub eigenvalues: Vec<T>,
    /// Eigenvectors in the weighted picture, unit norm.
    #[serde(skip)]
    pub vectors: Vec<Vec<Cplx<T>>>,
    pub residuals: Vec<T>,
    pub converged: bool,
    /// Krylov steps (shift-invert applications).
    pub iterations: usize,
    /// Total inner conjugate-gradient iterations.
    pub inner_iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    pub seconds: f64,
}

/// Preconditioned conjugate gradients for `A x = b`, Jacobi preconditioner.
pub struct Pcg<'a, T> {
    matrix: &'a CsrMatrix<T>,
    inv_diag: Vec<T>,
    tol: T,
    max_iter: usize,
}

impl<'a, T: Real> Pcg<'a, T> {
    pub fn new(matrix: &'a CsrMatrix<T>, tol: T, max_iter: usize) -> Self {
        let inv_diag = matrix
            .diagonal()
            .iter()
            .map(|d| if d.re > T::zero() { T::one() / d.re } else { T::one() })
            .collect();
        Self {
            matrix,
            inv_diag,
            tol,
            max_iter,
        }
    }

    /// Returns the solution and the iteration count.
    pub fn solve(&self, b: &[Cplx<T>]) -> Result<(Vec<Cplx<T>>, usize)> {
        let n = b.len();
        let zero = Cplx::new(T::zero(), T::zero());
        let bnorm = norm2(b);
        let mut x = vec![zero; n];
        if bnorm == T::zero() {
            return Ok((x, 0));
        }
        let mut r = b.to_vec();
        let mut z: Vec<Cplx<T>> = r.iter().zip(&self.inv_diag).map(|(v, d)| *v * *d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z).re;
        let mut ap = vec![zero; n];
        let target = self.tol * bnorm;
        let mut best = T::infinity();
        let mut since_best = 0usize;
        for it in 1..=self.max_iter {
            self.matrix.matvec(&p, &mut ap);
            let pap = dot(&p, &ap).re;
            if !(pap > T::zero()) {
                return Err(Error::Convergence(format!(
                    "conjugate gradients: non-positive curvature {pap} at iteration {it}"
                )));
            }
            let alpha = rz / pap;
            axpy(Cplx::new(alpha, T::zero()), &p, &mut x);
            axpy(Cplx::new(-alpha, T::zero()), &ap, &mut r);
            let rn = norm2(&r);
            if rn <= target {
                return Ok((x, it));
            }
            if rn < best * lit(0.999) {
                best = rn;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best > 2000 {
                    return Err(Error::Convergence(format!(
                        "conjugate gradients stagnated at relative residual {} after {it} iterations",
                        to_f64(rn / bnorm)
                    )));
                }
            }
            for ((zi, ri), d) in z.iter_mut().zip(&r).zip(&self.inv_diag) {
                *zi = *ri * *d;
            }
            let rz_new = dot(&r, &z).re;
            let beta = rz_new / rz;
            rz = rz_new;
            for (pi, zi) in p.iter_mut().zip(&z) {
                *pi = *zi + *pi * beta;
            }
        }
        Err(Error::Convergence(format!(
            "conjugate gradients reached {} iterations at relative residual {}",
            self.max_iter,
            to_f64(norm2(&r) / bnorm)
        )))
    }
}

fn random_vector<T: Real>(n: usize, rng: &mut ChaCha8Rng) -> Vec<Cplx<T>> {
    (0..n)
        .map(|_| Cplx::new(lit(rng.sample::<f64, _>(StandardNormal)), lit(rng.sample::<f64, _>(StandardNormal))))
        .collect()
}

/// Orthogonalizes `x` against `basis` (two passes); returns the norm left.
fn orthogonalize<T: Real>(basis: &[Vec<Cplx<T>>], x: &mut [Cplx<T>]) -> T {
    for _ in 0..2 {
        for v in basis {
            let c = dot(v, x);
            axpy(-c, v, x);
        }
    }
    norm2(x)
}

fn combine<T: Real>(basis: &[Vec<Cplx<T>>], coef: &[Cplx<T>]) -> Vec<Cplx<T>> {
    let mut out = vec![Cplx::new(T::zero(), T::zero()); basis[0].len()];
    for (v, c) in basis.iter().zip(coef) {
        axpy(*c, v, &mut out);
    }
    out
}

/// `m` smallest eigenpairs of a positive definite operator by thick-restart
/// Lanczos on `H^{-1}` with full reorthogonalization.
pub fn lowest_eigenpairs<T: Real>(op: &DiscreteOperator<T>, m: usize, opts: &SolverOptions<T>) -> Result<EigenResult<T>> {
    let mut result = lowest_eigenpairs_of(&op.matrix, m, opts)?;
    result.h = op.h;
    Ok(result)
}

pub fn lowest_eigenpairs_of<T: Real>(matrix: &CsrMatrix<T>, m: usize, opts: &SolverOptions<T>) -> Result<EigenResult<T>> {
    let clock = Instant::now();
    let n = matrix.dim();
    if m > n {
        return Err(Error::RequestTooLarge { requested: m, dimension: n });
    }
    let mut result = EigenResult {
        h: T::nan(),
        eigenvalues: vec![],
        vectors: vec![],
        residuals: vec![],
        converged: true,
        iterations: 0,
        inner_iterations: 0,
        restarts: 0,
        seed: opts.seed,
        seconds: 0.0,
    };
    if m == 0 {
        return Ok(result);
    }
    let p = opts.krylov_dim.unwrap_or((2 * m + 16).max(24)).max(m + 2).min(n);
    let keep = (m + (p - m) / 2).min(p - 1).max(m);
    let pcg = Pcg::new(matrix, opts.cg_tol, opts.cg_max_iter);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut next = match &opts.start {
        Some(s) if s.len() == n => s.clone(),
        Some(s) => {
            return Err(Error::Shape(format!("start vector of length {} for dimension {n}", s.len())));
        }
        None => random_vector(n, &mut rng),
    };
    let mut basis: Vec<Vec<Cplx<T>>> = Vec::with_capacity(p + 1);
    let mut images: Vec<Vec<Cplx<T>>> = Vec::with_capacity(p + 1);
    let small = T::epsilon().sqrt();

    let first_check = (2 * m + 8).min(p);
    loop {
        // Expand the basis to p vectors, pausing at checkpoints.
        let mut exhausted = false;
        while basis.len() < p {
            let reference = norm2(&next).max(T::min_positive_value());
            let mut nrm = orthogonalize(&basis, &mut next);
            let mut attempts = 0;
            while nrm <= small * reference {
                // Invariant subspace found: continue with a fresh direction.
                attempts += 1;
                if attempts > 5 {
                    break;
                }
                next = random_vector(n, &mut rng);
                nrm = orthogonalize(&basis, &mut next);
            }
            if nrm <= small * reference {
                exhausted = true;
                break;
            }
            let inv = T::one() / nrm;
            let v: Vec<Cplx<T>> = next.iter().map(|z| *z * inv).collect();
            let (w, its) = pcg.solve(&v)?;
            result.iterations += 1;
            result.inner_iterations += its;
            next = w.clone();
            basis.push(v);
            images.push(w);
            let k = basis.len();
            if k >= first_check && k < p && (k - first_check) % 4 == 0 {
                break;
            }
        }
        let k = basis.len();
        let mut g = vec![vec![Cplx::new(T::zero(), T::zero()); k]; k];
        for i in 0..k {
            for j in i..k {
                let v = dot(&basis[i], &images[j]);
                g[i][j] = v;
                g[j][i] = v.conj();
            }
        }
        let (_, s) = hermitian_eigen(&g);
        // Largest Ritz values of H^{-1} come last.
        let order: Vec<usize> = (0..k).rev().collect();
        let count = m.min(k);
        let mut values = Vec::with_capacity(count);
        let mut vectors = Vec::with_capacity(count);
        let mut residuals = Vec::with_capacity(count);
        for &idx in order.iter().take(count) {
            let mut y = combine(&basis, &s[idx]);
            let nrm = norm2(&y);
            for z in y.iter_mut() {
                *z = *z / nrm;
            }
            let hy = matrix.apply(&y);
            let rho = dot(&y, &hy).re;
            let mut r = hy;
            axpy(Cplx::new(-rho, T::zero()), &y, &mut r);
            let scale = rho.abs().max(T::min_positive_value());
            values.push(rho);
            residuals.push(norm2(&r) / scale);
            vectors.push(y);
        }
        let done = residuals.iter().all(|r| *r <= opts.tol);
        let exhausted = exhausted || k == n;
        if done || exhausted || (k == p && result.restarts >= opts.max_restarts) {
            let mut idx: Vec<usize> = (0..count).collect();
            idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
            result.eigenvalues = idx.iter().map(|&i| values[i]).collect();
            result.residuals = idx.iter().map(|&i| residuals[i]).collect();
            result.vectors = idx.iter().map(|&i| vectors[i].clone()).collect();
            result.converged = done && count == m;
            result.seconds = clock.elapsed().as_secs_f64();
            if !result.converged && !opts.allow_unconverged {
                let worst = result.residuals.iter().copied().fold(T::zero(), T::max);
                return Err(Error::Convergence(format!(
                    "{count}/{m} pairs after {} restarts ({} Krylov steps, {} inner iterations); worst relative residual {}",
                    result.restarts,
                    result.iterations,
                    result.inner_iterations,
                    to_f64(worst)
                )));
            }
            return Ok(result);
        }
        if k < p {
            continue;
        }
        // Thick restart: keep the leading Ritz vectors and continue from
        // the residual direction of the last basis vector.
        let mut f = images[k - 1].clone();
        for (i, v) in basis.iter().enumerate() {
            axpy(-g[i][k - 1], v, &mut f);
        }
        let kept: Vec<usize> = order.iter().copied().take(keep).collect();
        let new_basis: Vec<Vec<Cplx<T>>> = kept.iter().map(|&i| combine(&basis, &s[i])).collect();
        let new_images: Vec<Vec<Cplx<T>>> = kept.iter().map(|&i| combine(&images, &s[i])).collect();
        basis = Vec::with_capacity(p + 1);
        images = Vec::with_capacity(p + 1);
        // Re-orthonormalize the kept vectors, carrying their images along.
        for (mut v, mut w) in new_basis.into_iter().zip(new_images) {
            for _ in 0..2 {
                for (b, bw) in basis.iter().zip(&images) {
                    let c = dot(b, &v);
                    axpy(-c, b, &mut v);
                    axpy(-c, bw, &mut w);
                }
            }
            let nrm = norm2(&v);
            if nrm <= small {
                continue;
            }
            let inv = T::one() / nrm;
            basis.push(v.iter().map(|z| *z * inv).collect());
            images.push(w.iter().map(|z| *z * inv).collect());
        }
        next = f;
        result.restarts += 1;
    }
}
