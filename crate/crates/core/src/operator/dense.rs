use crate::scalar::{lit, norm_sqr, Cplx, Real};

/// Eigen-decomposition of a small dense Hermitian matrix by cyclic complex
/// Jacobi rotations. Returns ascending eigenvalues and the matching
/// orthonormal eigenvectors (one `Vec` per eigenvector).
pub fn hermitian_eigen<T: Real>(a: &[Vec<Cplx<T>>]) -> (Vec<T>, Vec<Vec<Cplx<T>>>) {
    let n = a.len();
    let zero = Cplx::new(T::zero(), T::zero());
    let mut m: Vec<Vec<Cplx<T>>> = a.to_vec();
    // Use the Hermitian part so that slightly asymmetric input is harmless.
    for i in 0..n {
        m[i][i] = Cplx::new(m[i][i].re, T::zero());
        for j in i + 1..n {
            let v = (m[i][j] + m[j][i].conj()) * lit::<T>(0.5);
            m[i][j] = v;
            m[j][i] = v.conj();
        }
    }
    let mut v = vec![vec![zero; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = Cplx::new(T::one(), T::zero());
    }
    let total: T = m.iter().flatten().map(|z| norm_sqr(*z)).sum();
    let threshold = T::epsilon() * T::epsilon() * total.max(T::min_positive_value());
    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| norm_sqr(m[i][j]))
            .sum();
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p][q];
                let r = norm_sqr(apq).sqrt();
                if r == T::zero() {
                    continue;
                }
                let phase = apq / r;
                let theta = (m[q][q].re - m[p][p].re) / (lit::<T>(2.0) * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                // J = D R with D = diag(1, conj(phase)) on (p, q).
                let jpp = Cplx::new(c, T::zero());
                let jpq = Cplx::new(s, T::zero());
                let jqp = phase.conj() * (-s);
                let jqq = phase.conj() * c;
                for row in m.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = x * jpp + y * jqp;
                    row[q] = x * jpq + y * jqq;
                }
                for k in 0..n {
                    let (x, y) = (m[p][k], m[q][k]);
                    m[p][k] = jpp.conj() * x + jqp.conj() * y;
                    m[q][k] = jpq.conj() * x + jqq.conj() * y;
                }
                m[p][q] = zero;
                m[q][p] = zero;
                m[p][p].im = T::zero();
                m[q][q].im = T::zero();
                for row in v.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = x * jpp + y * jqp;
                    row[q] = x * jpq + y * jqq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i][i].re.partial_cmp(&m[j][j].re).unwrap());
    let values = order.iter().map(|&i| m[i][i].re).collect();
    let vectors = order.iter().map(|&i| (0..n).map(|k| v[k][i]).collect()).collect();
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [1usize, 2, 5, 17, 40] {
            let mut a = vec![vec![Cplx::new(0.0, 0.0); n]; n];
            for i in 0..n {
                a[i][i] = Cplx::new(rng.gen_range(-3.0..3.0), 0.0);
                for j in i + 1..n {
                    let z = Cplx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    a[i][j] = z;
                    a[j][i] = z.conj();
                }
            }
            let (vals, vecs) = hermitian_eigen(&a);
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
            let trace: f64 = (0..n).map(|i| a[i][i].re).sum();
            assert!((vals.iter().sum::<f64>() - trace).abs() < 1e-11);
            for (lam, x) in vals.iter().zip(&vecs) {
                for i in 0..n {
                    let ax: Cplx<f64> = (0..n).map(|j| a[i][j] * x[j]).sum();
                    assert!((ax - x[i] * *lam).norm() < 1e-11);
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let ip: Cplx<f64> = vecs[i].iter().zip(&vecs[j]).map(|(x, y)| x.conj() * y).sum();
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - Cplx::new(e, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn degenerate_spectrum() {
        let n = 6;
        let mut a = vec![vec![Cplx::new(0.0f64, 0.0); n]; n];
        for (i, row) in a.iter_mut().enumerate() {
            row[i] = Cplx::new(if i < 3 { 1.0 } else { 2.0 }, 0.0);
        }
        let (vals, _) = hermitian_eigen(&a);
        assert_eq!(vals, vec![1.0, 1.0, 1.0, 2.0, 2.0, 2.0]);
    }
}
