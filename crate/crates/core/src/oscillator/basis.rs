use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Real};

/// Orthonormal eigenfunctions `psi_m(t1) = b0^{1/4} h_m(sqrt(b0) t1)` of
/// `L0 = -d^2/dt1^2 + b0^2 t1^2`, eigenvalues `(2m+1) b0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorBasis<T> {
    b0: T,
    max_index: u32,
}

impl<T: Real> OscillatorBasis<T> {
    pub fn new(b0: T, max_index: u32) -> Result<Self> {
        if !(b0 > T::zero() && b0.is_finite()) {
            return Err(Error::Domain(format!("oscillator frequency b0 = {b0} must be positive")));
        }
        Ok(Self { b0, max_index })
    }

    pub fn b0(&self) -> T {
        self.b0
    }

    pub fn max_index(&self) -> u32 {
        self.max_index
    }

    pub fn mu(&self, m: u32) -> T {
        (lit::<T>(2.0) * lit::<T>(m as f64) + T::one()) * self.b0
    }

    /// Values `psi_0(t1), ..., psi_max(t1)`.
    pub fn eval_all(&self, t1: T) -> Vec<T> {
        let n = self.max_index as usize + 1;
        let mut out = vec![T::zero(); n];
        let x = self.b0.sqrt() * t1;
        let scale = self.b0.sqrt().sqrt();
        let two = lit::<T>(2.0);
        out[0] = T::PI().powf(lit(-0.25)) * (-x * x * lit(0.5)).exp();
        if n > 1 {
            out[1] = two.sqrt() * x * out[0];
        }
        for m in 1..n.saturating_sub(1) {
            let mf = from_usize::<T>(m);
            let next = mf + T::one();
            out[m + 1] = (two / next).sqrt() * x * out[m] - (mf / next).sqrt() * out[m - 1];
        }
        for v in out.iter_mut() {
            *v *= scale;
        }
        out
    }

    pub fn eval(&self, m: u32, t1: T) -> T {
        assert!(m <= self.max_index, "index {m} exceeds basis size {}", self.max_index);
        self.eval_all(t1)[m as usize]
    }
}

/// `<t1^p psi_{k+q}, psi_k>` from the ladder form
/// `t1 = (a + a^dagger) / sqrt(2 b0)`. Entries violating parity or with
/// `k + q < 0` are exactly zero.
pub fn moment_table<T: Real>(k: u32, b0: T, p: u32, q: i32) -> T {
    let start = k as i64 + q as i64;
    if start < 0 || q.unsigned_abs() > p || (p as i64 + q as i64) % 2 != 0 {
        return T::zero();
    }
    let len = start as usize + p as usize + 2;
    let mut v = vec![T::zero(); len];
    v[start as usize] = T::one();
    for _ in 0..p {
        let mut w = vec![T::zero(); len];
        for n in 0..len - 1 {
            if v[n] == T::zero() {
                continue;
            }
            w[n + 1] += from_usize::<T>(n + 1).sqrt() * v[n];
            if n > 0 {
                w[n - 1] += from_usize::<T>(n).sqrt() * v[n];
            }
        }
        v = w;
    }
    v[k as usize] / (lit::<T>(2.0) * b0).powi(p as i32).sqrt()
}
