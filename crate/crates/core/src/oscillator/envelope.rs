use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature;
use crate::scalar::{from_usize, lit, Real};

/// `C^infinity` plateau function: 1 on `|x| <= inner`, 0 on `|x| >= outer`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothCutoff<T> {
    pub inner: T,
    pub outer: T,
}

impl<T: Real> SmoothCutoff<T> {
    pub fn new(inner: T, outer: T) -> Result<Self> {
        if !(inner > T::zero() && outer > inner) {
            return Err(Error::Domain(format!("cutoff needs 0 < inner < outer, got {inner}, {outer}")));
        }
        Ok(Self { inner, outer })
    }

    pub fn eval(&self, x: T) -> T {
        let r = x.abs();
        if r <= self.inner {
            return T::one();
        }
        if r >= self.outer {
            return T::zero();
        }
        let u = (r - self.inner) / (self.outer - self.inner);
        let bump = |v: T| if v > T::zero() { (-T::one() / v).exp() } else { T::zero() };
        let (a, b) = (bump(T::one() - u), bump(u));
        a / (a + b)
    }
}

fn check_beta<T: Real>(beta: T) -> Result<()> {
    if beta > T::zero() && beta < lit(0.5) {
        Ok(())
    } else {
        Err(Error::Domain(format!("envelope exponent beta = {beta} must lie in (0, 1/2)")))
    }
}

/// `min(1 + beta, 3/2 - 3 beta)`.
pub fn cutoff_exponent<T: Real>(beta: T) -> Result<T> {
    check_beta(beta)?;
    Ok((T::one() + beta).min(lit::<T>(1.5) - lit::<T>(3.0) * beta))
}

/// `(m, ||s^m E||, ||s^m E'||)` on the sampling grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentNorm<T> {
    pub m: u32,
    pub value: T,
    pub derivative: T,
}

/// `E_h(s) = c chi(s - center) exp(-(s - center)^2 / (2 h^{2 beta}))` and its
/// first derivatives, normalized to unit discrete `L^2` norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Envelope<T> {
    pub h: T,
    pub beta: T,
    pub sigma: T,
    pub center: T,
    /// `derivatives[d][i]` is `E^{(d)}` at the `i`-th sample.
    pub derivatives: Vec<Vec<T>>,
    pub norms: Vec<MomentNorm<T>>,
    /// Fraction of the Gaussian mass outside the cutoff plateau.
    pub mass_loss: T,
}

/// Probabilists' Hermite polynomials `He_0..He_n` at `x`.
fn hermite_he<T: Real>(n: usize, x: T) -> Vec<T> {
    let mut out = vec![T::one(); n + 1];
    if n >= 1 {
        out[1] = x;
    }
    for j in 1..n {
        out[j + 1] = x * out[j] - from_usize::<T>(j) * out[j - 1];
    }
    out
}

/// Samples the envelope on a uniform grid. Derivatives are those of the
/// Gaussian factor; the cutoff multiplies them but is not differentiated,
/// which is exact wherever the cutoff plateau holds the Gaussian mass.
pub fn gaussian_envelope<T: Real>(
    h: T,
    beta: T,
    s_grid: &[T],
    center: T,
    cutoff: &SmoothCutoff<T>,
    max_derivative: u32,
) -> Result<Envelope<T>> {
    check_beta(beta)?;
    if !(h > T::zero()) {
        return Err(Error::Domain(format!("h = {h} must be positive")));
    }
    if s_grid.len() < 2 {
        return Err(Error::Shape("envelope grid needs at least two samples".into()));
    }
    let ds = (s_grid[s_grid.len() - 1] - s_grid[0]) / from_usize(s_grid.len() - 1);
    let sigma = h.powf(beta);
    let nd = max_derivative as usize;
    let mut derivatives = vec![vec![T::zero(); s_grid.len()]; nd + 1];
    for (i, &s) in s_grid.iter().enumerate() {
        let y = (s - center) / sigma;
        let g = (-y * y * lit(0.5)).exp() * cutoff.eval(s - center);
        let he = hermite_he(nd, y);
        let mut factor = T::one();
        for d in 0..=nd {
            derivatives[d][i] = factor * he[d] * g;
            factor = -factor / sigma;
        }
    }
    let norm = (derivatives[0].iter().map(|v| *v * *v).sum::<T>() * ds).sqrt();
    if !(norm > T::zero()) {
        return Err(Error::Truncation { mass_loss: 1.0 });
    }
    for row in derivatives.iter_mut() {
        for v in row.iter_mut() {
            *v /= norm;
        }
    }
    let moment = |m: u32, d: usize| -> T {
        let w: T = s_grid
            .iter()
            .zip(&derivatives[d])
            .map(|(&s, &e)| {
                let v = (s - center).powi(m as i32) * e;
                v * v
            })
            .sum();
        (w * ds).sqrt()
    };
    let norms = (0..=3)
        .map(|m| MomentNorm {
            m,
            value: moment(m, 0),
            derivative: if nd >= 1 { moment(m, 1) } else { T::nan() },
        })
        .collect();
    let mass_loss = gaussian_tail(cutoff.inner / sigma)?;
    Ok(Envelope {
        h,
        beta,
        sigma,
        center,
        derivatives,
        norms,
        mass_loss,
    })
}

/// `int_{|y| > r} exp(-y^2) dy / sqrt(pi)`, the mass of `exp(-y^2/2)^2`
/// beyond `r`.
pub(crate) fn gaussian_tail<T: Real>(r: T) -> Result<T> {
    let r = r.abs();
    let width = lit::<T>(12.0);
    let tail = quadrature::integrate(|y: T| (-y * y).exp(), r, r + width, lit(1e-14))?;
    Ok(lit::<T>(2.0) * tail / T::PI().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(half: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect()
    }

    fn slope(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        sxy / sxx
    }

    #[test]
    fn exponent_bookkeeping() {
        assert!((cutoff_exponent(0.125).unwrap() - 1.125f64).abs() < 1e-15);
        assert!((cutoff_exponent(0.25).unwrap() - 0.75f64).abs() < 1e-15);
        assert!((cutoff_exponent(1e-9).unwrap() - 1.0f64).abs() < 1e-8);
        assert!(cutoff_exponent(0.5f64).is_err());
        assert!(cutoff_exponent(0.0f64).is_err());
        let best = (1..500)
            .map(|i| i as f64 / 1000.0)
            .max_by(|a, b| cutoff_exponent(*a).unwrap().partial_cmp(&cutoff_exponent(*b).unwrap()).unwrap())
            .unwrap();
        assert!((best - 0.125).abs() < 1e-3);
    }

    #[test]
    fn cutoff_shape() {
        let c = SmoothCutoff::new(1.0, 2.0f64).unwrap();
        assert_eq!(c.eval(0.5), 1.0);
        assert_eq!(c.eval(-2.5), 0.0);
        assert!((c.eval(1.5) - 0.5).abs() < 1e-15);
        assert!(c.eval(1.2) > c.eval(1.7));
        assert!(SmoothCutoff::new(2.0, 1.0f64).is_err());
    }

    #[test]
    fn unit_norm_and_moment_scaling() {
        let s = grid(10.0, 4001);
        let cut = SmoothCutoff::new(7.0, 9.5).unwrap();
        let hs = [0.01, 0.02, 0.04, 0.07, 0.1];
        let beta = 0.125;
        let mut logs = vec![vec![]; 4];
        let mut dlogs = vec![vec![]; 4];
        for &h in &hs {
            let e = gaussian_envelope(h, beta, &s, 0.0, &cut, 1).unwrap();
            assert!((e.norms[0].value - 1.0).abs() < 1e-12);
            assert!(e.mass_loss < 1e-8);
            for m in 0..4 {
                logs[m].push(e.norms[m].value.ln());
                dlogs[m].push(e.norms[m].derivative.ln());
            }
        }
        let lh: Vec<f64> = hs.iter().map(|h: &f64| h.ln()).collect();
        for m in 1..4 {
            let sl = slope(&lh, &logs[m]);
            assert!((sl - beta * m as f64).abs() <= 0.05 * beta * m as f64, "m={m}: {sl}");
        }
        for m in 0..4 {
            let sl = slope(&lh, &dlogs[m]);
            let target = beta * (m as f64 - 1.0);
            assert!((sl - target).abs() <= 0.05 * beta.max(target.abs()), "m={m}: {sl}");
        }
    }

    #[test]
    fn derivatives_match_differences() {
        let s = grid(6.0, 6001);
        let cut = SmoothCutoff::new(5.0, 5.9).unwrap();
        let e = gaussian_envelope(0.05, 0.125, &s, 0.3, &cut, 3).unwrap();
        let ds = s[1] - s[0];
        for i in (1000..5000).step_by(250) {
            for d in 0..3 {
                let fd = (e.derivatives[d][i + 1] - e.derivatives[d][i - 1]) / (2.0 * ds);
                assert!((fd - e.derivatives[d + 1][i]).abs() < 1e-4 * (1.0 + e.derivatives[d + 1][i].abs()));
            }
        }
    }

    #[test]
    fn mass_loss_report() {
        let s = grid(3.0, 601);
        let cut = SmoothCutoff::new(0.9, 2.9).unwrap();
        let e = gaussian_envelope(0.1, 0.125, &s, 0.0, &cut, 0).unwrap();
        assert!(e.mass_loss > 1e-3);
        assert!(gaussian_tail(6.0f64).unwrap() < 1e-8);
        assert!((gaussian_tail(0.0f64).unwrap() - 1.0).abs() < 1e-12);
        assert!(gaussian_envelope(0.1, 0.6, &s, 0.0, &cut, 0).is_err());
    }
}
