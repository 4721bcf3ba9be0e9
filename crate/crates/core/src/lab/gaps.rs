use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport<T> {
    pub interval: (T, T),
    pub min_gap: T,
    pub count: usize,
    /// Open gaps `(lambda_i, lambda_{i+1})`.
    pub gaps: Vec<(T, T)>,
}

/// Gaps of at least `min_gap` between consecutive eigenvalues that both
/// lie in `[lo, hi]`.
pub fn count_gaps<T: Real>(eigenvalues: &[T], interval: (T, T), min_gap: T) -> Result<GapReport<T>> {
    let (lo, hi) = interval;
    if !(lo < hi) {
        return Err(Error::Domain(format!("interval [{lo}, {hi}] is empty")));
    }
    if !(min_gap > T::zero()) {
        return Err(Error::Domain(format!("min_gap = {min_gap} must be positive")));
    }
    if eigenvalues.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Domain("eigenvalues are not sorted".into()));
    }
    let inside = |x: T| x >= lo && x <= hi;
    let gaps: Vec<(T, T)> = eigenvalues
        .windows(2)
        .filter(|w| inside(w[0]) && inside(w[1]) && w[0] < w[1] && w[1] - w[0] >= min_gap)
        .map(|w| (w[0], w[1]))
        .collect();
    Ok(GapReport {
        interval,
        min_gap,
        count: gaps.len(),
        gaps,
    })
}

/// Three times the solver tolerance on the eigenvalue scale.
pub fn default_min_gap<T: Real>(solver_tol: T, scale: T) -> T {
    lit::<T>(3.0) * solver_tol * scale.abs()
}

/// `[(2k+1) h b0 + h^2 m_k, (2k+1) h b0 + h^2 M_k]`.
pub fn interval_for_band<T: Real>(h: T, k: u32, b0: T, m_k: T, big_m_k: T) -> Result<(T, T)> {
    if m_k > big_m_k {
        return Err(Error::Domain(format!("range [{m_k}, {big_m_k}] is reversed")));
    }
    let base = lit::<T>(2.0 * k as f64 + 1.0) * h * b0;
    Ok((base + h * h * m_k, base + h * h * big_m_k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_examples() {
        let r = count_gaps(&[1.0, 2.0, 2.1, 3.0], (0.0, 4.0), 0.5).unwrap();
        assert_eq!(r.count, 2);
        assert_eq!(r.gaps, vec![(1.0, 2.0), (2.1, 3.0)]);
        assert_eq!(count_gaps(&[1.5], (1.0, 2.0), 0.1).unwrap().count, 0);
        assert_eq!(count_gaps(&[0.5, 1.5], (1.0, 2.0), 0.1).unwrap().count, 0);
    }

    #[test]
    fn domain_errors() {
        assert!(count_gaps(&[1.0], (2.0, 2.0), 0.1).is_err());
        assert!(count_gaps(&[1.0], (0.0, 2.0), 0.0).is_err());
        assert!(count_gaps(&[2.0, 1.0], (0.0, 3.0), 0.1).is_err());
    }

    #[test]
    fn band_intervals() {
        let (a, b) = interval_for_band(0.1f64, 0, 1.0, 0.5, 0.75).unwrap();
        assert!((a - 0.105).abs() < 1e-15 && (b - 0.1075).abs() < 1e-15);
        let (a, b) = interval_for_band(0.05f64, 1, 1.0, 4.5, 6.0).unwrap();
        assert!((a - 0.16125).abs() < 1e-15 && (b - 0.165).abs() < 1e-15);
        let (a, b) = interval_for_band(0.1, 2, 1.0, 3.0, 3.0).unwrap();
        assert_eq!(a, b);
        assert!(interval_for_band(0.1, 0, 1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn default_gap_scales_with_tolerance() {
        assert!((default_min_gap(1e-8f64, 0.5) - 1.5e-8).abs() < 1e-20);
    }

    proptest! {
        // A copy shifted by less than the minimal gap can only close gaps.
        #[test]
        fn union_with_shifted_copy(
            mut spec in prop::collection::vec(1.0f64..9.0, 1..30),
            frac in 0.0f64..1.0,
            delta in 0.05f64..1.0,
        ) {
            spec.sort_by(f64::total_cmp);
            let shift = frac * delta * 0.999;
            let shifted: Vec<f64> = spec.iter().map(|x| x + shift).collect();
            let mut union: Vec<f64> = spec.iter().chain(&shifted).copied().collect();
            union.sort_by(f64::total_cmp);
            let window = (0.0, 10.0);
            let a = count_gaps(&spec, window, delta).unwrap().count;
            let b = count_gaps(&shifted, window, delta).unwrap().count;
            let u = count_gaps(&union, window, delta).unwrap().count;
            prop_assert!(u <= a.min(b));
        }
    }
}
