use std::collections::BTreeMap;

use serde::Serialize;

use super::basis::moment_table;
use crate::error::{Error, Result};
use crate::scalar::{lit, norm_sqr, to_f64, Cplx, Real};

/// Largest longitudinal derivative order carried by an expansion.
pub const MAX_DERIVATIVE: u32 = 3;

/// `sum c_{m,d} psi_m(t1) chi^{(d)}(s)` with finitely many terms.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ModeExpansion<T> {
    terms: BTreeMap<(u32, u32), Cplx<T>>,
}

impl<T: Real> ModeExpansion<T> {
    pub fn new() -> Self {
        Self { terms: BTreeMap::new() }
    }

    pub fn single(m: u32, d: u32, c: Cplx<T>) -> Self {
        let mut e = Self::new();
        e.add(m, d, c);
        e
    }

    pub fn add(&mut self, m: u32, d: u32, c: Cplx<T>) {
        assert!(d <= MAX_DERIVATIVE, "derivative order {d} exceeds {MAX_DERIVATIVE}");
        assert!(c.re.is_finite() && c.im.is_finite(), "non-finite coefficient");
        *self.terms.entry((m, d)).or_insert_with(|| Cplx::new(T::zero(), T::zero())) += c;
    }

    pub fn get(&self, m: u32, d: u32) -> Cplx<T> {
        self.terms
            .get(&(m, d))
            .copied()
            .unwrap_or_else(|| Cplx::new(T::zero(), T::zero()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u32, Cplx<T>)> + '_ {
        self.terms.iter().map(|(&(m, d), &c)| (m, d, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_mode(&self) -> u32 {
        self.terms.keys().map(|k| k.0).max().unwrap_or(0)
    }

    pub fn max_derivative(&self) -> u32 {
        self.terms.keys().map(|k| k.1).max().unwrap_or(0)
    }

    /// Drops coefficients with modulus at most `tol`.
    pub fn pruned(mut self, tol: T) -> Self {
        self.terms.retain(|_, c| norm_sqr(*c).sqrt() > tol);
        self
    }

    pub fn scaled(&self, alpha: Cplx<T>) -> Self {
        Self {
            terms: self.terms.iter().map(|(k, c)| (*k, *c * alpha)).collect(),
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, d, c) in other.iter() {
            out.add(m, d, c);
        }
        out
    }

    pub fn max_abs(&self) -> T {
        self.terms
            .values()
            .map(|c| norm_sqr(*c).sqrt())
            .fold(T::zero(), T::max)
    }
}

/// One term `coef * t1^t_pow * d_s^s_der` of a frozen-coefficient operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial<T> {
    pub coef: Cplx<T>,
    pub t_pow: u32,
    pub s_der: u32,
}

/// Applies `sum_i coef_i t1^{p_i} d_s^{e_i}` in the basis of `psi_m`.
pub fn apply_operator<T: Real>(ops: &[Monomial<T>], b0: T, x: &ModeExpansion<T>) -> ModeExpansion<T> {
    let mut out = ModeExpansion::new();
    for (m, d, c) in x.iter() {
        for op in ops {
            let p = op.t_pow as i64;
            for n in (m as i64 - p).max(0)..=m as i64 + p {
                let q = m as i64 - n;
                let w = moment_table::<T>(n as u32, b0, op.t_pow, q as i32);
                if w != T::zero() {
                    out.add(n as u32, d + op.s_der, op.coef * c * w);
                }
            }
        }
    }
    out
}

fn kernel_tolerance<T: Real>() -> T {
    lit::<T>(1e-12).max(T::epsilon() * lit(64.0))
}

/// Solves `(L0 - (2k+1) b0) u = rhs` for the solution orthogonal to
/// `psi_k`.
pub fn oscillator_resolvent_solve<T: Real>(rhs: &ModeExpansion<T>, k: u32, b0: T) -> Result<ModeExpansion<T>> {
    let tol = kernel_tolerance::<T>() * rhs.max_abs().max(T::one());
    let mut out = ModeExpansion::new();
    for (m, d, c) in rhs.iter() {
        if m == k {
            let magnitude = norm_sqr(c).sqrt();
            if magnitude > tol {
                return Err(Error::SolvabilityViolation {
                    d: d as usize,
                    magnitude: to_f64(magnitude),
                });
            }
            continue;
        }
        let gap = lit::<T>(2.0) * (lit::<T>(m as f64) - lit::<T>(k as f64)) * b0;
        out.add(m, d, c / gap);
    }
    Ok(out)
}

/// Frozen operators at the well point: `L1` and `L2` with `a1`, `a2`,
/// `beta2` evaluated there and `a1' = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenOperators<T> {
    pub l1: Vec<Monomial<T>>,
    pub l2: Vec<Monomial<T>>,
}

impl<T: Real> FrozenOperators<T> {
    pub fn new(b0: T, a1: T, a2: T, beta2: T) -> Self {
        let c = |re: T, im: T| Cplx::new(re, im);
        let zero = T::zero();
        let b02 = b0 * b0;
        let quartic = b0 * beta2 / lit(3.0) - lit::<T>(2.0 / 3.0) * a2 * b02 + lit::<T>(23.0 / 48.0) * a1 * a1 * b02;
        let constant = a2 * lit(0.5) - lit::<T>(3.0 / 16.0) * a1 * a1;
        Self {
            l1: vec![
                Monomial { coef: c(zero, -lit::<T>(2.0) * b0), t_pow: 1, s_der: 1 },
                Monomial { coef: c(-lit::<T>(0.5) * a1 * b02, zero), t_pow: 3, s_der: 0 },
            ],
            l2: vec![
                Monomial { coef: c(-T::one(), zero), t_pow: 0, s_der: 2 },
                Monomial { coef: c(zero, lit::<T>(1.5) * a1 * b0), t_pow: 2, s_der: 1 },
                Monomial { coef: c(quartic, zero), t_pow: 4, s_der: 0 },
                Monomial { coef: c(constant, zero), t_pow: 0, s_der: 0 },
            ],
        }
    }
}

/// Output of the three-step construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Order2Quasimode<T> {
    pub k: u32,
    pub b0: T,
    pub lambda0: T,
    pub lambda2: T,
    /// `lambda2` re-derived from the `psi_k`, `d = 0` component of the
    /// third-step right-hand side.
    pub lambda2_kernel: T,
    /// Largest `psi_k` component of the third-step right-hand side once
    /// `lambda2` is inserted.
    pub kernel_residual: T,
    pub phi0: ModeExpansion<T>,
    pub phi1: ModeExpansion<T>,
    pub phi2: ModeExpansion<T>,
}

/// `(2k^2+2k+1) beta2 / (4 b0) - (k^2+k)(a2 - a1^2/4)`.
pub fn lambda2_formula<T: Real>(k: u32, b0: T, a1: T, a2: T, beta2: T) -> T {
    let kf = lit::<T>(k as f64);
    let two = lit::<T>(2.0);
    (two * kf * kf + two * kf + T::one()) * beta2 / (lit::<T>(4.0) * b0) - (kf * kf + kf) * (a2 - a1 * a1 * lit(0.25))
}

pub fn build_order2_quasimode<T: Real>(k: u32, b0: T, a1: T, a2: T, beta2: T) -> Result<Order2Quasimode<T>> {
    if !(b0 > T::zero()) || !(beta2 > T::zero()) {
        return Err(Error::Domain(format!("b0 = {b0} and beta2 = {beta2} must be positive")));
    }
    let one = Cplx::new(T::one(), T::zero());
    let ops = FrozenOperators::new(b0, a1, a2, beta2);
    let lambda0 = (lit::<T>(2.0) * lit::<T>(k as f64) + T::one()) * b0;
    let phi0 = ModeExpansion::single(k, 0, one);

    let l1_phi0 = apply_operator(&ops.l1, b0, &phi0);
    let phi1 = oscillator_resolvent_solve(&l1_phi0.scaled(-one), k, b0)
        .map_err(|e| Error::ConstructionBug(format!("first-order solvability: {e}")))?;

    let base = apply_operator(&ops.l2, b0, &phi0)
        .plus(&apply_operator(&ops.l1, b0, &phi1))
        .scaled(-one);
    let lambda2 = lambda2_formula(k, b0, a1, a2, beta2);
    let lambda2_kernel = -base.get(k, 0).re;
    let rhs = base.plus(&phi0.scaled(Cplx::new(lambda2, T::zero())));

    let scale = base.max_abs().max(T::one());
    let kernel_residual = (0..=MAX_DERIVATIVE)
        .map(|d| norm_sqr(rhs.get(k, d)).sqrt())
        .fold(T::zero(), T::max);
    if kernel_residual > kernel_tolerance::<T>() * scale {
        return Err(Error::ConstructionBug(format!(
            "third-step kernel component {} does not vanish (lambda2 = {lambda2}, re-derived {lambda2_kernel})",
            to_f64(kernel_residual)
        )));
    }
    let mut projected = ModeExpansion::new();
    for (m, d, c) in rhs.iter().filter(|(m, _, _)| *m != k) {
        projected.add(m, d, c);
    }
    let phi2 = oscillator_resolvent_solve(&projected, k, b0)?;
    Ok(Order2Quasimode {
        k,
        b0,
        lambda0,
        lambda2,
        lambda2_kernel,
        kernel_residual,
        phi0,
        phi1,
        phi2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Cplx<f64> {
        Cplx::new(re, im)
    }

    /// First-order corrector written in the unnormalized Hermite basis
    /// `pi^{-1/4} b0^{1/2} H_m(b0^{1/2} t1) exp(-b0 t1^2 / 2)`, as a list
    /// of `(m, d, coefficient)`.
    fn hermite_basis_corrector(k: u32, b0: f64, a1: f64) -> Vec<(i64, u32, Cplx<f64>)> {
        let kf = k as f64;
        let pre = 1.0 / (2.0 * b0.sqrt());
        let k = k as i64;
        vec![
            (k + 1, 1, c(0.0, pre)),
            (k - 1, 1, c(0.0, -2.0 * kf * pre)),
            (k + 3, 0, c(a1 * pre / 48.0, 0.0)),
            (k + 1, 0, c(a1 * pre * 3.0 / 8.0 * (kf + 1.0), 0.0)),
            (k - 1, 0, c(-a1 * pre * 0.75 * kf * kf, 0.0)),
            (k - 3, 0, c(-a1 * pre * kf * (kf - 1.0) * (kf - 2.0) / 6.0, 0.0)),
        ]
    }

    /// Converts to the orthonormal basis after rescaling so that the
    /// leading term is exactly `psi_k`.
    fn to_orthonormal(k: u32, terms: &[(i64, u32, Cplx<f64>)]) -> ModeExpansion<f64> {
        let log_norm = |m: i64| m as f64 * 2f64.ln() + (1..=m).map(|i| (i as f64).ln()).sum::<f64>();
        let mut out = ModeExpansion::new();
        for &(m, d, v) in terms {
            if m < 0 {
                continue;
            }
            let ratio = (0.5 * (log_norm(m) - log_norm(k as i64))).exp();
            out.add(m as u32, d, v * ratio);
        }
        out.pruned(0.0)
    }

    #[test]
    fn resolvent_examples() {
        let b0 = 1.7;
        let k = 2;
        let u = oscillator_resolvent_solve(&ModeExpansion::single(k + 2, 0, c(1.0, 0.0)), k, b0).unwrap();
        assert!((u.get(k + 2, 0) - c(1.0 / (4.0 * b0), 0.0)).norm() < 1e-15);
        let u = oscillator_resolvent_solve(&ModeExpansion::single(k - 1, 1, c(1.0, 0.0)), k, b0).unwrap();
        assert!((u.get(k - 1, 1) - c(-1.0 / (2.0 * b0), 0.0)).norm() < 1e-15);
        assert!(matches!(
            oscillator_resolvent_solve(&ModeExpansion::single(k, 0, c(1.0, 0.0)), k, b0),
            Err(Error::SolvabilityViolation { d: 0, .. })
        ));
    }

    #[test]
    fn flat_ground_state() {
        let q = build_order2_quasimode(0, 1.0f64, 0.0, 0.0, 2.0).unwrap();
        assert_eq!(q.lambda0, 1.0);
        assert!((q.lambda2 - 0.5).abs() < 1e-15);
        assert!((q.lambda2_kernel - 0.5).abs() < 1e-14);
        let phi1 = q.phi1.clone().pruned(1e-15);
        assert_eq!(phi1.len(), 1);
        // i / (2 sqrt(b0)) psi_1 in Hermite normalization is i / sqrt(2 b0)
        // times the orthonormal psi_1.
        assert!((phi1.get(1, 1) - c(0.0, 1.0 / 2f64.sqrt())).norm() < 1e-14);
        assert!(q.kernel_residual < 1e-14);
    }

    #[test]
    fn lambda2_examples() {
        let q = build_order2_quasimode(1, 1.0f64, 0.0, 1.0, 2.0).unwrap();
        assert!((q.lambda2 - 0.5).abs() < 1e-14);
        assert!((q.lambda2_kernel - 0.5).abs() < 1e-13);
        assert!(build_order2_quasimode(0, 1.0, 0.0, 0.0, 0.0f64).is_err());
    }

    #[test]
    fn first_corrector_matches_hermite_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let k = rng.gen_range(0..5u32);
            let b0: f64 = rng.gen_range(0.3..3.0);
            let a1 = rng.gen_range(-2.0..2.0);
            let a2 = rng.gen_range(-2.0..2.0);
            let beta2 = rng.gen_range(0.2..4.0);
            let q = build_order2_quasimode(k, b0, a1, a2, beta2).unwrap();
            let expected = to_orthonormal(k, &hermite_basis_corrector(k, b0, a1));
            let diff = q.phi1.plus(&expected.scaled(c(-1.0, 0.0)));
            assert!(diff.max_abs() < 1e-12, "k={k}: {diff:?}");
        }
    }

    #[test]
    fn kernel_check_on_random_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..20 {
            let k = rng.gen_range(0..=3u32);
            let b0: f64 = rng.gen_range(0.3..3.0);
            let a1 = rng.gen_range(-2.0..2.0);
            let a2 = rng.gen_range(-2.0..2.0);
            let beta2 = rng.gen_range(0.2..4.0);
            let q = build_order2_quasimode(k, b0, a1, a2, beta2).unwrap();
            assert!(q.kernel_residual < 1e-12);
            assert!((q.lambda2 - q.lambda2_kernel).abs() < 1e-12 * q.lambda2.abs().max(1.0));
            assert!(q.phi1.max_derivative() <= 1 && q.phi2.max_derivative() <= 2);
            assert!(q.phi2.iter().all(|(m, _, _)| m != k));
        }
    }

    #[test]
    fn second_corrector_solves_third_step() {
        let (k, b0, a1, a2, beta2) = (2, 1.3, 0.7, -0.4, 1.9);
        let q = build_order2_quasimode(k, b0, a1, a2, beta2).unwrap();
        let ops = FrozenOperators::new(b0, a1, a2, beta2);
        let l0 = |x: &ModeExpansion<f64>| {
            let mut out = ModeExpansion::new();
            for (m, d, v) in x.iter() {
                out.add(m, d, v * (2.0 * (m as f64 - k as f64) * b0));
            }
            out
        };
        let lhs = l0(&q.phi2);
        let rhs = q
            .phi0
            .scaled(c(q.lambda2, 0.0))
            .plus(&apply_operator(&ops.l2, b0, &q.phi0).scaled(c(-1.0, 0.0)))
            .plus(&apply_operator(&ops.l1, b0, &q.phi1).scaled(c(-1.0, 0.0)));
        assert!(lhs.plus(&rhs.scaled(c(-1.0, 0.0))).max_abs() < 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let q = build_order2_quasimode(1, 1.0f32, 0.2, 0.3, 2.0).unwrap();
        assert!((q.lambda2 - q.lambda2_kernel).abs() < 1e-4);
    }
}
