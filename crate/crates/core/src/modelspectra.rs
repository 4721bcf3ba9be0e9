//! Closed-form spectral formulas: band asymptotics, miniwell ladders,
//! Landau levels in constant curvature and the magnetic oscillator with a
//! quadratic potential.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

/// A rational power `num/den` of the semiclassical parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HPower {
    pub num: u32,
    pub den: u32,
}

impl HPower {
    pub const ONE: HPower = HPower { num: 1, den: 1 };
    pub const TWO: HPower = HPower { num: 2, den: 1 };
    pub const FIVE_HALVES: HPower = HPower { num: 5, den: 2 };

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn eval<T: Real>(self, h: T) -> T {
        match self.den {
            1 => h.powi(self.num as i32),
            2 => h.sqrt().powi(self.num as i32),
            _ => h.powf(lit(self.as_f64())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Term<T> {
    pub power: HPower,
    pub coefficient: T,
}

/// `value = sum_p coefficient_p h^p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticEigenvalue<T> {
    pub h: T,
    pub value: T,
    pub terms: Vec<Term<T>>,
}

impl<T: Real> AsymptoticEigenvalue<T> {
    fn from_terms(h: T, terms: Vec<Term<T>>) -> Self {
        let value = terms.iter().map(|t| t.coefficient * t.power.eval(h)).sum();
        Self { h, value, terms }
    }

    pub fn coefficient(&self, power: HPower) -> Option<T> {
        self.terms.iter().find(|t| t.power == power).map(|t| t.coefficient)
    }
}

fn positive<T: Real>(name: &str, x: T) -> Result<()> {
    if x > T::zero() && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {x}")))
    }
}

/// `(2k+1) h b0 + h^2 [ (2k^2+2k+1) beta2 / (4 b0) + (k^2+k) R / 2 ]`.
pub fn lambda_band<T: Real>(h: T, k: u32, b0: T, beta2_x: T, r_x: T) -> Result<AsymptoticEigenvalue<T>> {
    positive("h", h)?;
    positive("b0", b0)?;
    positive("beta2", beta2_x)?;
    let kf = lit::<T>(k as f64);
    let two = lit::<T>(2.0);
    let c1 = (two * kf + T::one()) * b0;
    let c2 = (two * kf * kf + two * kf + T::one()) * beta2_x / (lit::<T>(4.0) * b0)
        + lit::<T>(0.5) * (kf * kf + kf) * r_x;
    Ok(AsymptoticEigenvalue::from_terms(
        h,
        vec![
            Term { power: HPower::ONE, coefficient: c1 },
            Term { power: HPower::TWO, coefficient: c2 },
        ],
    ))
}

/// Two-term ground state `h b0 + h^2 mu0 / (4 b0)`.
pub fn groundstate_two_term<T: Real>(h: T, b0: T, mu0: T) -> Result<AsymptoticEigenvalue<T>> {
    positive("mu0", mu0)?;
    lambda_band(h, 0, b0, mu0, T::zero())
}

/// Miniwell eigenvalue
/// `(2k+1) b0 h + V_k(x0) h^2 + sqrt(delta_k beta2(x0) (2k+1)) (2j+1) / (2 b0) h^{5/2}`.
pub fn miniwell_eigenvalue<T: Real>(
    h: T,
    j: u32,
    k: u32,
    b0: T,
    beta2_x0: T,
    vk_x0: T,
    delta_k: T,
) -> Result<AsymptoticEigenvalue<T>> {
    positive("h", h)?;
    positive("b0", b0)?;
    positive("beta2(x0)", beta2_x0)?;
    if !(delta_k > T::zero()) {
        return Err(Error::DegenerateMiniwell {
            x0: f64::NAN,
            delta: to_f64(delta_k),
        });
    }
    let two = lit::<T>(2.0);
    let band = two * lit::<T>(k as f64) + T::one();
    let ladder = two * lit::<T>(j as f64) + T::one();
    let c52 = (delta_k * beta2_x0 * band).sqrt() * ladder / (two * b0);
    Ok(AsymptoticEigenvalue::from_terms(
        h,
        vec![
            Term { power: HPower::ONE, coefficient: band * b0 },
            Term { power: HPower::TWO, coefficient: vk_x0 },
            Term { power: HPower::FIVE_HALVES, coefficient: c52 },
        ],
    ))
}

/// `(2k+1) h b0 + h^2 (k^2+k) R / 2`, the curvature-corrected Landau level.
pub fn curved_landau_level<T: Real>(h: T, b0: T, r: T, k: u32) -> T {
    let kf = lit::<T>(k as f64);
    (lit::<T>(2.0) * kf + T::one()) * h * b0 + lit::<T>(0.5) * h * h * (kf * kf + kf) * r
}

/// Simply connected constant-curvature surfaces with a constant field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LandauGeometry<T> {
    Flat { h: T, b: T },
    Hyperbolic { h: T, b: T },
    /// Monopole line bundle of field strength `s` (must equal `n/2`).
    Spherical { s: T },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandauLevel<T> {
    pub k: u32,
    pub value: T,
    pub multiplicity: Option<u64>,
    /// Spherical case: `value / n^2`, the eigenvalue of `n^{-2} nabla* nabla`.
    pub rescaled: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandauSpectrum<T> {
    pub levels: Vec<LandauLevel<T>>,
    /// Bottom of the absolutely continuous spectrum (hyperbolic plane).
    pub ac_threshold: Option<T>,
}

/// Landau levels `k = 0..=k_max` (the hyperbolic list is also cut at
/// `k < hb - 1/2`).
pub fn landau_levels<T: Real>(geometry: LandauGeometry<T>, k_max: u32) -> Result<LandauSpectrum<T>> {
    let two = lit::<T>(2.0);
    match geometry {
        LandauGeometry::Flat { h, b } => {
            positive("h", h)?;
            positive("b", b)?;
            let levels = (0..=k_max)
                .map(|k| LandauLevel {
                    k,
                    value: (two * lit::<T>(k as f64) + T::one()) * h * b,
                    multiplicity: None,
                    rescaled: None,
                })
                .collect();
            Ok(LandauSpectrum { levels, ac_threshold: None })
        }
        LandauGeometry::Hyperbolic { h, b } => {
            positive("h", h)?;
            positive("b", b)?;
            let hb = h * b;
            let levels = (0..=k_max)
                .take_while(|&k| lit::<T>(k as f64) < hb - lit(0.5))
                .map(|k| {
                    let kf = lit::<T>(k as f64);
                    LandauLevel {
                        k,
                        value: (two * kf + T::one()) * hb - h * h * (kf * kf + kf),
                        multiplicity: None,
                        rescaled: None,
                    }
                })
                .collect();
            Ok(LandauSpectrum {
                levels,
                ac_threshold: Some(hb * hb + lit(0.25)),
            })
        }
        LandauGeometry::Spherical { s } => {
            let n = two * s;
            if !(n.is_finite() && n == n.round() && n != T::zero()) {
                return Err(Error::Prequantization(to_f64(n)));
            }
            let n_abs = n.abs();
            let n_int = to_f64(n_abs) as u64;
            let levels = (0..=k_max)
                .map(|k| {
                    let kf = lit::<T>(k as f64);
                    let value = lit::<T>(0.5) * n_abs * (two * kf + T::one()) + kf * kf + kf;
                    LandauLevel {
                        k,
                        value,
                        multiplicity: Some(n_int + 2 * k as u64 + 1),
                        rescaled: Some(value / (n * n)),
                    }
                })
                .collect();
            Ok(LandauSpectrum { levels, ac_threshold: None })
        }
    }
}

/// Frequencies and ladder of `(i d_x - b y/2)^2 + (i d_y + b x/2)^2 + x.Kx`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeemanSpectrum<T> {
    pub s1: T,
    pub s2: T,
    /// `(n1, n2, (2 n1 + 1) s1 + (2 n2 + 1) s2)`, ascending.
    pub levels: Vec<(u32, u32, T)>,
}

pub fn quadratic_zeeman_spectrum<T: Real>(
    b: T,
    k11: T,
    k12: T,
    k22: T,
    max_n1: u32,
    max_n2: u32,
) -> Result<ZeemanSpectrum<T>> {
    let trace = k11 + k22;
    let det = k11 * k22 - k12 * k12;
    let tb = trace + b * b;
    let disc = tb * tb - lit::<T>(4.0) * det;
    if disc < T::zero() {
        return Err(Error::ComplexFrequency);
    }
    if trace < T::zero() || det < T::zero() {
        return Err(Error::Domain("quadratic form K must be positive semidefinite".into()));
    }
    let root = disc.sqrt();
    let upper = (tb + root) * lit(0.5);
    let s2 = upper.sqrt();
    // (tb - root)/2 = 2 det / (tb + root), free of cancellation.
    let s1 = if upper > T::zero() {
        (det / upper).sqrt()
    } else {
        T::zero()
    };
    let two = lit::<T>(2.0);
    let mut levels = Vec::with_capacity(((max_n1 + 1) * (max_n2 + 1)) as usize);
    for n1 in 0..=max_n1 {
        for n2 in 0..=max_n2 {
            let v = (two * lit::<T>(n1 as f64) + T::one()) * s1 + (two * lit::<T>(n2 as f64) + T::one()) * s2;
            levels.push((n1, n2, v));
        }
    }
    levels.sort_by(|a, b| a.2.partial_cmp(&b.2).unwrap().then((a.0, a.1).cmp(&(b.0, b.1))));
    Ok(ZeemanSpectrum { s1, s2, levels })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct P0Groundstate<T> {
    /// `h sqrt(h^{1/2} mu0 / 2 + b0^2) - h b0`.
    pub exact: T,
    /// `mu0 h^{3/2} / (4 b0)`.
    pub leading: T,
}

/// Lowest eigenvalue of `(ih d_s - b0 t)^2 - h^2 d_t^2 - h b0 + h^{1/2} mu0 t^2 / 2`.
pub fn model_p0_groundstate<T: Real>(h: T, b0: T, mu0: T) -> Result<P0Groundstate<T>> {
    positive("h", h)?;
    positive("b0", b0)?;
    if !(mu0 >= T::zero()) {
        return Err(Error::Domain(format!("mu0 must be nonnegative, got {mu0}")));
    }
    let x = h.sqrt() * mu0 * lit(0.5);
    let exact = h * x / ((x + b0 * b0).sqrt() + b0);
    let leading = mu0 * h * h.sqrt() / (lit::<T>(4.0) * b0);
    Ok(P0Groundstate { exact, leading })
}
