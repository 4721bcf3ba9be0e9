//! Band metric `a(s,t) ds^2 + dt^2` in Fermi coordinates around the well
//! curve, with its curvature invariants and transverse Taylor coefficients.

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, to_f64, Real};
use crate::table::SampledTable;

/// A scalar function of the band coordinates `(s, t)`.
pub type ScalarField<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

/// Longitudinal extent of the band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SRange<T> {
    /// Closed curve of length `length`; `s` is taken modulo the length.
    Periodic { length: T },
    Interval { min: T, max: T },
}

/// The tubular neighbourhood `{(s, t) : |t| <= t_halfwidth}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band<T> {
    pub s_range: SRange<T>,
    pub t_halfwidth: T,
}

impl<T: Real> Band<T> {
    pub fn interval(s_min: T, s_max: T, t_halfwidth: T) -> Self {
        Self {
            s_range: SRange::Interval { min: s_min, max: s_max },
            t_halfwidth,
        }
    }

    pub fn periodic(length: T, t_halfwidth: T) -> Self {
        Self {
            s_range: SRange::Periodic { length },
            t_halfwidth,
        }
    }

    pub fn contains(&self, s: T, t: T) -> bool {
        let slack = self.t_halfwidth * lit(1e-12);
        let s_ok = match self.s_range {
            SRange::Periodic { .. } => true,
            SRange::Interval { min, max } => s >= min - slack && s <= max + slack,
        };
        s_ok && t.abs() <= self.t_halfwidth + slack
    }

    /// `n` sample points covering the longitudinal range (endpoints
    /// included for intervals, one period without repetition otherwise).
    pub fn s_samples(&self, n: usize) -> Vec<T> {
        assert!(n >= 2, "need at least two samples");
        match self.s_range {
            SRange::Interval { min, max } => {
                let step = (max - min) / from_usize(n - 1);
                (0..n).map(|i| min + step * from_usize(i)).collect()
            }
            SRange::Periodic { length } => {
                let step = length / from_usize(n);
                (0..n).map(|i| step * from_usize(i)).collect()
            }
        }
    }
}

/// Built-in metrics, plus sampled tables read from CSV (`s,t,a`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum MetricSpec {
    Flat,
    /// Circle of radius `rho` in the Euclidean plane.
    Circle { rho: f64 },
    /// Equator of the unit sphere.
    SphereEquator,
    /// Horocycle `y = 1` of the upper half plane.
    HyperbolicHorocycle,
    Csv { path: PathBuf },
}

impl Default for MetricSpec {
    fn default() -> Self {
        MetricSpec::Flat
    }
}

impl MetricSpec {
    pub fn build<T: Real>(&self, band: Band<T>) -> Result<BandMetric<T>> {
        let (label, a): (String, ScalarField<T>) = match self {
            MetricSpec::Flat => ("flat".into(), Arc::new(|_, _| T::one())),
            MetricSpec::Circle { rho } => {
                if *rho == 0.0 {
                    return Err(Error::Domain("circle radius must be nonzero".into()));
                }
                let inv = lit::<T>(1.0 / rho);
                (
                    format!("circle({rho})"),
                    Arc::new(move |_, t: T| {
                        let u = T::one() + t * inv;
                        u * u
                    }),
                )
            }
            MetricSpec::SphereEquator => (
                "sphere-equator".into(),
                Arc::new(|_, t: T| {
                    let c = t.cos();
                    c * c
                }),
            ),
            MetricSpec::HyperbolicHorocycle => (
                "hyperbolic-horocycle".into(),
                Arc::new(|_, t: T| (lit::<T>(-2.0) * t).exp()),
            ),
            MetricSpec::Csv { path } => {
                let table = SampledTable::<T>::from_csv(path, "a")?;
                let label = format!("csv({})", path.display());
                let metric = BandMetric::new(label, Arc::new(move |s, t| table.eval(s, t)), band);
                metric.validate(lit(1e-9))?;
                return Ok(metric);
            }
        };
        let metric = BandMetric::new(label, a, band);
        metric.validate(lit(1e-12))?;
        Ok(metric)
    }
}

/// The band metric `g = a(s,t) ds^2 + dt^2`.
#[derive(Clone)]
pub struct BandMetric<T> {
    label: String,
    a: ScalarField<T>,
    band: Band<T>,
    dt: T,
}

impl<T: fmt::Debug> fmt::Debug for BandMetric<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BandMetric")
            .field("label", &self.label)
            .field("band", &self.band)
            .field("dt", &self.dt)
            .finish()
    }
}

impl<T: Real> BandMetric<T> {
    /// Wraps an evaluable `a(s,t)`. The finite-difference step defaults to
    /// `1e-3 * t_halfwidth`.
    pub fn new(label: impl Into<String>, a: ScalarField<T>, band: Band<T>) -> Self {
        Self {
            label: label.into(),
            a,
            dt: band.t_halfwidth * lit(1e-3),
            band,
        }
    }

    pub fn flat(band: Band<T>) -> Self {
        Self::new("flat", Arc::new(|_, _| T::one()), band)
    }

    pub fn with_step(mut self, dt: T) -> Self {
        self.dt = dt;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn band(&self) -> &Band<T> {
        &self.band
    }

    pub fn step(&self) -> T {
        self.dt
    }

    #[inline]
    pub fn a(&self, s: T, t: T) -> T {
        (self.a)(s, t)
    }

    /// `sqrt|g| = sqrt(a)`, the area density.
    #[inline]
    pub fn sqrt_det(&self, s: T, t: T) -> T {
        self.a(s, t).sqrt()
    }

    /// Checks `a(s,0) = 1` and `a > 0` on a sample lattice of the band.
    pub fn validate(&self, tol: T) -> Result<()> {
        let n = 33;
        let tw = self.band.t_halfwidth;
        for s in self.band.s_samples(n) {
            let on_curve = self.a(s, T::zero());
            if (on_curve - T::one()).abs() > tol {
                return Err(Error::InvalidMetric {
                    s: to_f64(s),
                    t: 0.0,
                    value: to_f64(on_curve),
                });
            }
            for j in 0..n {
                let t = -tw + tw * lit::<T>(2.0) * from_usize::<T>(j) / from_usize::<T>(n - 1);
                let v = self.a(s, t);
                if !(v > T::zero()) {
                    return Err(Error::InvalidMetric {
                        s: to_f64(s),
                        t: to_f64(t),
                        value: to_f64(v),
                    });
                }
            }
        }
        Ok(())
    }

    fn positive_a(&self, s: T, t: T) -> Result<T> {
        let v = self.a(s, t);
        if v > T::zero() {
            Ok(v)
        } else {
            Err(Error::InvalidMetric {
                s: to_f64(s),
                t: to_f64(t),
                value: to_f64(v),
            })
        }
    }

    /// Scalar curvature `R = 2K` with `K = -(sqrt a)_tt / sqrt a`, by a
    /// centered 5-point second difference in `t`.
    pub fn gauss_curvature(&self, s: T, t: T) -> Result<T> {
        let reach = self.dt * lit(2.0);
        if !self.band.contains(s, t) || !self.band.contains(s, t.abs() + reach) {
            return Err(Error::OutOfDomain {
                s: to_f64(s),
                t: to_f64(t),
            });
        }
        let h = self.dt;
        let mut f = [T::zero(); 5];
        for (i, fi) in f.iter_mut().enumerate() {
            let ti = t + h * lit::<T>(i as f64 - 2.0);
            *fi = self.positive_a(s, ti)?.sqrt();
        }
        let d2 = second_derivative_5pt(&f, h);
        Ok(lit::<T>(-2.0) * d2 / f[2])
    }

    /// Transverse Taylor coefficients of `a` on the curve and the derived
    /// curvatures. Fails if the 5-point stencil does not fit in the band.
    pub fn curve_coefficients(&self) -> Result<CurveGeometry<T>> {
        let needed = self.dt * lit(2.0);
        if !(needed < self.band.t_halfwidth) || !(self.dt > T::zero()) {
            return Err(Error::Stencil {
                needed: to_f64(needed),
                available: to_f64(self.band.t_halfwidth),
            });
        }
        Ok(CurveGeometry {
            metric: self.clone(),
        })
    }
}

/// Curve data extracted from a [`BandMetric`]:
/// `a(s,t) = 1 + a1 t + a2 t^2 + a3 t^3 + ...`, `kappa = -a1/2`,
/// `R(s,0) = 2 (kappa^2 - a2)`.
#[derive(Clone, Debug)]
pub struct CurveGeometry<T> {
    metric: BandMetric<T>,
}

impl<T: Real> CurveGeometry<T> {
    fn samples(&self, s: T) -> [T; 5] {
        let h = self.metric.dt;
        let mut f = [T::zero(); 5];
        for (i, fi) in f.iter_mut().enumerate() {
            *fi = self.metric.a(s, h * lit::<T>(i as f64 - 2.0));
        }
        f
    }

    pub fn metric(&self) -> &BandMetric<T> {
        &self.metric
    }

    pub fn a1(&self, s: T) -> T {
        let f = self.samples(s);
        let h = self.metric.dt;
        (f[0] - f[4] + lit::<T>(8.0) * (f[3] - f[1])) / (lit::<T>(12.0) * h)
    }

    pub fn a2(&self, s: T) -> T {
        second_derivative_5pt(&self.samples(s), self.metric.dt) * lit(0.5)
    }

    /// Third coefficient; diagnostics only.
    pub fn a3(&self, s: T) -> T {
        let f = self.samples(s);
        let h = self.metric.dt;
        (f[4] - f[0] + lit::<T>(2.0) * (f[1] - f[3])) / (lit::<T>(2.0) * h * h * h) / lit(6.0)
    }

    /// Mean (geodesic) curvature of the well curve.
    pub fn kappa(&self, s: T) -> T {
        -self.a1(s) * lit(0.5)
    }

    /// Scalar curvature of the surface along the curve.
    pub fn r_gamma(&self, s: T) -> T {
        let k = self.kappa(s);
        lit::<T>(2.0) * (k * k - self.a2(s))
    }
}

fn second_derivative_5pt<T: Real>(f: &[T; 5], h: T) -> T {
    (lit::<T>(16.0) * (f[1] + f[3]) - f[0] - f[4] - lit::<T>(30.0) * f[2]) / (lit::<T>(12.0) * h * h)
}
