//! Magnetic field with a degenerate well along `t = 0`: well data
//! extraction and the gauge potential `A = A0 ds` (with `A1 = 0`).

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use evalexpr::{
    build_operator_tree, Context, DefaultNumericTypes, EvalexprError, EvalexprResult,
    Node, Value,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Band, BandMetric, CurveGeometry, SRange, ScalarField};
use crate::quadrature;
use crate::scalar::{from_usize, lit, to_f64, Real};
use crate::table::SampledTable;

/// Field catalog entries as they appear in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum FieldSpec {
    Uniform { b0: f64 },
    /// `b = b0 + beta2 t^2 / 2`
    Parabolic { b0: f64, beta2: f64 },
    /// `b = b0 + (mu0 + mu2 s^2 / 2) t^2 / 2`, so `beta2(s) = mu0 + mu2 s^2 / 2`.
    Miniwell { b0: f64, mu0: f64, mu2: f64 },
    /// Expression in `s` and `t`, e.g. `1 + 0.5*(2 + s^2)*t^2`.
    Expression { expr: String },
    Csv { path: PathBuf },
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec::Parabolic { b0: 1.0, beta2: 2.0 }
    }
}

impl FieldSpec {
    pub fn build<T: Real>(&self, band: Band<T>) -> Result<FieldProfile<T>> {
        let (label, b): (String, ScalarField<T>) = match self {
            FieldSpec::Uniform { b0 } => {
                let b0 = lit::<T>(*b0);
                (format!("uniform({b0})"), Arc::new(move |_, _| b0))
            }
            FieldSpec::Parabolic { b0, beta2 } => {
                let (b0, c) = (lit::<T>(*b0), lit::<T>(0.5 * beta2));
                (
                    format!("parabolic({b0}, {})", 2.0 * to_f64(c)),
                    Arc::new(move |_, t| b0 + c * t * t),
                )
            }
            FieldSpec::Miniwell { b0, mu0, mu2 } => {
                let (b0v, mu0v, mu2v) = (lit::<T>(*b0), lit::<T>(*mu0), lit::<T>(*mu2));
                let half = lit::<T>(0.5);
                (
                    format!("miniwell({b0}, {mu0}, {mu2})"),
                    Arc::new(move |s, t| b0v + half * (mu0v + half * mu2v * s * s) * t * t),
                )
            }
            FieldSpec::Expression { expr } => {
                let node = build_operator_tree::<DefaultNumericTypes>(expr)
                    .map_err(|e| Error::Config(format!("field expression '{expr}': {e}")))?;
                // Probe once so that syntax accepted by the parser but not
                // evaluable (unknown identifiers) is reported at build time.
                eval_expression(&node, 0.0, 0.0)
                    .map_err(|e| Error::Config(format!("field expression '{expr}': {e}")))?;
                let node = Arc::new(node);
                (
                    format!("expr({expr})"),
                    Arc::new(move |s: T, t: T| {
                        lit(eval_expression(&node, to_f64(s), to_f64(t)).unwrap_or(f64::NAN))
                    }),
                )
            }
            FieldSpec::Csv { path } => {
                let table = SampledTable::<T>::from_csv(path, "b")?;
                (
                    format!("csv({})", path.display()),
                    Arc::new(move |s, t| table.eval(s, t)),
                )
            }
        };
        let profile = FieldProfile::new(label, b, band);
        profile.validate(lit(1e-9))?;
        Ok(profile)
    }
}

/// Evaluation context exposing `s`, `t` and `pi` to field expressions.
struct BandPoint {
    s: Value<DefaultNumericTypes>,
    t: Value<DefaultNumericTypes>,
    pi: Value<DefaultNumericTypes>,
}

impl Context for BandPoint {
    type NumericTypes = DefaultNumericTypes;

    fn get_value(&self, identifier: &str) -> Option<&Value<DefaultNumericTypes>> {
        match identifier {
            "s" => Some(&self.s),
            "t" => Some(&self.t),
            "pi" => Some(&self.pi),
            _ => None,
        }
    }

    fn call_function(
        &self,
        identifier: &str,
        _argument: &Value<DefaultNumericTypes>,
    ) -> EvalexprResult<Value<DefaultNumericTypes>, DefaultNumericTypes> {
        Err(EvalexprError::FunctionIdentifierNotFound(identifier.to_string()))
    }

    fn are_builtin_functions_disabled(&self) -> bool {
        false
    }

    fn set_builtin_functions_disabled(
        &mut self,
        _disabled: bool,
    ) -> EvalexprResult<(), DefaultNumericTypes> {
        Err(EvalexprError::ContextNotMutable)
    }
}

fn eval_expression(node: &Node<DefaultNumericTypes>, s: f64, t: f64) -> EvalexprResult<f64, DefaultNumericTypes> {
    let ctx = BandPoint {
        s: Value::Float(s),
        t: Value::Float(t),
        pi: Value::Float(std::f64::consts::PI),
    };
    node.eval_number_with_context(&ctx)
}

/// Magnetic field `b(s,t) > 0` on the band, minimal (`= b0`) on `t = 0`.
#[derive(Clone)]
pub struct FieldProfile<T> {
    label: String,
    b: ScalarField<T>,
    b0: T,
    band: Band<T>,
}

impl<T: fmt::Debug> fmt::Debug for FieldProfile<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldProfile")
            .field("label", &self.label)
            .field("b0", &self.b0)
            .field("band", &self.band)
            .finish()
    }
}

impl<T: Real> FieldProfile<T> {
    /// `b0` is taken as the minimum of `b(s, 0)` over the band.
    pub fn new(label: impl Into<String>, b: ScalarField<T>, band: Band<T>) -> Self {
        let b0 = band
            .s_samples(129)
            .into_iter()
            .map(|s| b(s, T::zero()))
            .fold(T::infinity(), T::min);
        Self {
            label: label.into(),
            b,
            b0,
            band,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn b(&self, s: T, t: T) -> T {
        (self.b)(s, t)
    }

    pub fn b0(&self) -> T {
        self.b0
    }

    pub fn band(&self) -> &Band<T> {
        &self.band
    }

    /// `d_t^2 b(s, 0)` by a centered 5-point stencil of step `dt`.
    pub fn beta2(&self, s: T, dt: T) -> T {
        d2_5pt(|t| self.b(s, t), T::zero(), dt)
    }

    /// Checks `b(s,0) = b0` along the curve and `b > 0` on the band.
    pub fn validate(&self, tol: T) -> Result<()> {
        if !(self.b0 > T::zero()) {
            return Err(Error::Domain(format!(
                "field minimum b0 = {} must be positive",
                self.b0
            )));
        }
        let n = 33;
        let tw = self.band.t_halfwidth;
        for s in self.band.s_samples(n) {
            let on_curve = self.b(s, T::zero());
            if (on_curve - self.b0).abs() > tol * self.b0.max(T::one()) {
                return Err(Error::NotAWell {
                    s: to_f64(s),
                    value: to_f64(on_curve - self.b0),
                });
            }
            for j in 0..n {
                let t = -tw + tw * lit::<T>(2.0) * from_usize::<T>(j) / from_usize::<T>(n - 1);
                let v = self.b(s, t);
                if !(v > T::zero()) {
                    return Err(Error::Domain(format!("b({s}, {t}) = {v} is not positive")));
                }
            }
        }
        Ok(())
    }
}

/// Options for [`extract_well`].
#[derive(Debug, Clone, Copy)]
pub struct WellOptions<T> {
    /// Number of longitudinal samples.
    pub samples: usize,
    /// Transverse finite-difference step; `None` uses `1e-3 * t_halfwidth`.
    pub dt: Option<T>,
    /// Fail with a degenerate-miniwell error unless every requested band
    /// has a nondegenerate interior minimum.
    pub require_miniwell: bool,
    pub slope_tol: T,
    pub flat_tol: T,
}

impl<T: Real> Default for WellOptions<T> {
    fn default() -> Self {
        Self {
            samples: 401,
            dt: None,
            require_miniwell: false,
            slope_tol: lit(1e-6),
            flat_tol: lit(1e-8),
        }
    }
}

/// Effective longitudinal potential of one Landau band `k`:
/// `V_k(s) = (2k^2+2k+1) beta2(s) / (4 b0) + (k^2+k) R(s) / 2`.
#[derive(Debug, Clone, Serialize)]
pub struct BandWell<T> {
    pub k: u32,
    pub vk: Vec<T>,
    pub x0: T,
    pub vk_min: T,
    pub vk_max: T,
    /// `V_k''(x0)`.
    pub delta_k: T,
    pub beta2_x0: T,
    /// `beta2''(x0)`.
    pub mu2: T,
    pub r_x0: T,
    /// Another non-adjacent sample attains the same minimum.
    pub tied: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct WellData<T> {
    pub b0: T,
    pub s_grid: Vec<T>,
    pub beta2: Vec<T>,
    /// `inf beta2`.
    pub mu0: T,
    pub bands: Vec<BandWell<T>>,
}

impl<T: Real> WellData<T> {
    pub fn band(&self, k: u32) -> Option<&BandWell<T>> {
        self.bands.iter().find(|b| b.k == k)
    }
}

fn d1_5pt<T: Real>(f: impl Fn(T) -> T, x: T, h: T) -> T {
    let two = lit::<T>(2.0);
    (f(x - two * h) - f(x + two * h) + lit::<T>(8.0) * (f(x + h) - f(x - h))) / (lit::<T>(12.0) * h)
}

fn d2_5pt<T: Real>(f: impl Fn(T) -> T, x: T, h: T) -> T {
    let two = lit::<T>(2.0);
    (lit::<T>(16.0) * (f(x + h) + f(x - h)) - f(x + two * h) - f(x - two * h) - lit::<T>(30.0) * f(x))
        / (lit::<T>(12.0) * h * h)
}

/// Index of the smallest sample (first one on ties) and whether a
/// non-adjacent sample ties with it.
fn argmin_with_ties<T: Real>(values: &[T], periodic: bool) -> (usize, bool) {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    let n = values.len();
    let scale = values[best].abs().max(T::one());
    let tol = scale * lit(1e-12);
    let tied = values.iter().enumerate().any(|(i, v)| {
        let dist = if periodic {
            let d = i.abs_diff(best);
            d.min(n - d)
        } else {
            i.abs_diff(best)
        };
        dist > 1 && (*v - values[best]).abs() <= tol
    });
    (best, tied)
}

/// Quadratic refinement of a grid minimum; returns the refined abscissa.
fn refine_minimum<T: Real>(s: &[T], v: &[T], i: usize, range: SRange<T>) -> Option<T> {
    let n = s.len();
    let (il, ir, step) = match range {
        SRange::Periodic { length } => ((i + n - 1) % n, (i + 1) % n, length / from_usize(n)),
        SRange::Interval { .. } => {
            if i == 0 || i + 1 == n {
                return None;
            }
            (i - 1, i + 1, s[i + 1] - s[i])
        }
    };
    let curv = v[il] - lit::<T>(2.0) * v[i] + v[ir];
    if !(curv > T::zero()) {
        return Some(s[i]);
    }
    let offset = step * (v[il] - v[ir]) / (lit::<T>(2.0) * curv);
    Some(s[i] + offset)
}

/// Extracts `beta2`, `mu0` and, for each `k`, the effective potential
/// `V_k` with its minimum `x0` and curvature `delta_k`.
pub fn extract_well<T: Real>(
    field: &FieldProfile<T>,
    geometry: &CurveGeometry<T>,
    ks: &[u32],
    opts: &WellOptions<T>,
) -> Result<WellData<T>> {
    let band = field.band();
    let dt = opts.dt.unwrap_or(band.t_halfwidth * lit(1e-3));
    let b0 = field.b0();
    let s_grid = band.s_samples(opts.samples.max(5));
    let periodic = matches!(band.s_range, SRange::Periodic { .. });

    let beta2_at = |s: T| d2_5pt(|t| field.b(s, t), T::zero(), dt);
    let slope_tol = opts.slope_tol * b0.max(T::one());
    let mut beta2 = Vec::with_capacity(s_grid.len());
    for &s in &s_grid {
        let slope = d1_5pt(|t| field.b(s, t), T::zero(), dt);
        if slope.abs() > slope_tol {
            return Err(Error::NotAWell {
                s: to_f64(s),
                value: to_f64(slope),
            });
        }
        let b2 = beta2_at(s);
        if !(b2 > T::zero()) {
            return Err(Error::DegeneracyViolation {
                s: to_f64(s),
                value: to_f64(b2),
            });
        }
        beta2.push(b2);
    }

    let (imin, _) = argmin_with_ties(&beta2, periodic);
    let mu0 = match refine_minimum(&s_grid, &beta2, imin, band.s_range) {
        Some(x) => beta2_at(x).min(beta2[imin]),
        None => beta2[imin],
    };

    let ds = (s_grid[1] - s_grid[0]).min(lit(1e-2));
    let mut bands = Vec::with_capacity(ks.len());
    for &k in ks {
        let kf = lit::<T>(k as f64);
        let c_beta = (lit::<T>(2.0) * kf * kf + lit::<T>(2.0) * kf + T::one()) / (lit::<T>(4.0) * b0);
        let c_r = lit::<T>(0.5) * (kf * kf + kf);
        let vk_at = |s: T| c_beta * beta2_at(s) + c_r * geometry.r_gamma(s);
        let vk: Vec<T> = s_grid
            .iter()
            .zip(&beta2)
            .map(|(&s, &b2)| c_beta * b2 + c_r * geometry.r_gamma(s))
            .collect();
        let (i, tied) = argmin_with_ties(&vk, periodic);
        let refined = refine_minimum(&s_grid, &vk, i, band.s_range);
        let x0 = refined.unwrap_or(s_grid[i]);
        let vk_min = vk_at(x0).min(vk[i]);
        let vk_max = vk.iter().copied().fold(T::neg_infinity(), T::max);
        let delta_k = d2_5pt(vk_at, x0, ds);
        if opts.require_miniwell && (refined.is_none() || !(delta_k > opts.flat_tol)) {
            return Err(Error::DegenerateMiniwell {
                x0: to_f64(x0),
                delta: to_f64(delta_k),
            });
        }
        bands.push(BandWell {
            k,
            vk,
            x0,
            vk_min,
            vk_max,
            delta_k,
            beta2_x0: beta2_at(x0),
            mu2: d2_5pt(beta2_at, x0, ds),
            r_x0: geometry.r_gamma(x0),
            tied,
        });
    }

    Ok(WellData {
        b0,
        s_grid,
        beta2,
        mu0,
        bands,
    })
}

/// Outcome of the two-sided quadratic growth check
/// `t^2 / C <= b(s,t) - b0 <= C t^2`.
#[derive(Debug, Clone, Serialize)]
pub struct QuadraticWellReport {
    pub holds: bool,
    pub samples: usize,
    pub violation: Option<WellViolation>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WellViolation {
    pub s: f64,
    pub t: f64,
    pub excess: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn validate_quadratic_well<T: Real>(field: &FieldProfile<T>, c: T, halfwidth: T) -> QuadraticWellReport {
    let nt = 100;
    let s_samples = field.band().s_samples(65);
    let mut samples = 0;
    for &s in &s_samples {
        for j in 0..=nt {
            let t = -halfwidth + halfwidth * lit::<T>(2.0) * from_usize::<T>(j) / from_usize::<T>(nt);
            if t == T::zero() {
                continue;
            }
            samples += 1;
            let excess = field.b(s, t) - field.b0();
            let lower = t * t / c;
            let upper = c * t * t;
            if !(excess >= lower && excess <= upper) {
                return QuadraticWellReport {
                    holds: false,
                    samples,
                    violation: Some(WellViolation {
                        s: to_f64(s),
                        t: to_f64(t),
                        excess: to_f64(excess),
                        lower: to_f64(lower),
                        upper: to_f64(upper),
                    }),
                };
            }
        }
    }
    QuadraticWellReport {
        holds: true,
        samples,
        violation: None,
    }
}

/// Longitudinal gauge data consumed by the discretization: line integrals
/// of `A0` along `s`-edges at fixed `t`.
pub trait Gauge<T>: Send + Sync {
    /// `int_{s0}^{s1} A0(s, t) ds` for every `t` in `ts`.
    fn link_integrals(&self, s0: T, s1: T, ts: &[T]) -> Result<Vec<T>>;
}

/// `A0(s,t) = -int_0^t b(s,tau) sqrt(a(s,tau)) dtau`, so that
/// `b = -d_t A0 / sqrt(a)` with `A1 = 0`.
#[derive(Clone, Debug)]
pub struct GaugePotential<T> {
    field: FieldProfile<T>,
    metric: BandMetric<T>,
    tol: T,
}

/// Builds the gauge potential of `field` on `metric` (absolute quadrature
/// tolerance `1e-12`, or the scalar's resolution if coarser).
pub fn gauge_potential<T: Real>(field: &FieldProfile<T>, metric: &BandMetric<T>) -> GaugePotential<T> {
    GaugePotential {
        field: field.clone(),
        metric: metric.clone(),
        tol: lit::<T>(1e-12).max(T::epsilon() * lit(10.0)),
    }
}

impl<T: Real> GaugePotential<T> {
    fn flux_density(&self, s: T, tau: T) -> T {
        self.field.b(s, tau) * self.metric.sqrt_det(s, tau)
    }

    pub fn a0(&self, s: T, t: T) -> Result<T> {
        quadrature::integrate(|tau| self.flux_density(s, tau), T::zero(), t, self.tol).map(|v| -v)
    }

    /// `A0(s, t)` for ascending `ts`, integrating outward from `t = 0`
    /// piece by piece.
    pub fn column(&self, s: T, ts: &[T]) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); ts.len()];
        let split = ts.partition_point(|t| *t < T::zero());
        let mut acc = T::zero();
        let mut prev = T::zero();
        for i in split..ts.len() {
            acc += quadrature::integrate(|tau| self.flux_density(s, tau), prev, ts[i], self.tol)?;
            prev = ts[i];
            out[i] = -acc;
        }
        acc = T::zero();
        prev = T::zero();
        for i in (0..split).rev() {
            acc += quadrature::integrate(|tau| self.flux_density(s, tau), prev, ts[i], self.tol)?;
            prev = ts[i];
            out[i] = -acc;
        }
        Ok(out)
    }
}

impl<T: Real> Gauge<T> for GaugePotential<T> {
    fn link_integrals(&self, s0: T, s1: T, ts: &[T]) -> Result<Vec<T>> {
        let mid = (s0 + s1) * lit(0.5);
        let len = s1 - s0;
        Ok(self.column(mid, ts)?.into_iter().map(|a| a * len).collect())
    }
}

/// `A0 = 0`: the field-free Laplacian.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoGauge;

impl<T: Real> Gauge<T> for NoGauge {
    fn link_integrals(&self, _s0: T, _s1: T, ts: &[T]) -> Result<Vec<T>> {
        Ok(vec![T::zero(); ts.len()])
    }
}

/// Closed-form `A0(s,t)`, integrated along edges by the midpoint rule.
#[derive(Clone)]
pub struct AnalyticGauge<T>(pub ScalarField<T>);

impl<T: Real> Gauge<T> for AnalyticGauge<T> {
    fn link_integrals(&self, s0: T, s1: T, ts: &[T]) -> Result<Vec<T>> {
        let mid = (s0 + s1) * lit(0.5);
        Ok(ts.iter().map(|&t| (self.0)(mid, t) * (s1 - s0)).collect())
    }
}

/// `A0 + d_s phi`: a gauge transform of `base`. Edge integrals of the
/// added term are exact (`phi(s1) - phi(s0)`), so the discrete spectrum is
/// unchanged.
pub struct GaugeShift<'a, T> {
    pub base: &'a dyn Gauge<T>,
    pub phi: Arc<dyn Fn(T) -> T + Send + Sync>,
}

impl<T: Real> Gauge<T> for GaugeShift<'_, T> {
    fn link_integrals(&self, s0: T, s1: T, ts: &[T]) -> Result<Vec<T>> {
        let shift = (self.phi)(s1) - (self.phi)(s0);
        Ok(self
            .base
            .link_integrals(s0, s1, ts)?
            .into_iter()
            .map(|v| v + shift)
            .collect())
    }
}
