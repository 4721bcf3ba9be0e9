use std::sync::Arc;

use serde::Serialize;

use super::assemble::{assemble, DiscreteOperator};
use super::eigen::{lowest_eigenpairs, SolverOptions};
use super::grid::GridSpec;
use crate::error::{Error, Result};
use crate::field::{AnalyticGauge, FieldProfile};
use crate::geometry::{Band, BandMetric};
use crate::oscillator::QuasimodeBundle;
use crate::scalar::{axpy, dot, lit, norm2, norm_sqr, Cplx, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticForm<T> {
    /// `|(ih d + A) u|^2`, potential excluded.
    pub q_magnetic: T,
    /// `h int b |u|^2 dx_g`.
    pub mass_b: T,
    /// `u` is non-negligible on the outermost grid layer.
    pub touches_boundary: bool,
}

/// Evaluates the quadratic forms of nodal values `u` with the quadrature
/// of the assembly.
pub fn quadratic_form<T: Real>(op: &DiscreteOperator<T>, u: &[Cplx<T>]) -> Result<QuadraticForm<T>> {
    if u.len() != op.dim() {
        return Err(Error::Shape(format!("vector of length {} for dimension {}", u.len(), op.dim())));
    }
    let w = op.to_weighted(u);
    let mut q = dot(&w, &op.apply(&w)).re;
    if let Some(v) = &op.potential {
        q -= u
            .iter()
            .zip(v)
            .zip(&op.mass)
            .map(|((z, vi), m)| *vi * norm_sqr(*z) * *m)
            .sum::<T>();
    }
    let mass_b = op.h
        * u.iter()
            .zip(&op.field)
            .zip(&op.mass)
            .map(|((z, b), m)| *b * norm_sqr(*z) * *m)
            .sum::<T>();
    let g = &op.grid;
    let peak = u.iter().map(|z| norm_sqr(*z)).fold(T::zero(), T::max);
    let floor = peak * lit(1e-20);
    let edge = |i: usize, j: usize| norm_sqr(u[g.index(i, j)]) > floor;
    let touches_boundary = peak > T::zero()
        && ((0..g.nt).any(|j| edge(0, j) || edge(g.ns - 1, j)) || (0..g.ns).any(|i| edge(i, 0) || edge(i, g.nt - 1)));
    Ok(QuadraticForm {
        q_magnetic: q,
        mass_b,
        touches_boundary,
    })
}

/// `<u, H u> / <u, u>` in the weighted inner product, nodal `u`.
pub fn rayleigh_quotient<T: Real>(op: &DiscreteOperator<T>, u: &[Cplx<T>]) -> Result<T> {
    if u.len() != op.dim() {
        return Err(Error::Shape(format!("vector of length {} for dimension {}", u.len(), op.dim())));
    }
    let w = op.to_weighted(u);
    Ok(dot(&w, &op.apply(&w)).re / dot(&w, &w).re)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MontgomeryReport<T> {
    pub trials: usize,
    /// Smallest `q_magnetic / mass_b - 1` over the trial set.
    pub min_margin: T,
    pub worst: usize,
    pub eps_disc: T,
    pub passed: bool,
    pub boundary_contact: usize,
}

/// Checks `q_magnetic >= mass_b (1 - eps_disc)` on every trial state.
pub fn montgomery_check<T: Real>(op: &DiscreteOperator<T>, trials: &[Vec<Cplx<T>>], eps_disc: T) -> Result<MontgomeryReport<T>> {
    let mut min_margin = T::infinity();
    let mut worst = 0;
    let mut boundary_contact = 0;
    for (i, u) in trials.iter().enumerate() {
        let f = quadratic_form(op, u)?;
        if f.touches_boundary {
            boundary_contact += 1;
        }
        if f.mass_b == T::zero() {
            continue;
        }
        let margin = f.q_magnetic / f.mass_b - T::one();
        if margin < min_margin {
            min_margin = margin;
            worst = i;
        }
    }
    Ok(MontgomeryReport {
        trials: trials.len(),
        min_margin,
        worst,
        eps_disc,
        passed: !(min_margin < -eps_disc),
        boundary_contact,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandauCalibration<T> {
    /// `q_magnetic / mass_b` of the discrete flat ground state.
    pub ratio: T,
    /// Relative deficit `max(0, 1 - ratio)`.
    pub deficit: T,
    /// Ground state as nodal values.
    #[serde(skip)]
    pub state: Vec<Cplx<T>>,
}

/// Discrete ground state of the flat unit-field problem on `grid`,
/// gauge `A0 = -t`.
pub fn flat_landau_calibration<T: Real>(h: T, grid: &GridSpec<T>, opts: &SolverOptions<T>) -> Result<LandauCalibration<T>> {
    let band = Band::interval(grid.s_min, grid.s_max, grid.t_max.max(-grid.t_min));
    let field = FieldProfile::new("uniform(1)", Arc::new(|_, _| T::one()), band);
    let metric = BandMetric::flat(band);
    let gauge = AnalyticGauge(Arc::new(|_, t: T| -t));
    let op = assemble(h, &field, &metric, &gauge, grid)?;
    let eig = lowest_eigenpairs(&op, 1, opts)?;
    let state = op.to_nodal(&eig.vectors[0]);
    let f = quadratic_form(&op, &state)?;
    let ratio = f.q_magnetic / f.mass_b;
    Ok(LandauCalibration {
        ratio,
        deficit: (T::one() - ratio).max(T::zero()),
        state,
    })
}

/// `|H Phi - lambda Phi| / |Phi|` in the weighted norm; stored in the bundle.
pub fn residual_norm<T: Real>(op: &DiscreteOperator<T>, bundle: &mut QuasimodeBundle<T>) -> Result<T> {
    if bundle.grid != op.grid || bundle.samples.len() != op.dim() {
        return Err(Error::Shape("quasimode grid differs from the operator grid".into()));
    }
    let w = op.to_weighted(&bundle.samples);
    let mut r = op.apply(&w);
    axpy(Cplx::new(-bundle.lambda, T::zero()), &w, &mut r);
    let res = norm2(&r) / norm2(&w);
    bundle.residual = Some(res);
    Ok(res)
}
