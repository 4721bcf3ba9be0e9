use crate::error::{Error, Result};
use crate::field::{FieldProfile, Gauge};
use crate::geometry::{BandMetric, ScalarField};
use crate::scalar::{lit, Cplx, Real};

use super::csr::CsrMatrix;
use super::grid::GridSpec;

/// Extra assembly inputs.
#[derive(Clone, Default)]
pub struct AssemblyOptions<T> {
    /// Scalar potential `V(s, t)` added to the quadratic form as `int V |u|^2 dx_g`.
    pub potential: Option<ScalarField<T>>,
    /// Skip the magnetic-length resolution check.
    pub unchecked_resolution: bool,
}

/// `H = M^{-1/2} K M^{-1/2}` where `K` is the stiffness matrix of the
/// magnetic quadratic form and `M = diag(sqrt(a) ds dt)`. Vectors in the
/// `H` picture are `w = M^{1/2} u` for nodal values `u`.
#[derive(Debug, Clone)]
pub struct DiscreteOperator<T> {
    pub h: T,
    pub grid: GridSpec<T>,
    pub matrix: CsrMatrix<T>,
    /// `sqrt(a) ds dt` at each node.
    pub mass: Vec<T>,
    /// `b` at each node.
    pub field: Vec<T>,
    pub potential: Option<Vec<T>>,
    pub field_label: String,
    pub metric_label: String,
}

impl<T: Real> DiscreteOperator<T> {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn apply(&self, w: &[Cplx<T>]) -> Vec<Cplx<T>> {
        self.matrix.apply(w)
    }

    /// `w = M^{1/2} u`.
    pub fn to_weighted(&self, u: &[Cplx<T>]) -> Vec<Cplx<T>> {
        u.iter().zip(&self.mass).map(|(z, m)| *z * m.sqrt()).collect()
    }

    /// `u = M^{-1/2} w`.
    pub fn to_nodal(&self, w: &[Cplx<T>]) -> Vec<Cplx<T>> {
        w.iter().zip(&self.mass).map(|(z, m)| *z / m.sqrt()).collect()
    }
}

pub fn assemble<T: Real>(
    h: T,
    field: &FieldProfile<T>,
    metric: &BandMetric<T>,
    gauge: &dyn Gauge<T>,
    grid: &GridSpec<T>,
) -> Result<DiscreteOperator<T>> {
    assemble_with(h, field, metric, gauge, grid, &AssemblyOptions::default())
}

/// Flux-form discretization of `int (1/sqrt a)|(ih d_s + A0) u|^2 + sqrt a |ih d_t u|^2`
/// with link phases `exp(-(i/h) int A0 ds)` on `s`-edges and Dirichlet
/// conditions on the box.
pub fn assemble_with<T: Real>(
    h: T,
    field: &FieldProfile<T>,
    metric: &BandMetric<T>,
    gauge: &dyn Gauge<T>,
    grid: &GridSpec<T>,
    opts: &AssemblyOptions<T>,
) -> Result<DiscreteOperator<T>> {
    if !(h > T::zero()) {
        return Err(Error::Domain(format!("h = {h} must be positive")));
    }
    if !opts.unchecked_resolution {
        grid.check_resolution(h, field.b0())?;
    }
    let (ns, nt) = (grid.ns, grid.nt);
    let n = grid.len();
    let (ds, dt) = (grid.ds(), grid.dt());
    let half = lit::<T>(0.5);
    let ts = grid.t_points();
    let h2 = h * h;

    let mut mass = vec![T::zero(); n];
    let mut bvals = vec![T::zero(); n];
    let mut diag = vec![T::zero(); n];
    let mut potential = opts.potential.as_ref().map(|_| vec![T::zero(); n]);
    for i in 0..ns {
        let s = grid.s(i);
        for (j, &t) in ts.iter().enumerate() {
            let k = grid.index(i, j);
            let a = metric.a(s, t);
            if !(a > T::zero()) {
                return Err(Error::InvalidMetric {
                    s: s.to_f64().unwrap_or(f64::NAN),
                    t: t.to_f64().unwrap_or(f64::NAN),
                    value: a.to_f64().unwrap_or(f64::NAN),
                });
            }
            mass[k] = a.sqrt() * ds * dt;
            bvals[k] = field.b(s, t);
            if let (Some(v), Some(f)) = (potential.as_mut(), opts.potential.as_ref()) {
                v[k] = f(s, t);
                diag[k] += v[k] * mass[k];
            }
        }
    }

    let mut off: Vec<(usize, usize, Cplx<T>)> = Vec::with_capacity(4 * n);
    // s-edges, including the ones to the Dirichlet boundary.
    for i in 0..=ns {
        let s0 = grid.s_min + lit::<T>(i as f64) * ds;
        let s1 = s0 + ds;
        let smid = s0 + half * ds;
        let phases = if i > 0 && i < ns {
            Some(gauge.link_integrals(s0, s1, &ts)?)
        } else {
            None
        };
        for (j, &t) in ts.iter().enumerate() {
            let c = h2 * dt / (ds * metric.a(smid, t).sqrt());
            if i > 0 {
                diag[grid.index(i - 1, j)] += c;
            }
            if i < ns {
                diag[grid.index(i, j)] += c;
            }
            if let Some(ph) = &phases {
                let angle = -ph[j] / h;
                let link = Cplx::new(angle.cos(), angle.sin());
                off.push((grid.index(i - 1, j), grid.index(i, j), link * (-c)));
            }
        }
    }
    // t-edges.
    for i in 0..ns {
        let s = grid.s(i);
        for j in 0..=nt {
            let tmid = grid.t_min + (lit::<T>(j as f64) + half) * dt;
            let c = h2 * ds * metric.a(s, tmid).sqrt() / dt;
            if j > 0 {
                diag[grid.index(i, j - 1)] += c;
            }
            if j < nt {
                diag[grid.index(i, j)] += c;
            }
            if j > 0 && j < nt {
                off.push((grid.index(i, j - 1), grid.index(i, j), Cplx::new(-c, T::zero())));
            }
        }
    }

    let root: Vec<T> = mass.iter().map(|m| m.sqrt()).collect();
    let mut entries = Vec::with_capacity(n + 2 * off.len());
    for k in 0..n {
        entries.push((k, k, Cplx::new(diag[k] / mass[k], T::zero())));
    }
    for (p, q, v) in off {
        let scaled = v / (root[p] * root[q]);
        entries.push((p, q, scaled));
        entries.push((q, p, scaled.conj()));
    }
    Ok(DiscreteOperator {
        h,
        grid: *grid,
        matrix: CsrMatrix::from_triplets(n, entries),
        mass,
        field: bvals,
        potential,
        field_label: field.label().to_string(),
        metric_label: metric.label().to_string(),
    })
}
