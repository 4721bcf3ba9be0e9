use rayon::prelude::*;
use serde::Serialize;

use super::basis::OscillatorBasis;
use super::envelope::{gaussian_envelope, gaussian_tail, SmoothCutoff};
use super::expansion::{ModeExpansion, Order2Quasimode};
use crate::error::{Error, Result};
use crate::geometry::BandMetric;
use crate::operator::GridSpec;
use crate::quadrature;
use crate::scalar::{lit, Cplx, Real};

/// Largest tolerated fraction of trial-state mass cut away by the grid.
pub const MASS_LOSS_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOptions<T> {
    /// Keep `phi_j` for `j <= order` (0, 1 or 2).
    pub order: u32,
    /// Plateau of the longitudinal cutoff as a fraction of the distance
    /// from the well point to the nearest `s` edge.
    pub s_plateau: T,
    /// Transverse cutoff plateau and support as fractions of the grid's
    /// `t` half-width.
    pub t_plateau: T,
    pub t_support: T,
}

impl<T: Real> Default for TrialOptions<T> {
    fn default() -> Self {
        Self {
            order: 2,
            s_plateau: lit(0.75),
            t_plateau: lit(0.6),
            t_support: lit(0.8),
        }
    }
}

/// Grid-sampled order-2 quasimode with its candidate eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasimodeBundle<T> {
    pub k: u32,
    pub h: T,
    pub beta: T,
    pub x: T,
    pub sigma: T,
    pub lambda0: T,
    pub lambda2: T,
    /// `h (lambda0 + h lambda2)`.
    pub lambda: T,
    pub mass_loss: T,
    pub residual: Option<T>,
    pub grid: GridSpec<T>,
    #[serde(skip)]
    pub samples: Vec<Cplx<T>>,
}

fn transverse_tail<T: Real>(basis: &OscillatorBasis<T>, k: u32, r: T) -> Result<T> {
    let width = lit::<T>(40.0) / basis.b0().sqrt();
    let f = |t: T| {
        let v = basis.eval(k, t);
        v * v
    };
    Ok(lit::<T>(2.0) * quadrature::integrate(f, r, r + width, lit(1e-14))?)
}

pub fn assemble_trial_state<T: Real>(
    quasimode: &Order2Quasimode<T>,
    h: T,
    beta: T,
    x: T,
    grid: &GridSpec<T>,
    metric: &BandMetric<T>,
    opts: &TrialOptions<T>,
) -> Result<QuasimodeBundle<T>> {
    if !(h > T::zero()) {
        return Err(Error::Domain(format!("h = {h} must be positive")));
    }
    if opts.order > 2 {
        return Err(Error::Domain(format!("quasimode order {} is not available", opts.order)));
    }
    let reach = (x - grid.s_min).min(grid.s_max - x);
    let t_half = (-grid.t_min).min(grid.t_max);
    if !(reach > T::zero() && t_half > T::zero()) {
        return Err(Error::Shape(format!("well point {x} or t = 0 lies outside the grid box")));
    }
    let s_cut = SmoothCutoff::new(opts.s_plateau * reach, reach)?;
    let t_cut = SmoothCutoff::new(opts.t_plateau * t_half, opts.t_support * t_half)?;

    let parts: Vec<&ModeExpansion<T>> = [&quasimode.phi0, &quasimode.phi1, &quasimode.phi2]
        .into_iter()
        .take(opts.order as usize + 1)
        .collect();
    let max_mode = parts.iter().map(|p| p.max_mode()).max().unwrap_or(0);
    let max_der = parts.iter().map(|p| p.max_derivative()).max().unwrap_or(0);
    let basis = OscillatorBasis::new(quasimode.b0, max_mode.max(quasimode.k))?;

    let s_points = grid.s_points();
    let envelope = gaussian_envelope(h, beta, &s_points, x, &s_cut, max_der)?;
    let sqrt_h = h.sqrt();
    let mass_loss = gaussian_tail(s_cut.inner / envelope.sigma)?
        + transverse_tail(&basis, quasimode.k, t_cut.inner / sqrt_h)?;
    if mass_loss > lit(MASS_LOSS_LIMIT) {
        return Err(Error::Truncation {
            mass_loss: mass_loss.to_f64().unwrap_or(f64::NAN),
        });
    }

    // Flatten to (m, d, h^{j/2} c) once.
    let mut weighted: Vec<(usize, usize, Cplx<T>)> = Vec::new();
    let mut power = T::one();
    for part in &parts {
        for (m, d, c) in part.iter() {
            weighted.push((m as usize, d as usize, c * power));
        }
        power *= sqrt_h;
    }

    let t_points = grid.t_points();
    let transverse: Vec<(T, Vec<T>)> = t_points
        .iter()
        .map(|&t| (t_cut.eval(t), basis.eval_all(t / sqrt_h)))
        .collect();
    let prefactor = h.powf(lit(-0.25));
    let mut samples = vec![Cplx::new(T::zero(), T::zero()); grid.len()];
    samples
        .par_chunks_mut(grid.nt)
        .enumerate()
        .for_each(|(i, row)| {
            let s = s_points[i];
            for (j, out) in row.iter_mut().enumerate() {
                let (chi, psi) = &transverse[j];
                if *chi == T::zero() {
                    continue;
                }
                let mut acc = Cplx::new(T::zero(), T::zero());
                for &(m, d, c) in &weighted {
                    acc += c * (psi[m] * envelope.derivatives[d][i]);
                }
                let weight = prefactor * *chi * metric.a(s, t_points[j]).powf(lit(-0.25));
                *out = acc * weight;
            }
        });

    let lambda = h * (quasimode.lambda0 + h * quasimode.lambda2);
    Ok(QuasimodeBundle {
        k: quasimode.k,
        h,
        beta,
        x,
        sigma: envelope.sigma,
        lambda0: quasimode.lambda0,
        lambda2: quasimode.lambda2,
        lambda,
        mass_loss,
        residual: None,
        grid: *grid,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Band;
    use crate::oscillator::build_order2_quasimode;

    fn setup(h: f64) -> (Order2Quasimode<f64>, GridSpec<f64>, BandMetric<f64>) {
        let q = build_order2_quasimode(0, 1.0, 0.0, 0.0, 2.0).unwrap();
        let hw = 10.0 * h.sqrt();
        let grid = GridSpec::with_spacing((-5.0, 5.0), (-hw, hw), h.sqrt() / 10.0).unwrap();
        let metric = BandMetric::flat(Band::interval(-5.0, 5.0, hw));
        (q, grid, metric)
    }

    #[test]
    fn candidate_eigenvalue() {
        let h = 0.1;
        let (q, grid, metric) = setup(h);
        let b = assemble_trial_state(&q, h, 0.125, 0.0, &grid, &metric, &TrialOptions::default()).unwrap();
        assert!((b.lambda - 0.105).abs() < 1e-15);
        assert!(b.mass_loss < 1e-8);
        assert!(b.residual.is_none());
    }

    #[test]
    fn leading_term_is_normalized_product() {
        let h = 0.05;
        let (q, grid, metric) = setup(h);
        let opts = TrialOptions { order: 0, ..Default::default() };
        let b = assemble_trial_state(&q, h, 0.125, 0.0, &grid, &metric, &opts).unwrap();
        let norm: f64 = b.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.ds() * grid.dt();
        assert!((norm - 1.0).abs() < 1e-6, "{norm}");
        // Transverse profile at the centre is exp(-b0 t^2 / 2h).
        let i = grid.ns / 2;
        let centre = b.samples[grid.index(i, grid.nt / 2)].re;
        for j in [grid.nt / 2 + 3, grid.nt / 2 + 7] {
            let t = grid.t(j) - grid.t(grid.nt / 2);
            let ratio = b.samples[grid.index(i, j)].re / centre;
            assert!((ratio - (-(grid.t(j).powi(2) - grid.t(grid.nt / 2).powi(2)) / (2.0 * h)).exp()).abs() < 1e-12, "{t}");
        }
    }

    #[test]
    fn truncation_is_reported() {
        let h = 0.1;
        let (q, _, metric) = setup(h);
        let small = GridSpec::with_spacing((-1.0, 1.0), (-3.0, 3.0), 0.03).unwrap();
        assert!(matches!(
            assemble_trial_state(&q, h, 0.125, 0.0, &small, &metric, &TrialOptions::default()),
            Err(Error::Truncation { .. })
        ));
    }
}
