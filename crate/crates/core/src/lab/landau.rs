use serde::Serialize;

use super::config::ExperimentConfig;
use super::sweep::Prepared;
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::modelspectra::{curved_landau_level, landau_levels, LandauGeometry};
use crate::operator::lowest_eigenpairs;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandauRow {
    pub geometry: String,
    pub k: u32,
    /// Exact level, rescaled to the semiclassical form on the sphere.
    pub level: f64,
    /// `(2k+1) h b + h^2 (k^2+k) R / 2`.
    pub curved: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericLandau {
    pub h: f64,
    pub eigenvalues: Vec<f64>,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandauCheck {
    pub rows: Vec<LandauRow>,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numeric: Option<NumericLandau>,
    pub passed: bool,
}

/// Compares the flat, hyperbolic and spherical Landau levels with the
/// curvature-corrected formula for `k <= k_max`.
pub fn landau_check(k_max: u32) -> Result<LandauCheck> {
    let tolerance = 1e-12;
    let mut rows = Vec::new();
    let mut push = |geometry: String, k: u32, level: f64, curved: f64| {
        rows.push(LandauRow {
            geometry,
            k,
            level,
            curved,
            error: (level - curved).abs() / curved.abs().max(1.0),
        });
    };
    let (h, b) = (0.07, 1.3);
    for l in landau_levels(LandauGeometry::Flat { h, b }, k_max)?.levels {
        push(format!("flat(h={h}, b={b})"), l.k, l.value, curved_landau_level(h, b, 0.0, l.k));
    }
    // hb must exceed k_max + 1/2 for every level to be discrete.
    let (h, b) = (0.05, 40.0 * (k_max as f64 + 1.0));
    for l in landau_levels(LandauGeometry::Hyperbolic { h, b }, k_max)?.levels {
        push(format!("hyperbolic(h={h}, b={b})"), l.k, l.value, curved_landau_level(h, b, -2.0, l.k));
    }
    for n in [1i32, 3, -4, 9] {
        let h = 1.0 / n.unsigned_abs() as f64;
        for l in landau_levels(LandauGeometry::Spherical { s: n as f64 / 2.0 }, k_max)?.levels {
            push(format!("sphere(n={n})"), l.k, l.value * h * h, curved_landau_level(h, 0.5, 2.0, l.k));
        }
    }
    let passed = rows.iter().all(|r| r.error <= tolerance);
    Ok(LandauCheck {
        rows,
        tolerance,
        numeric: None,
        passed,
    })
}

/// Lowest eigenvalues of the uniform field `b = 1` on a flat box, which
/// should sit at `h` to within `tolerance`.
pub fn numeric_landau(h: f64, tolerance: f64) -> Result<NumericLandau> {
    let mut cfg = ExperimentConfig::default();
    cfg.field = FieldSpec::Uniform { b0: 1.0 };
    let half = 4.0 * h.sqrt();
    cfg.grid.s_min = -half;
    cfg.grid.s_max = half;
    cfg.grid.t_halfwidth = half;
    cfg.grid.points_per_length = 10.0;
    cfg.sweep.h = vec![h];
    cfg.sweep.eigenpairs = 1;
    cfg.sweep.quasimode = false;
    let prepared = Prepared::new(&cfg)?;
    let op = prepared.operator(h)?;
    let eig = lowest_eigenpairs(&op, 1, &cfg.solver.options())?;
    let relative_error = (eig.eigenvalues[0] - h).abs() / h;
    if relative_error > tolerance {
        return Err(Error::Convergence(format!(
            "flat Landau ground state {} is {relative_error:e} away from h = {h}",
            eig.eigenvalues[0]
        )));
    }
    Ok(NumericLandau {
        h,
        eigenvalues: eig.eigenvalues,
        relative_error,
    })
}
