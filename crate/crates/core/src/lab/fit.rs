use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares fit of `value ~ sum_p c_p h^p`, optionally with a log-log
/// exponent fit of the same data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub powers: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub rss: f64,
    pub points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_stderr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefactor: Option<f64>,
    /// `h` values left out because their solve failed or did not converge.
    #[serde(default)]
    pub excluded: Vec<f64>,
}

impl FitReport {
    pub fn coefficient(&self, power: f64) -> Option<f64> {
        self.powers
            .iter()
            .position(|p| (p - power).abs() < 1e-12)
            .map(|i| self.coefficients[i])
    }

    pub fn with_exponent(mut self, e: &ExponentFit) -> Self {
        self.slope = Some(e.slope);
        self.slope_stderr = Some(e.stderr);
        self.prefactor = Some(e.prefactor);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub stderr: f64,
    /// `exp(intercept)`, the fitted `C` in `value ~ C h^slope`.
    pub prefactor: f64,
}

/// Smallest Cholesky pivot of the column-scaled Gram matrix accepted
/// before the fit is declared ill-conditioned.
const PIVOT_FLOOR: f64 = 1e-13;

fn distinct_count(hs: impl Iterator<Item = f64>) -> usize {
    let mut v: Vec<f64> = hs.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

/// Cholesky factor of a small symmetric positive definite matrix, stored
/// row-major; `None` when a pivot falls below [`PIVOT_FLOOR`].
fn cholesky(g: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = g[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(sum > PIVOT_FLOOR) {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k * n + i] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    y
}

/// Fits `value ~ sum_p c_p h^p` through the normal equations of the
/// column-scaled design, with one step of iterative refinement.
pub fn fit_powers(pairs: &[(f64, f64)], powers: &[f64]) -> Result<FitReport> {
    let k = powers.len();
    if k == 0 {
        return Err(Error::Domain("no powers to fit".into()));
    }
    if pairs.iter().any(|(h, v)| !(h.is_finite() && *h > 0.0 && v.is_finite())) {
        return Err(Error::Domain("fit data needs positive h and finite values".into()));
    }
    if powers.iter().any(|p| !p.is_finite()) {
        return Err(Error::Domain("powers must be finite".into()));
    }
    let distinct = distinct_count(pairs.iter().map(|p| p.0));
    if distinct < k {
        return Err(Error::IllConditionedFit(format!(
            "{distinct} distinct h values for {k} powers"
        )));
    }

    let n = pairs.len();
    let mut x = vec![0.0; n * k];
    for (i, (h, _)) in pairs.iter().enumerate() {
        for (j, p) in powers.iter().enumerate() {
            x[i * k + j] = h.powf(*p);
        }
    }
    let scale: Vec<f64> = (0..k)
        .map(|j| (0..n).map(|i| x[i * k + j].powi(2)).sum::<f64>().sqrt())
        .collect();
    for i in 0..n {
        for j in 0..k {
            x[i * k + j] /= scale[j];
        }
    }
    let mut gram = vec![0.0; k * k];
    for a in 0..k {
        for b in 0..k {
            gram[a * k + b] = (0..n).map(|i| x[i * k + a] * x[i * k + b]).sum();
        }
    }
    let l = cholesky(&gram, k).ok_or_else(|| {
        Error::IllConditionedFit(format!("h values {:?} do not separate powers {powers:?}", pairs.iter().map(|p| p.0).collect::<Vec<_>>()))
    })?;

    let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let residual = |z: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| y[i] - (0..k).map(|j| x[i * k + j] * z[j]).sum::<f64>())
            .collect()
    };
    let project = |r: &[f64]| -> Vec<f64> {
        (0..k).map(|j| (0..n).map(|i| x[i * k + j] * r[i]).sum()).collect()
    };
    let mut z = cholesky_solve(&l, k, &project(&y));
    let dz = cholesky_solve(&l, k, &project(&residual(&z)));
    for (zi, d) in z.iter_mut().zip(dz) {
        *zi += d;
    }
    let rss = residual(&z).iter().map(|r| r * r).sum();

    Ok(FitReport {
        powers: powers.to_vec(),
        coefficients: z.iter().zip(&scale).map(|(z, s)| z / s).collect(),
        rss,
        points: n,
        slope: None,
        slope_stderr: None,
        prefactor: None,
        excluded: Vec::new(),
    })
}

/// Ordinary least squares on `(ln h, ln value)`.
pub fn exponent_fit(pairs: &[(f64, f64)]) -> Result<ExponentFit> {
    if pairs.len() < 3 {
        return Err(Error::Domain(format!("exponent fit needs 3 points, got {}", pairs.len())));
    }
    if let Some((h, v)) = pairs.iter().find(|(h, v)| !(*h > 0.0 && *v > 0.0)) {
        return Err(Error::Domain(format!("nonpositive data point ({h}, {v})")));
    }
    if distinct_count(pairs.iter().map(|p| p.0)) < 2 {
        return Err(Error::IllConditionedFit("all h values coincide".into()));
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(ExponentFit {
        slope,
        stderr: (rss / (n - 2.0) / sxx).sqrt(),
        prefactor: intercept.exp(),
    })
}
