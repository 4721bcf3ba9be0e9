use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::{FieldProfile, FieldSpec};
use crate::geometry::{Band, BandMetric, MetricSpec};
use crate::operator::{GridSpec, SolverOptions, DEFAULT_SEED};
use crate::oscillator::TrialOptions;

/// Name of the environment variable overriding `sweep.workers`.
pub const WORKERS_ENV: &str = "MAGWELL_WORKERS";

/// One experiment: a field on a metric, a Dirichlet box and a list of `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub field: FieldSpec,
    pub metric: MetricSpec,
    pub grid: GridConfig,
    pub sweep: SweepConfig,
    pub solver: SolverConfig,
    pub envelope: EnvelopeConfig,
}

/// The box is `[s_min, s_max] x [-t_halfwidth, t_halfwidth]`. Unless both
/// `ns` and `nt` are given, the spacing is `sqrt(h / b0) / points_per_length`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub s_min: f64,
    pub s_max: f64,
    pub t_halfwidth: f64,
    pub points_per_length: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ns: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nt: Option<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            s_min: -2.0,
            s_max: 2.0,
            t_halfwidth: 1.5,
            points_per_length: 12.0,
            ns: None,
            nt: None,
        }
    }
}

/// Which sweep column a fit consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FitTarget {
    /// The lowest eigenvalue.
    #[default]
    Lambda0,
    /// `lambda1 - lambda0`.
    Gap,
    /// The quasimode residual.
    Residual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub name: String,
    pub h: Vec<f64>,
    /// Number of lowest eigenpairs per `h`.
    pub eigenpairs: usize,
    /// Landau band and miniwell level of the quasimode and the asymptote.
    pub k: u32,
    pub j: u32,
    pub quasimode: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    pub workers: usize,
    pub fit_target: FitTarget,
    /// Powers of `h` for a coefficient fit; empty disables it.
    pub fit_powers: Vec<f64>,
    /// Expected coefficients and tolerances, one per fit power.
    pub expect: Vec<f64>,
    pub expect_tol: Vec<f64>,
    /// Accepted range `[lo, hi]` for the log-log slope.
    pub expect_slope: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            name: "groundstate".into(),
            h: vec![0.12, 0.1, 0.07, 0.05],
            eigenpairs: 2,
            k: 0,
            j: 0,
            quasimode: true,
            output: Some(PathBuf::from("sweep.csv")),
            report: Some(PathBuf::from("fit.json")),
            workers: 1,
            fit_target: FitTarget::Lambda0,
            fit_powers: vec![1.0, 2.0],
            expect: Vec::new(),
            expect_tol: Vec::new(),
            expect_slope: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    pub max_restarts: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub krylov_dim: Option<usize>,
    pub seed: u64,
    pub allow_unconverged: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let base = SolverOptions::<f64>::default();
        Self {
            tol: base.tol,
            cg_tol: base.cg_tol,
            cg_max_iter: base.cg_max_iter,
            max_restarts: base.max_restarts,
            krylov_dim: None,
            seed: DEFAULT_SEED,
            allow_unconverged: false,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions<f64> {
        SolverOptions {
            tol: self.tol,
            seed: self.seed,
            krylov_dim: self.krylov_dim,
            max_restarts: self.max_restarts,
            cg_tol: self.cg_tol,
            cg_max_iter: self.cg_max_iter,
            start: None,
            allow_unconverged: self.allow_unconverged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvelopeConfig {
    pub beta: f64,
    pub order: u32,
    pub s_plateau: f64,
    pub t_plateau: f64,
    pub t_support: f64,
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        let t = TrialOptions::<f64>::default();
        Self {
            beta: 0.125,
            order: t.order,
            s_plateau: t.s_plateau,
            t_plateau: t.t_plateau,
            t_support: t.t_support,
        }
    }
}

impl EnvelopeConfig {
    pub fn trial_options(&self) -> TrialOptions<f64> {
        TrialOptions {
            order: self.order,
            s_plateau: self.s_plateau,
            t_plateau: self.t_plateau,
            t_support: self.t_support,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.normalize()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// Sorts `h` descending and rejects duplicates and nonpositive values.
    pub fn normalize(&mut self) -> Result<()> {
        if self.sweep.h.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::Config("every h must be positive and finite".into()));
        }
        self.sweep.h.sort_by(|a, b| b.total_cmp(a));
        if self.sweep.h.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("duplicate h values".into()));
        }
        Ok(())
    }

    pub fn band(&self) -> Band<f64> {
        Band::interval(self.grid.s_min, self.grid.s_max, self.grid.t_halfwidth)
    }

    pub fn build_field(&self) -> Result<FieldProfile<f64>> {
        self.field.build(self.band())
    }

    pub fn build_metric(&self) -> Result<BandMetric<f64>> {
        self.metric.build(self.band())
    }

    pub fn grid_for(&self, h: f64, b0: f64) -> Result<GridSpec<f64>> {
        let g = &self.grid;
        let s = (g.s_min, g.s_max);
        let t = (-g.t_halfwidth, g.t_halfwidth);
        match (g.ns, g.nt) {
            (Some(ns), Some(nt)) => GridSpec::new(s, t, ns, nt),
            (None, None) => {
                if !(g.points_per_length > 0.0) {
                    return Err(Error::Config("points_per_length must be positive".into()));
                }
                GridSpec::with_spacing(s, t, (h / b0).sqrt() / g.points_per_length)
            }
            _ => Err(Error::Config("give both grid.ns and grid.nt, or neither".into())),
        }
    }

    /// Structural checks: box, eigenpair count, fit expectations, and
    /// the grid resolution at every `h`.
    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if !(g.s_max > g.s_min) || !(g.t_halfwidth > 0.0) {
            return Err(Error::Config("empty grid box".into()));
        }
        let s = &self.sweep;
        if s.eigenpairs == 0 {
            return Err(Error::Config("sweep.eigenpairs must be at least 1".into()));
        }
        if s.fit_target == FitTarget::Gap && s.eigenpairs < 2 {
            return Err(Error::Config("a gap fit needs at least two eigenpairs".into()));
        }
        if !s.expect.is_empty() && (s.expect.len() != s.fit_powers.len() || s.expect_tol.len() != s.expect.len()) {
            return Err(Error::Config("expect and expect_tol need one entry per fit power".into()));
        }
        if !s.expect_slope.is_empty() && s.expect_slope.len() != 2 {
            return Err(Error::Config("expect_slope is a [lo, hi] pair".into()));
        }
        if s.workers == 0 {
            return Err(Error::Config("sweep.workers must be at least 1".into()));
        }
        let field = self.build_field()?;
        self.build_metric()?;
        for &h in &s.h {
            self.grid_for(h, field.b0())?.check_resolution(h, field.b0())?;
        }
        Ok(())
    }

    /// Digest of everything that determines a single-`h` result. The `h`
    /// list, output paths, fit settings and worker count are excluded, so
    /// extending a sweep reuses earlier rows.
    pub fn content_hash(&self) -> String {
        #[derive(Serialize)]
        struct Key<'a> {
            field: &'a FieldSpec,
            metric: &'a MetricSpec,
            grid: &'a GridConfig,
            solver: &'a SolverConfig,
            envelope: &'a EnvelopeConfig,
            eigenpairs: usize,
            k: u32,
            j: u32,
            quasimode: bool,
        }
        let key = Key {
            field: &self.field,
            metric: &self.metric,
            grid: &self.grid,
            solver: &self.solver,
            envelope: &self.envelope,
            eigenpairs: self.sweep.eigenpairs,
            k: self.sweep.k,
            j: self.sweep.j,
            quasimode: self.sweep.quasimode,
        };
        let bytes = serde_json::to_vec(&key).expect("config serializes to JSON");
        let digest = Sha256::digest(&bytes);
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Worker count: `MAGWELL_WORKERS` when set, otherwise the configured one.
pub fn resolve_workers(configured: usize, env: Option<&str>) -> Result<usize> {
    match env {
        None => Ok(configured.max(1)),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Config(format!("{WORKERS_ENV} = '{v}' is not a positive integer"))),
        },
    }
}
