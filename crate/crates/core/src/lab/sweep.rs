use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::sync::mpsc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{resolve_workers, ExperimentConfig, FitTarget, WORKERS_ENV};
use super::fit::{exponent_fit, fit_powers, FitReport};
use crate::error::{Error, Result};
use crate::field::{extract_well, gauge_potential, FieldProfile, GaugePotential, WellOptions};
use crate::geometry::BandMetric;
use crate::modelspectra::{lambda_band, miniwell_eigenvalue};
use crate::operator::{assemble, lowest_eigenpairs, residual_norm, DiscreteOperator};
use crate::oscillator::{assemble_trial_state, build_order2_quasimode, Order2Quasimode, QuasimodeBundle};

/// Outcome of one `h` of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub h: f64,
    /// Ascending; empty when the solve failed.
    pub eigenvalues: Vec<f64>,
    /// Largest relative eigenpair residual reported by the solver.
    pub solver_residual: Option<f64>,
    pub converged: bool,
    pub quasimode_lambda: Option<f64>,
    /// `|H Phi - lambda Phi| / |Phi|` of the quasimode.
    pub residual: Option<f64>,
    /// Asymptotic prediction for the configured `k` (and `j` on a miniwell).
    pub asymptote: Option<f64>,
    pub iterations: usize,
    pub inner_iterations: usize,
    pub seconds: f64,
    pub error: Option<String>,
    pub config_hash: String,
}

impl SweepRecord {
    fn failed(h: f64, hash: &str, err: &Error, seconds: f64) -> Self {
        Self {
            h,
            eigenvalues: Vec::new(),
            solver_residual: None,
            converged: false,
            quasimode_lambda: None,
            residual: None,
            asymptote: None,
            iterations: 0,
            inner_iterations: 0,
            seconds,
            error: Some(err.to_string()),
            config_hash: hash.to_string(),
        }
    }

    /// Solved and free of errors. An unconverged solve counts as clean
    /// only when the configuration allowed it.
    pub fn is_clean(&self) -> bool {
        self.error.is_none() && !self.eigenvalues.is_empty()
    }

    /// Usable for fits: the eigen solve itself succeeded.
    pub fn is_solved(&self) -> bool {
        self.converged && !self.eigenvalues.is_empty()
    }

    /// `lambda0 <= lambda + residual`, when a quasimode was measured.
    pub fn upper_bound_holds(&self) -> Option<bool> {
        let (l, r) = (self.quasimode_lambda?, self.residual?);
        let l0 = *self.eigenvalues.first()?;
        Some(l0 <= l + r)
    }

    pub fn target(&self, target: FitTarget) -> Option<f64> {
        match target {
            FitTarget::Lambda0 => self.eigenvalues.first().copied(),
            FitTarget::Gap => match self.eigenvalues.as_slice() {
                [a, b, ..] => Some(b - a),
                _ => None,
            },
            FitTarget::Residual => self.residual,
        }
    }
}

fn header(m: usize) -> Vec<String> {
    let mut cols = vec!["h".to_string()];
    cols.extend((0..m).map(|i| format!("lambda{i}")));
    for c in [
        "residual",
        "iters",
        "seconds",
        "solver_residual",
        "inner_iters",
        "converged",
        "lambda_qm",
        "asymptote",
        "config_hash",
        "status",
    ] {
        cols.push(c.to_string());
    }
    cols
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn row(r: &SweepRecord, m: usize) -> Vec<String> {
    let mut out = vec![r.h.to_string()];
    for i in 0..m {
        out.push(opt(r.eigenvalues.get(i).copied()));
    }
    out.push(opt(r.residual));
    out.push(r.iterations.to_string());
    out.push(r.seconds.to_string());
    out.push(opt(r.solver_residual));
    out.push(r.inner_iterations.to_string());
    out.push(r.converged.to_string());
    out.push(opt(r.quasimode_lambda));
    out.push(opt(r.asymptote));
    out.push(r.config_hash.clone());
    out.push(r.error.clone().unwrap_or_else(|| "ok".into()));
    out
}

/// Writes records as CSV with `m` eigenvalue columns.
pub fn write_sweep_csv<W: Write>(w: W, records: &[SweepRecord], m: usize) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(header(m))?;
    for r in records {
        wr.write_record(row(r, m))?;
    }
    wr.flush()?;
    Ok(())
}

fn parse_f64(field: &str, name: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| Error::Format(format!("column {name}: '{field}' is not a number")))
}

fn parse_opt(field: &str, name: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_f64(field, name).map(Some)
    }
}

/// Parses CSV written by [`write_sweep_csv`]; returns the records and the
/// number of eigenvalue columns.
pub fn read_sweep_csv<R: Read>(r: R) -> Result<(Vec<SweepRecord>, usize)> {
    let mut rd = csv::Reader::from_reader(r);
    let headers = rd.headers()?.clone();
    let col: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, n)| (n, i)).collect();
    let m = (0..).take_while(|i| col.contains_key(format!("lambda{i}").as_str())).count();
    if headers.iter().collect::<Vec<_>>() != header(m) {
        return Err(Error::Format(format!("unexpected sweep header {:?}", headers)));
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let get = |name: &str| &rec[col[name]];
        let mut eigenvalues = Vec::with_capacity(m);
        for i in 0..m {
            let name = format!("lambda{i}");
            if let Some(v) = parse_opt(get(&name), &name)? {
                eigenvalues.push(v);
            }
        }
        let status = get("status");
        out.push(SweepRecord {
            h: parse_f64(get("h"), "h")?,
            eigenvalues,
            solver_residual: parse_opt(get("solver_residual"), "solver_residual")?,
            converged: get("converged")
                .parse()
                .map_err(|_| Error::Format(format!("converged: '{}'", get("converged"))))?,
            quasimode_lambda: parse_opt(get("lambda_qm"), "lambda_qm")?,
            residual: parse_opt(get("residual"), "residual")?,
            asymptote: parse_opt(get("asymptote"), "asymptote")?,
            iterations: get("iters")
                .parse()
                .map_err(|_| Error::Format(format!("iters: '{}'", get("iters"))))?,
            inner_iterations: get("inner_iters")
                .parse()
                .map_err(|_| Error::Format(format!("inner_iters: '{}'", get("inner_iters"))))?,
            seconds: parse_f64(get("seconds"), "seconds")?,
            error: (status != "ok").then(|| status.to_string()),
            config_hash: get("config_hash").to_string(),
        });
    }
    Ok((out, m))
}

pub fn load_sweep_csv(path: impl AsRef<Path>) -> Result<(Vec<SweepRecord>, usize)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_sweep_csv(file)
}

/// Everything that does not depend on `h`.
pub struct Prepared {
    pub config: ExperimentConfig,
    pub field: FieldProfile<f64>,
    pub metric: BandMetric<f64>,
    pub gauge: GaugePotential<f64>,
    /// Well point, frozen coefficients and asymptote inputs, or why the
    /// quasimode cannot be built.
    pub well: Result<WellPoint>,
    pub hash: String,
}

#[derive(Debug, Clone)]
pub struct WellPoint {
    pub x: f64,
    pub quasimode: Order2Quasimode<f64>,
    pub beta2: f64,
    pub r: f64,
    /// `(V_k(x0), V_k''(x0))` when `V_k` has a nondegenerate interior minimum.
    pub miniwell: Option<(f64, f64)>,
}

impl Prepared {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let field = config.build_field()?;
        let metric = config.build_metric()?;
        let gauge = gauge_potential(&field, &metric);
        let well = well_point(config, &field, &metric);
        Ok(Self {
            config: config.clone(),
            hash: config.content_hash(),
            field,
            metric,
            gauge,
            well,
        })
    }

    pub fn operator(&self, h: f64) -> Result<DiscreteOperator<f64>> {
        let grid = self.config.grid_for(h, self.field.b0())?;
        assemble(h, &self.field, &self.metric, &self.gauge, &grid)
    }

    /// Samples the quasimode on the grid of `op` and measures its residual.
    pub fn quasimode(&self, op: &DiscreteOperator<f64>) -> Result<QuasimodeBundle<f64>> {
        let w = self.well.as_ref().map_err(|e| e.clone())?;
        let env = &self.config.envelope;
        let mut bundle = assemble_trial_state(
            &w.quasimode,
            op.h,
            env.beta,
            w.x,
            &op.grid,
            &self.metric,
            &env.trial_options(),
        )?;
        residual_norm(op, &mut bundle)?;
        Ok(bundle)
    }

    pub fn asymptote(&self, h: f64) -> Option<f64> {
        let w = self.well.as_ref().ok()?;
        let s = &self.config.sweep;
        let b0 = self.field.b0();
        let value = match w.miniwell {
            Some((vk, delta)) => miniwell_eigenvalue(h, s.j, s.k, b0, w.beta2, vk, delta),
            None => lambda_band(h, s.k, b0, w.beta2, w.r),
        };
        value.ok().map(|a| a.value)
    }

    pub fn solve(&self, h: f64) -> SweepRecord {
        let start = Instant::now();
        let fail = |e: &Error| SweepRecord::failed(h, &self.hash, e, start.elapsed().as_secs_f64());
        let op = match self.operator(h) {
            Ok(op) => op,
            Err(e) => return fail(&e),
        };
        let eig = match lowest_eigenpairs(&op, self.config.sweep.eigenpairs, &self.config.solver.options()) {
            Ok(e) => e,
            Err(e) => return fail(&e),
        };
        let mut rec = SweepRecord {
            h,
            solver_residual: eig.residuals.iter().copied().reduce(f64::max),
            eigenvalues: eig.eigenvalues,
            converged: eig.converged,
            quasimode_lambda: None,
            residual: None,
            asymptote: self.asymptote(h),
            iterations: eig.iterations,
            inner_iterations: eig.inner_iterations,
            seconds: 0.0,
            error: None,
            config_hash: self.hash.clone(),
        };
        if !rec.converged && !self.config.solver.allow_unconverged {
            rec.error = Some("eigensolver did not converge".into());
        }
        if self.config.sweep.quasimode {
            match self.quasimode(&op) {
                Ok(b) => {
                    rec.quasimode_lambda = Some(b.lambda);
                    rec.residual = b.residual;
                }
                Err(e) => rec.error = Some(e.to_string()),
            }
        }
        rec.seconds = start.elapsed().as_secs_f64();
        rec
    }
}

fn well_point(config: &ExperimentConfig, field: &FieldProfile<f64>, metric: &BandMetric<f64>) -> Result<WellPoint> {
    let k = config.sweep.k;
    let geometry = metric.curve_coefficients()?;
    let data = extract_well(field, &geometry, &[k], &WellOptions::default())?;
    let band = data.band(k).ok_or_else(|| Error::ConstructionBug(format!("band {k} missing")))?;
    let dt = field.band().t_halfwidth * 1e-3;
    // A tie means V_k is flat along the curve; any point is a minimum and
    // the middle of the box keeps the envelope away from the walls.
    let (x, miniwell) = if band.tied {
        (0.5 * (config.grid.s_min + config.grid.s_max), None)
    } else {
        let nondegenerate = band.delta_k > 1e-8;
        (band.x0, nondegenerate.then_some((band.vk_min, band.delta_k)))
    };
    let beta2 = field.beta2(x, dt);
    let quasimode = build_order2_quasimode(k, field.b0(), geometry.a1(x), geometry.a2(x), beta2)?;
    Ok(WellPoint {
        x,
        quasimode,
        beta2,
        r: geometry.r_gamma(x),
        miniwell,
    })
}

/// Result of [`run_sweep`]: one record per configured `h`, descending.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    /// Number of `h` values solved in this run.
    pub solved: usize,
    /// Number of `h` values taken from an earlier run.
    pub reused: usize,
    pub config_hash: String,
}

pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepOutcome> {
    run_sweep_with(config, |_| {})
}

/// Runs the sweep, calling `on_record` as each new `h` completes. Rows of
/// an existing output file with the same content hash are reused.
pub fn run_sweep_with(config: &ExperimentConfig, mut on_record: impl FnMut(&SweepRecord)) -> Result<SweepOutcome> {
    let mut config = config.clone();
    config.normalize()?;
    let hash = config.content_hash();
    let m = config.sweep.eigenpairs;
    let workers = resolve_workers(config.sweep.workers, std::env::var(WORKERS_ENV).ok().as_deref())?;

    let mut done: Vec<SweepRecord> = Vec::new();
    if let Some(path) = &config.sweep.output {
        if path.exists() {
            if let Ok((old, old_m)) = load_sweep_csv(path) {
                if old_m == m {
                    done = old
                        .into_iter()
                        .filter(|r| r.config_hash == hash && r.is_clean() && config.sweep.h.contains(&r.h))
                        .collect();
                }
            }
        }
    }
    let pending: Vec<f64> = config
        .sweep
        .h
        .iter()
        .copied()
        .filter(|h| !done.iter().any(|r| r.h == *h))
        .collect();
    let reused = done.len();

    if pending.is_empty() {
        done.sort_by(|a, b| b.h.total_cmp(&a.h));
        return Ok(SweepOutcome {
            records: done,
            solved: 0,
            reused,
            config_hash: hash,
        });
    }

    let prepared = Prepared::new(&config)?;
    let mut writer = match &config.sweep.output {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let mut wr = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
            wr.write_record(header(m))?;
            for r in &done {
                wr.write_record(row(r, m))?;
            }
            wr.flush()?;
            Some(wr)
        }
        None => None,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let (tx, rx) = mpsc::channel::<SweepRecord>();
    let mut fresh = Vec::with_capacity(pending.len());
    let mut write_error = None;
    std::thread::scope(|scope| {
        let prepared = &prepared;
        let pending = &pending;
        scope.spawn(move || {
            pool.install(|| {
                pending.par_iter().with_max_len(1).for_each_with(tx, |tx, &h| {
                    let _ = tx.send(prepared.solve(h));
                })
            })
        });
        for rec in rx {
            if let Some(wr) = writer.as_mut() {
                if let Err(e) = wr.write_record(row(&rec, m)).and_then(|_| wr.flush().map_err(Into::into)) {
                    write_error.get_or_insert(Error::from(e));
                }
            }
            on_record(&rec);
            fresh.push(rec);
        }
    });
    if let Some(e) = write_error {
        return Err(e);
    }

    if reused == 0 && fresh.iter().all(|r| r.eigenvalues.is_empty()) {
        let summary: Vec<String> = fresh
            .iter()
            .map(|r| format!("h={}: {}", r.h, r.error.as_deref().unwrap_or("unknown")))
            .collect();
        return Err(Error::SweepFailed(summary.join("; ")));
    }
    let solved = fresh.len();
    let mut records = done;
    records.extend(fresh);
    records.sort_by(|a, b| b.h.total_cmp(&a.h));
    Ok(SweepOutcome {
        records,
        solved,
        reused,
        config_hash: hash,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// JSON summary of a sweep: the fit and every configured check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub name: String,
    pub config_hash: String,
    pub target: FitTarget,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitReport>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// `(h, value)` pairs of the fit target over solved records, plus the
/// excluded `h` values.
pub fn fit_data(records: &[SweepRecord], target: FitTarget) -> (Vec<(f64, f64)>, Vec<f64>) {
    let mut pairs = Vec::new();
    let mut excluded = Vec::new();
    for r in records {
        // The quasimode residual does not depend on the eigensolver.
        let usable = target == FitTarget::Residual || r.is_solved();
        match r.target(target) {
            Some(v) if usable => pairs.push((r.h, v)),
            _ => excluded.push(r.h),
        }
    }
    (pairs, excluded)
}

/// Power fit (when powers are given) and exponent fit (when the data are
/// positive and at least three) of `target`.
pub fn fit_records(records: &[SweepRecord], target: FitTarget, powers: &[f64]) -> Result<FitReport> {
    let (pairs, excluded) = fit_data(records, target);
    let mut report = if powers.is_empty() {
        FitReport {
            powers: Vec::new(),
            coefficients: Vec::new(),
            rss: 0.0,
            points: pairs.len(),
            slope: None,
            slope_stderr: None,
            prefactor: None,
            excluded: Vec::new(),
        }
    } else {
        fit_powers(&pairs, powers)?
    };
    if pairs.len() >= 3 && pairs.iter().all(|p| p.1 > 0.0) {
        report = report.with_exponent(&exponent_fit(&pairs)?);
    }
    report.excluded = excluded;
    Ok(report)
}

pub fn sweep_report(config: &ExperimentConfig, outcome: &SweepOutcome) -> SweepReport {
    let s = &config.sweep;
    let mut checks = Vec::new();
    for r in &outcome.records {
        checks.push(Check {
            name: format!("solve h={}", r.h),
            passed: r.is_clean(),
            detail: r.error.clone().unwrap_or_else(|| format!("{} iterations", r.iterations)),
        });
        if s.k == 0 {
            if let Some(ok) = r.upper_bound_holds() {
                checks.push(Check {
                    name: format!("upper bound h={}", r.h),
                    passed: ok,
                    detail: format!(
                        "lambda0 = {}, quasimode {} + {}",
                        r.eigenvalues[0],
                        r.quasimode_lambda.unwrap_or(f64::NAN),
                        r.residual.unwrap_or(f64::NAN)
                    ),
                });
            }
        }
    }
    let wants_fit = !s.fit_powers.is_empty() || !s.expect_slope.is_empty();
    let fit = if wants_fit && !outcome.records.is_empty() {
        match fit_records(&outcome.records, s.fit_target, &s.fit_powers) {
            Ok(f) => Some(f),
            Err(e) => {
                checks.push(Check {
                    name: "fit".into(),
                    passed: false,
                    detail: e.to_string(),
                });
                None
            }
        }
    } else {
        None
    };
    if let Some(f) = &fit {
        for ((p, want), tol) in s.fit_powers.iter().zip(&s.expect).zip(&s.expect_tol) {
            let got = f.coefficient(*p).unwrap_or(f64::NAN);
            checks.push(Check {
                name: format!("coefficient h^{p}"),
                passed: (got - want).abs() <= *tol,
                detail: format!("{got} vs {want} +- {tol}"),
            });
        }
        if let [lo, hi] = s.expect_slope[..] {
            let slope = f.slope.unwrap_or(f64::NAN);
            checks.push(Check {
                name: "slope".into(),
                passed: slope >= lo && slope <= hi,
                detail: format!("{slope} in [{lo}, {hi}]"),
            });
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    SweepReport {
        name: s.name.clone(),
        config_hash: outcome.config_hash.clone(),
        target: s.fit_target,
        fit,
        checks,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(h: f64, eigenvalues: Vec<f64>) -> SweepRecord {
        SweepRecord {
            h,
            eigenvalues,
            solver_residual: Some(1e-10),
            converged: true,
            quasimode_lambda: Some(h * 1.01),
            residual: Some(h * h),
            asymptote: None,
            iterations: 14,
            inner_iterations: 3000,
            seconds: 0.25,
            error: None,
            config_hash: "00ff".into(),
        }
    }

    #[test]
    fn csv_header_layout() {
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &[record(0.1, vec![0.1, 0.3])], 2).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("h,lambda0,lambda1,residual,iters,seconds,"));
    }

    #[test]
    fn failed_rows_roundtrip() {
        let mut r = SweepRecord::failed(0.05, "ab", &Error::Convergence("stalled, badly".into()), 1.5);
        r.asymptote = Some(0.0501);
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &[r.clone()], 3).unwrap();
        let (back, m) = read_sweep_csv(buf.as_slice()).unwrap();
        assert_eq!(m, 3);
        assert_eq!(back, vec![r]);
    }

    #[test]
    fn upper_bound_and_targets() {
        let r = record(0.1, vec![0.1, 0.3]);
        assert_eq!(r.upper_bound_holds(), Some(true));
        assert!((r.target(FitTarget::Gap).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(r.target(FitTarget::Residual), Some(0.1 * 0.1));
    }

    #[test]
    fn fit_excludes_failed_records() {
        let mut recs: Vec<_> = [0.12, 0.1, 0.07, 0.05]
            .iter()
            .map(|&h| record(h, vec![h + 0.5 * h * h]))
            .collect();
        recs.push(SweepRecord::failed(0.03, "x", &Error::Convergence("no".into()), 0.0));
        let f = fit_records(&recs, FitTarget::Lambda0, &[1.0, 2.0]).unwrap();
        assert_eq!(f.excluded, vec![0.03]);
        assert_eq!(f.points, 4);
        assert!((f.coefficients[1] - 0.5).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn csv_roundtrip(
            rows in prop::collection::vec(
                (1e-4f64..1.0, prop::collection::vec(-1e3f64..1e3, 2), any::<bool>(),
                 prop::option::of(0.0f64..1.0), 0usize..100000, prop::option::of("[a-z ,\"]{0,12}")),
                0..8),
        ) {
            let records: Vec<SweepRecord> = rows
                .into_iter()
                .map(|(h, mut ev, converged, res, its, err)| {
                    ev.sort_by(f64::total_cmp);
                    SweepRecord {
                        h,
                        eigenvalues: ev,
                        solver_residual: res,
                        converged,
                        quasimode_lambda: res.map(|r| r * 3.0),
                        residual: res,
                        asymptote: None,
                        iterations: its,
                        inner_iterations: its * 7,
                        seconds: h / 3.0,
                        error: err.filter(|e| e != "ok"),
                        config_hash: "beef".into(),
                    }
                })
                .collect();
            let mut buf = Vec::new();
            write_sweep_csv(&mut buf, &records, 2).unwrap();
            let (back, m) = read_sweep_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(m, 2);
            prop_assert_eq!(back, records);
        }
    }
}
