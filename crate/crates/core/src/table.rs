//! Regular (s, t) sample tables with bicubic interpolation.

use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Values sampled on a tensor grid `s_i x t_j`, stored with `t` fastest.
#[derive(Debug, Clone)]
pub struct SampledTable<T> {
    s: Vec<T>,
    t: Vec<T>,
    values: Vec<T>,
}

impl<T: Real> SampledTable<T> {
    pub fn new(s: Vec<T>, t: Vec<T>, values: Vec<T>) -> Result<Self> {
        if s.len() < 2 || t.len() < 2 {
            return Err(Error::Format("table needs at least 2 samples per axis".into()));
        }
        if values.len() != s.len() * t.len() {
            return Err(Error::Format(format!(
                "table has {} values for a {}x{} grid",
                values.len(),
                s.len(),
                t.len()
            )));
        }
        for axis in [&s, &t] {
            if axis.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Format("table axes must be strictly increasing".into()));
            }
        }
        Ok(Self { s, t, values })
    }

    /// Reads a CSV with columns `s`, `t` and `column`. Rows may come in any
    /// order but must cover the full tensor grid exactly once.
    pub fn from_csv(path: impl AsRef<Path>, column: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path.as_ref())?;
        let headers = reader.headers()?.clone();
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Format(format!("missing column '{name}'")))
        };
        let (is, it, iv) = (find("s")?, find("t")?, find(column)?);
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|x| x.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Format(format!("bad number in row {:?}", rec)))
            };
            rows.push((parse(is)?, parse(it)?, parse(iv)?));
        }
        let mut s: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let mut t: Vec<f64> = rows.iter().map(|r| r.1).collect();
        for axis in [&mut s, &mut t] {
            axis.sort_by(|a, b| a.partial_cmp(b).unwrap());
            axis.dedup();
        }
        if s.len() * t.len() != rows.len() {
            return Err(Error::Format("CSV rows do not form a full tensor grid".into()));
        }
        let mut values = vec![f64::NAN; rows.len()];
        for (sv, tv, v) in rows {
            let i = s.binary_search_by(|x| x.partial_cmp(&sv).unwrap()).unwrap();
            let j = t.binary_search_by(|x| x.partial_cmp(&tv).unwrap()).unwrap();
            values[i * t.len() + j] = v;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Format("CSV rows do not form a full tensor grid".into()));
        }
        Self::new(
            s.into_iter().map(lit).collect(),
            t.into_iter().map(lit).collect(),
            values.into_iter().map(lit).collect(),
        )
    }

    pub fn s_bounds(&self) -> (T, T) {
        (self.s[0], *self.s.last().unwrap())
    }

    pub fn t_bounds(&self) -> (T, T) {
        (self.t[0], *self.t.last().unwrap())
    }

    fn at(&self, i: isize, j: isize) -> T {
        let i = i.clamp(0, self.s.len() as isize - 1) as usize;
        let j = j.clamp(0, self.t.len() as isize - 1) as usize;
        self.values[i * self.t.len() + j]
    }

    /// Bicubic (Catmull–Rom) interpolation; clamps outside the table.
    pub fn eval(&self, s: T, t: T) -> T {
        let (i, fs) = locate(&self.s, s);
        let (j, ft) = locate(&self.t, t);
        let ws = catmull_rom(fs);
        let wt = catmull_rom(ft);
        let mut acc = T::zero();
        for (a, wa) in ws.iter().enumerate() {
            let mut row = T::zero();
            for (b, wb) in wt.iter().enumerate() {
                row += *wb * self.at(i + a as isize - 1, j + b as isize - 1);
            }
            acc += *wa * row;
        }
        acc
    }
}

fn locate<T: Real>(axis: &[T], x: T) -> (isize, T) {
    let n = axis.len();
    if x <= axis[0] {
        return (0, T::zero());
    }
    if x >= axis[n - 1] {
        return (n as isize - 2, T::one());
    }
    let idx = axis.partition_point(|v| *v <= x) - 1;
    let f = (x - axis[idx]) / (axis[idx + 1] - axis[idx]);
    (idx as isize, f)
}

fn catmull_rom<T: Real>(f: T) -> [T; 4] {
    let half = lit::<T>(0.5);
    let f2 = f * f;
    let f3 = f2 * f;
    [
        half * (-f3 + lit::<T>(2.0) * f2 - f),
        half * (lit::<T>(3.0) * f3 - lit::<T>(5.0) * f2 + lit(2.0)),
        half * (lit::<T>(-3.0) * f3 + lit::<T>(4.0) * f2 + f),
        half * (f3 - f2),
    ]
}
