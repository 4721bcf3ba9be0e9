use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, to_f64, Real};

/// Dirichlet box `[s_min, s_max] x [t_min, t_max]` sampled at its interior
/// points: `s_i = s_min + (i + 1) ds` with `ds = (s_max - s_min) / (ns + 1)`.
/// Unknowns are stored with `t` running fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T> {
    pub s_min: T,
    pub s_max: T,
    pub t_min: T,
    pub t_max: T,
    pub ns: usize,
    pub nt: usize,
}

impl<T: Real> GridSpec<T> {
    pub fn new(s: (T, T), t: (T, T), ns: usize, nt: usize) -> Result<Self> {
        if !(s.1 > s.0 && t.1 > t.0) || ns == 0 || nt == 0 {
            return Err(Error::Shape(format!(
                "grid box [{}, {}] x [{}, {}] with {ns} x {nt} points",
                s.0, s.1, t.0, t.1
            )));
        }
        Ok(Self {
            s_min: s.0,
            s_max: s.1,
            t_min: t.0,
            t_max: t.1,
            ns,
            nt,
        })
    }

    /// Smallest grid on the box whose spacings do not exceed `spacing`.
    pub fn with_spacing(s: (T, T), t: (T, T), spacing: T) -> Result<Self> {
        let count = |lo: T, hi: T| -> usize {
            let cells = ((hi - lo) / spacing).ceil();
            (to_f64(cells) as usize).max(2) - 1
        };
        Self::new(s, t, count(s.0, s.1), count(t.0, t.1))
    }

    pub fn len(&self) -> usize {
        self.ns * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ds(&self) -> T {
        (self.s_max - self.s_min) / from_usize(self.ns + 1)
    }

    pub fn dt(&self) -> T {
        (self.t_max - self.t_min) / from_usize(self.nt + 1)
    }

    #[inline]
    pub fn s(&self, i: usize) -> T {
        self.s_min + from_usize::<T>(i + 1) * self.ds()
    }

    #[inline]
    pub fn t(&self, j: usize) -> T {
        self.t_min + from_usize::<T>(j + 1) * self.dt()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nt + j
    }

    pub fn s_points(&self) -> Vec<T> {
        (0..self.ns).map(|i| self.s(i)).collect()
    }

    pub fn t_points(&self) -> Vec<T> {
        (0..self.nt).map(|j| self.t(j)).collect()
    }

    /// Largest spacing allowed at `h`: an eighth of the magnetic length.
    pub fn spacing_limit(h: T, b0: T) -> Option<T> {
        if b0 > T::zero() {
            Some((h / b0).sqrt() * lit(0.125))
        } else {
            None
        }
    }

    pub fn check_resolution(&self, h: T, b0: T) -> Result<()> {
        let Some(limit) = Self::spacing_limit(h, b0) else {
            return Ok(());
        };
        let spacing = self.ds().max(self.dt());
        if spacing > limit * (T::one() + lit::<T>(1e-12)) {
            return Err(Error::GridResolution {
                h: to_f64(h),
                spacing: to_f64(spacing),
                limit: to_f64(limit),
            });
        }
        Ok(())
    }
}
