//! Output time grids.

use alloc::format;
use alloc::vec::Vec;

use num_traits::Float;

use crate::{Error, Result};

/// Strictly increasing output times starting at `t = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        match times.first() {
            None => return Err(Error::InvalidGrid("empty grid".into())),
            Some(&t0) if t0 != 0.0 => {
                return Err(Error::InvalidGrid(format!(
                    "grid starts at {t0}, expected 0"
                )))
            }
            _ => {}
        }
        if let Some(w) = times
            .windows(2)
            .find(|w| !(w[1] > w[0]) || !w[1].is_finite())
        {
            return Err(Error::InvalidGrid(format!(
                "times not strictly increasing: {} then {}",
                w[0], w[1]
            )));
        }
        Ok(Self { times })
    }

    /// `0, step, 2 step, …, t_final`. `t_final` must be a whole number of
    /// steps (relative tolerance 1e-9).
    pub fn uniform(t_final: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(t_final >= 0.0) || !t_final.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "need step > 0 and t_final >= 0, got step {step}, t_final {t_final}"
            )));
        }
        let n = Float::round(t_final / step);
        if (n * step - t_final).abs() > 1e-9 * t_final.max(step) {
            return Err(Error::InvalidGrid(format!(
                "t_final {t_final} is not a multiple of {step}"
            )));
        }
        let n = n as usize;
        Self::new((0..=n).map(|k| k as f64 * step).collect())
    }

    /// `intervals + 1` equally spaced points on `[0, t_final]`.
    pub fn linspace(t_final: f64, intervals: usize) -> Result<Self> {
        if intervals == 0 {
            return Self::new(alloc::vec![0.0]);
        }
        let step = t_final / intervals as f64;
        Self::new((0..=intervals).map(|k| k as f64 * step).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> f64 {
        *self.times.last().expect("grid is never empty")
    }

    /// Number of sub-steps of size at most `max_dt` for each interval.
    pub(crate) fn substeps(&self, max_dt: f64) -> impl Iterator<Item = (f64, f64, usize)> + '_ {
        self.times.windows(2).map(move |w| {
            let span = w[1] - w[0];
            let n = Float::ceil(span / max_dt - 1e-9).max(1.0) as usize;
            (w[0], span / n as f64, n)
        })
    }

    /// Sub-steps of exactly `dt` per interval, failing if an interval is not
    /// a whole multiple of `dt` (relative tolerance 1e-6).
    pub(crate) fn exact_substeps(&self, dt: f64) -> Result<Vec<usize>> {
        self.times
            .windows(2)
            .map(|w| {
                let span = w[1] - w[0];
                let n = Float::round(span / dt);
                if n < 1.0 || (n * dt - span).abs() > 1e-6 * dt {
                    Err(Error::InvalidGrid(format!(
                        "interval [{}, {}] is not a multiple of dt = {dt}",
                        w[0], w[1]
                    )))
                } else {
                    Ok(n as usize)
                }
            })
            .collect()
    }
}
