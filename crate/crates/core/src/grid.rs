//! Uniform time and space grids, sampled paths, and quadratic-variation
//! accumulation — the shared substrate for every estimator in this crate.

use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

/// Relative slack when matching a time to a grid point.
const GRID_SNAP_TOL: f64 = 1e-9;

/// Uniform partition of [0, t_end] into n_steps intervals.
///
/// Grid points are s_i = i * dt for i = 0..=n_steps with dt = t_end/n_steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_end: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        if !t_end.is_finite() || t_end <= 0.0 {
            return Err(Error::invalid(format!("t_end must be positive, got {t_end}")));
        }
        if n_steps == 0 {
            return Err(Error::invalid("n_steps must be at least 1"));
        }
        Ok(Self { t_end, n_steps })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    /// Grid point s_i. The final point is returned as t_end exactly.
    pub fn point(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.t_end
        } else {
            i as f64 * self.dt()
        }
    }

    /// Index of a time that must lie on the grid (within a relative snap
    /// tolerance); off-grid times are rejected.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let r = t / self.dt();
        let i = r.round();
        if i < 0.0 || i > self.n_steps as f64 {
            return Err(Error::invalid(format!(
                "time {t} outside grid [0, {}]",
                self.t_end
            )));
        }
        let i = i as usize;
        if (self.point(i) - t).abs() > GRID_SNAP_TOL * self.t_end.max(1.0) {
            return Err(Error::invalid(format!("time {t} is not a grid point")));
        }
        Ok(i)
    }
}

/// make_time_grid(t_end, n_steps): convenience constructor mirroring the
/// operation name used by the experiment drivers.
pub fn make_time_grid(t_end: f64, n_steps: usize) -> Result<TimeGrid> {
    TimeGrid::new(t_end, n_steps)
}

/// Uniform spatial bins: left-closed right-open cells [x_j, x_j + delta)
/// partitioning [x_min, x_max), with x_j = x_min + j * delta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceGrid {
    x_min: f64,
    x_max: f64,
    n_bins: usize,
}

impl SpaceGrid {
    pub fn new(x_min: f64, x_max: f64, n_bins: usize) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() || x_min >= x_max {
            return Err(Error::invalid(format!(
                "space grid needs x_min < x_max, got [{x_min}, {x_max})"
            )));
        }
        if n_bins == 0 {
            return Err(Error::invalid("n_bins must be at least 1"));
        }
        Ok(Self { x_min, x_max, n_bins })
    }

    /// Covering grid with edges snapped to multiples of `delta`: the smallest
    /// snapped grid containing [lo - pad, hi + pad] where pad adds both a 10%
    /// range margin and `margin_bins` whole bins.
    pub fn covering(lo: f64, hi: f64, delta: f64, margin_bins: usize) -> Result<Self> {
        if !delta.is_finite() || delta <= 0.0 {
            return Err(Error::invalid(format!("bin width must be positive, got {delta}")));
        }
        if lo > hi {
            return Err(Error::invalid("covering range has lo > hi"));
        }
        let pad = 0.1 * (hi - lo) + margin_bins.max(1) as f64 * delta;
        let j_min = ((lo - pad) / delta).floor();
        let j_max = ((hi + pad) / delta).ceil();
        let n_bins = (j_max - j_min) as usize;
        Self::new(j_min * delta, j_max * delta, n_bins)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    /// Bin width delta.
    pub fn delta(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_bins as f64
    }

    /// Left edge x_j of bin j; j = n_bins gives the right boundary.
    pub fn edge(&self, j: usize) -> f64 {
        if j == self.n_bins {
            self.x_max
        } else {
            self.x_min + j as f64 * self.delta()
        }
    }

    /// Bin containing x, or None when x is outside [x_min, x_max).
    pub fn bin_index(&self, x: f64) -> Option<usize> {
        if !(x >= self.x_min && x < self.x_max) {
            return None;
        }
        let j = ((x - self.x_min) / self.delta()).floor() as usize;
        // rounding can push a point just below x_max past the last cell
        Some(j.min(self.n_bins - 1))
    }
}

/// A process sampled on a uniform time grid together with its cumulative
/// quadratic variation.
///
/// Invariants: values and qv both have n_steps + 1 entries, qv[0] = 0 and qv
/// is nondecreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    grid: TimeGrid,
    values: Vec<f64>,
    qv: Vec<f64>,
}

impl Path {
    /// Path with realized quadratic variation (cumulative squared increments).
    pub fn from_values(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_steps() + 1 {
            return Err(Error::invalid(format!(
                "expected {} values, got {}",
                grid.n_steps() + 1,
                values.len()
            )));
        }
        let qv = realized_qv(&values)?;
        Ok(Self { grid, values, qv })
    }

    /// Path with a prescribed cumulative quadratic-variation sequence
    /// (synthetic instances for the exact identity tests).
    pub fn with_qv(grid: TimeGrid, values: Vec<f64>, qv: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_steps() + 1 || qv.len() != values.len() {
            return Err(Error::invalid("values/qv length must be n_steps + 1"));
        }
        if qv[0] != 0.0 {
            return Err(Error::invalid("qv must start at 0"));
        }
        if qv.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::invalid("qv must be nondecreasing"));
        }
        Ok(Self { grid, values, qv })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn qv(&self) -> &[f64] {
        &self.qv
    }

    pub fn qv_end(&self) -> f64 {
        *self.qv.last().unwrap()
    }

    /// Increment of quadratic variation over step i.
    #[inline]
    pub fn qv_increment(&self, i: usize) -> f64 {
        self.qv[i + 1] - self.qv[i]
    }

    /// (min, max) of the sampled values.
    pub fn range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }
}

/// Cumulative sum of squared increments: qv[0] = 0 and
/// qv[i] = sum_{k<i} (values[k+1] - values[k])^2.
pub fn realized_qv(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::invalid("realized_qv needs at least one value"));
    }
    let mut qv = vec![0.0];
    qv.reserve(values.len() - 1);
    let mut acc = 0.0f64;
    for w in values.windows(2) {
        let d = w[1] - w[0];
        acc += d * d;
        qv.push(acc);
    }
    Ok(qv)
}

/// Conservation total sum_j values[j] * delta, compensated so that the
/// discrete identity against realized qv holds to a few eps.
pub(crate) fn field_mass(values: &[f64], delta: f64) -> f64 {
    let mut acc = CompensatedSum::new();
    for &v in values {
        acc.add(v * delta);
    }
    acc.value()
}
