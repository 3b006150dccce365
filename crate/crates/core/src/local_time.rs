//! Local-time fields and sheets estimated from a path via occupation density,
//! with an independent Tanaka-formula cross-check.
//!
//! The estimator bins quadratic-variation mass by where the path sits at the
//! left endpoint of each step:
//!
//! ```text
//! L_t^{x_j} = (1/delta) * sum over steps s_i < t of 1_{[x_j, x_j + delta)}(X_{s_i}) (qv[i+1] - qv[i])
//! ```
//!
//! With realized qv and a covering grid this makes the conservation identity
//! sum_j L_t^{x_j} delta = <X,X>_t exact up to a few eps, which anchors every
//! other check in the crate. Out-of-range samples are a hard error: silent
//! clipping would silently break conservation.

use crate::error::{Error, Result};
use crate::grid::{field_mass, Path, SpaceGrid};
use crate::sum::CompensatedSum;

/// E|Z| = sqrt(2/pi) for a standard gaussian: the mean local time of standard
/// brownian motion at level 0 and t = 1, used as a Monte Carlo reference.
pub const MEAN_ABS_STD_GAUSSIAN: f64 = 0.797_884_560_802_865_4;

/// The estimated local-time field x_j -> L_t^{x_j} at one time.
#[derive(Debug, Clone)]
pub struct LocalTimeField {
    space: SpaceGrid,
    t: f64,
    values: Vec<f64>,
}

impl LocalTimeField {
    pub fn space(&self) -> &SpaceGrid {
        &self.space
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// One value per bin, in bin order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Conservation total sum_j L^{x_j} * delta.
    pub fn total_mass(&self) -> f64 {
        field_mass(&self.values, self.space.delta())
    }
}

/// L_{s_k}^{x_j} at increasing checkpoint times; row 0 is the zero field.
#[derive(Debug, Clone)]
pub struct LocalTimeSheet {
    space: SpaceGrid,
    checkpoints: Vec<f64>,
    values: Vec<f64>, // row-major, checkpoints x bins
}

impl LocalTimeSheet {
    pub fn space(&self) -> &SpaceGrid {
        &self.space
    }

    pub fn checkpoints(&self) -> &[f64] {
        &self.checkpoints
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let n = self.space.n_bins();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn n_rows(&self) -> usize {
        self.checkpoints.len()
    }

    /// The final row as a standalone field.
    pub fn final_field(&self) -> LocalTimeField {
        LocalTimeField {
            space: self.space,
            t: *self.checkpoints.last().unwrap(),
            values: self.row(self.n_rows() - 1).to_vec(),
        }
    }
}

/// Per-bin compensated accumulation of qv mass for samples before time index
/// `upto`; shared by the field and sheet constructors.
struct MassAccumulator {
    space: SpaceGrid,
    bins: Vec<CompensatedSum>,
}

impl MassAccumulator {
    fn new(space: SpaceGrid) -> Self {
        Self { space, bins: vec![CompensatedSum::new(); space.n_bins()] }
    }

    fn deposit(&mut self, path: &Path, i: usize) -> Result<()> {
        let x = path.values()[i];
        let j = self.space.bin_index(x).ok_or_else(|| {
            Error::range(format!(
                "sample X[{i}] = {x} outside space grid [{}, {})",
                self.space.x_min(),
                self.space.x_max()
            ))
        })?;
        self.bins[j].add(path.qv_increment(i));
        Ok(())
    }

    fn field_values(&self) -> Vec<f64> {
        let delta = self.space.delta();
        self.bins.iter().map(|b| b.value() / delta).collect()
    }
}

/// Occupation-density local time at a grid time t.
pub fn occupation_local_time(path: &Path, space: SpaceGrid, t: f64) -> Result<LocalTimeField> {
    let m = path.grid().index_of(t)?;
    let mut acc = MassAccumulator::new(space);
    for i in 0..m {
        acc.deposit(path, i)?;
    }
    Ok(LocalTimeField { space, t, values: acc.field_values() })
}

/// Local-time sheet at the given checkpoints (grid points, strictly
/// increasing, starting at 0).
pub fn local_time_sheet(path: &Path, space: SpaceGrid, checkpoints: &[f64]) -> Result<LocalTimeSheet> {
    if checkpoints.is_empty() || checkpoints[0] != 0.0 {
        return Err(Error::invalid("checkpoints must start at 0"));
    }
    let mut indices = Vec::with_capacity(checkpoints.len());
    for &t in checkpoints {
        indices.push(path.grid().index_of(t)?);
    }
    if indices.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("checkpoints must be strictly increasing"));
    }

    let n_bins = space.n_bins();
    let mut acc = MassAccumulator::new(space);
    let mut values = vec![0.0; n_bins]; // row at s = 0
    values.reserve(checkpoints.len().saturating_sub(1) * n_bins);
    let mut i = 0usize;
    for &stop in &indices[1..] {
        while i < stop {
            acc.deposit(path, i)?;
            i += 1;
        }
        values.extend(acc.field_values());
    }
    Ok(LocalTimeSheet { space, checkpoints: checkpoints.to_vec(), values })
}

/// Dense checkpoint list: every grid point up to and including t.
pub fn dense_checkpoints(path: &Path, t: f64) -> Result<Vec<f64>> {
    let m = path.grid().index_of(t)?;
    Ok((0..=m).map(|i| path.grid().point(i)).collect())
}

/// Discrete Tanaka-formula estimate of L_t^a over the whole path:
///
/// ```text
/// |X_t - a| - |X_0 - a| - sum_i sgn(X_{s_i} - a) (X_{s_{i+1}} - X_{s_i})
/// ```
///
/// with sgn(0) = -1, matching the right-local-time convention of the
/// occupation bins [a, a + delta). An independent cross-check: it never sees
/// the qv sequence or the space grid.
pub fn tanaka_local_time(path: &Path, a: f64) -> f64 {
    let values = path.values();
    let mut stoch = CompensatedSum::new();
    for w in values.windows(2) {
        let sgn = if w[0] - a > 0.0 { 1.0 } else { -1.0 };
        stoch.add(sgn * (w[1] - w[0]));
    }
    (values[values.len() - 1] - a).abs() - (values[0] - a).abs() - stoch.value()
}

/// |sum_j L^{x_j} delta - qv_t|, the discrete conservation defect.
pub fn conservation_defect(field: &LocalTimeField, qv_t: f64) -> f64 {
    (field.total_mass() - qv_t).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_time_grid;
    use crate::rng::SeedPolicy;
    use crate::simulate::{deterministic_path, simulate, ProcessSpec, QvMode};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn zigzag4() -> Path {
        deterministic_path("zigzag", make_time_grid(1.0, 4).unwrap()).unwrap()
    }

    fn grid3() -> SpaceGrid {
        // bins [-1,0), [0,1), [1,2)
        SpaceGrid::new(-1.0, 2.0, 3).unwrap()
    }

    #[test]
    fn constant_path_gives_zero_field() {
        let p = deterministic_path("constant", make_time_grid(1.0, 8).unwrap()).unwrap();
        let f = occupation_local_time(&p, SpaceGrid::new(-1.0, 1.0, 4).unwrap(), 1.0).unwrap();
        assert!(f.values().iter().all(|&v| v == 0.0));
        assert_eq!(conservation_defect(&f, 0.0), 0.0);
    }

    #[test]
    fn single_bin_concentration() {
        // all samples in one bin: field is qv/delta there, zero elsewhere
        let grid = make_time_grid(1.0, 3).unwrap();
        let p = Path::with_qv(
            grid,
            vec![0.1, 0.2, 0.15, 0.9],
            vec![0.0, 1.0, 1.5, 3.0],
        )
        .unwrap();
        let space = SpaceGrid::new(0.0, 2.0, 4).unwrap(); // delta = 0.5
        let f = occupation_local_time(&p, space, 1.0).unwrap();
        // samples at i < 3 are 0.1, 0.2, 0.15, all in bin 0; total qv mass 3.0
        assert_abs_diff_eq!(f.values()[0], 3.0 / 0.5, epsilon = 1e-12);
        assert!(f.values()[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zigzag_field_and_conservation() {
        let p = zigzag4();
        let f = occupation_local_time(&p, grid3(), 1.0).unwrap();
        // samples 0,1,0,1 alternate bins 1 and 2 with unit increments
        assert_eq!(f.values(), &[0.0, 2.0, 2.0]);
        assert!(conservation_defect(&f, p.qv_end()) <= 1e-12);
    }

    #[test]
    fn out_of_range_sample_is_an_error() {
        let p = zigzag4();
        let space = SpaceGrid::new(-1.0, 1.0, 2).unwrap(); // misses value 1.0
        assert!(matches!(
            occupation_local_time(&p, space, 1.0),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn off_grid_time_is_an_error() {
        let p = zigzag4();
        assert!(occupation_local_time(&p, grid3(), 0.3).is_err());
    }

    #[test]
    fn sheet_rows_trace_the_zigzag() {
        let p = zigzag4();
        let cps: Vec<f64> = (0..=4).map(|i| i as f64 * 0.25).collect();
        let sheet = local_time_sheet(&p, grid3(), &cps).unwrap();
        assert_eq!(sheet.row(0), &[0.0, 0.0, 0.0]);
        assert_eq!(sheet.row(1), &[0.0, 1.0, 0.0]);
        assert_eq!(sheet.row(2), &[0.0, 1.0, 1.0]);
        assert_eq!(sheet.row(3), &[0.0, 2.0, 1.0]);
        assert_eq!(sheet.row(4), &[0.0, 2.0, 2.0]);
        // final row equals the field at t_end
        let f = occupation_local_time(&p, grid3(), 1.0).unwrap();
        assert_eq!(sheet.final_field().values(), f.values());
    }

    #[test]
    fn sheet_with_endpoint_checkpoints_only() {
        let p = zigzag4();
        let sheet = local_time_sheet(&p, grid3(), &[0.0, 1.0]).unwrap();
        assert_eq!(sheet.n_rows(), 2);
        assert!(sheet.row(0).iter().all(|&v| v == 0.0));
        assert_eq!(sheet.row(1), &[0.0, 2.0, 2.0]);
    }

    #[test]
    fn sheet_rejects_bad_checkpoints() {
        let p = zigzag4();
        assert!(local_time_sheet(&p, grid3(), &[0.25, 1.0]).is_err());
        assert!(local_time_sheet(&p, grid3(), &[0.0, 0.5, 0.5]).is_err());
        assert!(local_time_sheet(&p, grid3(), &[0.0, 0.3]).is_err());
    }

    #[test]
    fn tanaka_vanishes_on_constant_path() {
        let grid = make_time_grid(1.0, 5).unwrap();
        let p = Path::from_values(grid, vec![2.0; 6]).unwrap();
        assert_eq!(tanaka_local_time(&p, 0.0), 0.0);
    }

    #[test]
    fn tanaka_telescopes_to_zero_without_crossing() {
        // all values above a: sgn is constant, the sum telescopes exactly
        let grid = make_time_grid(1.0, 4).unwrap();
        let p = Path::from_values(grid, vec![1.0, 2.0, 1.5, 3.0, 2.25]).unwrap();
        assert_eq!(tanaka_local_time(&p, 0.0), 0.0);
    }

    #[test]
    fn tanaka_tracks_occupation_on_brownian_path() {
        let n = 1 << 16;
        let grid = make_time_grid(1.0, n).unwrap();
        let p = simulate(ProcessSpec::Brownian, grid, SeedPolicy::new(5150, 0), QvMode::Realized).unwrap();
        let delta = 2.0f64.powi(-8);
        let (lo, hi) = p.range();
        let space = SpaceGrid::covering(lo, hi, delta, 2).unwrap();
        let f = occupation_local_time(&p, space, 1.0).unwrap();
        let occ = f.values()[space.bin_index(0.0).unwrap()];
        let tan = tanaka_local_time(&p, 0.0);
        let gap = (tan - occ).abs() / occ.max(0.1);
        assert!(gap < 0.25, "tanaka {tan} vs occupation {occ}: gap {gap}");
    }

    #[test]
    fn conservation_with_analytic_qv_reports_discretization_gap() {
        let n = 1 << 12;
        let grid = make_time_grid(1.0, n).unwrap();
        let p = simulate(ProcessSpec::Brownian, grid, SeedPolicy::new(8, 1), QvMode::Analytic).unwrap();
        let realized: f64 = p
            .values()
            .windows(2)
            .map(|w| (w[1] - w[0]) * (w[1] - w[0]))
            .sum();
        let (lo, hi) = p.range();
        let space = SpaceGrid::covering(lo, hi, 0.01, 2).unwrap();
        let f = occupation_local_time(&p, space, 1.0).unwrap();
        // field carries analytic mass (total t = 1); defect vs realized qv is
        // exactly the qv discretization gap
        let defect = conservation_defect(&f, realized);
        assert_abs_diff_eq!(defect, (1.0 - realized).abs(), epsilon = 1e-12);
    }

    #[test]
    fn bin_merge_consistency() {
        // coarse field (delta -> 2 delta) equals the pairwise average of the
        // fine field when delta is dyadic
        let n = 1 << 10;
        let grid = make_time_grid(1.0, n).unwrap();
        let p = simulate(ProcessSpec::Brownian, grid, SeedPolicy::new(77, 3), QvMode::Realized).unwrap();
        let delta = 2.0f64.powi(-5);
        let (lo, hi) = p.range();
        let fine_grid = SpaceGrid::covering(lo, hi, delta, 2).unwrap();
        let n_fine = fine_grid.n_bins() + fine_grid.n_bins() % 2; // even it up
        let fine_grid = SpaceGrid::new(
            fine_grid.x_min(),
            fine_grid.x_min() + n_fine as f64 * delta,
            n_fine,
        )
        .unwrap();
        let coarse_grid = SpaceGrid::new(fine_grid.x_min(), fine_grid.x_max(), n_fine / 2).unwrap();
        let fine = occupation_local_time(&p, fine_grid, 1.0).unwrap();
        let coarse = occupation_local_time(&p, coarse_grid, 1.0).unwrap();
        for (j, &c) in coarse.values().iter().enumerate() {
            let avg = 0.5 * (fine.values()[2 * j] + fine.values()[2 * j + 1]);
            assert_abs_diff_eq!(c, avg, epsilon = 1e-12);
        }
    }

    proptest! {
        // conservation is exact for every seed and every process with
        // realized qv and a covering grid
        #[test]
        fn conservation_exact_for_random_brownian(seed in 0u64..500) {
            let grid = make_time_grid(1.0, 512).unwrap();
            let p = simulate(ProcessSpec::Brownian, grid, SeedPolicy::new(seed, 0), QvMode::Realized).unwrap();
            let (lo, hi) = p.range();
            let space = SpaceGrid::covering(lo, hi, 0.05, 2).unwrap();
            let f = occupation_local_time(&p, space, 1.0).unwrap();
            prop_assert!(f.values().iter().all(|&v| v >= 0.0));
            prop_assert!(conservation_defect(&f, p.qv_end()) <= 1e-12 * p.qv_end().max(1.0));
        }

        // per-bin monotonicity of sheet rows
        #[test]
        fn sheet_is_monotone_in_time(seed in 0u64..100) {
            let grid = make_time_grid(1.0, 128).unwrap();
            let p = simulate(ProcessSpec::Brownian, grid, SeedPolicy::new(seed, 1), QvMode::Realized).unwrap();
            let (lo, hi) = p.range();
            let space = SpaceGrid::covering(lo, hi, 0.1, 2).unwrap();
            let cps: Vec<f64> = (0..=8).map(|k| k as f64 * 16.0 * grid.dt()).collect();
            let sheet = local_time_sheet(&p, space, &cps).unwrap();
            for k in 0..sheet.n_rows() - 1 {
                for j in 0..space.n_bins() {
                    prop_assert!(sheet.row(k)[j] <= sheet.row(k + 1)[j] + 1e-15);
                }
            }
        }
    }
}
