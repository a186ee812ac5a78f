//! Uniform 1D mesh and cell-averaged densities.
//!
//! All integrals are midpoint sums over cell centers.

use crate::error::{Error, Result};
use crate::model::ModelParams;

pub const MIN_CELLS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    xmin: f64,
    xmax: f64,
    n_cells: usize,
    dx: f64,
}

impl Grid1D {
    pub fn new(xmin: f64, xmax: f64, n_cells: usize) -> Result<Self> {
        if !(xmin.is_finite() && xmax.is_finite()) {
            return Err(Error::InvalidGrid("bounds must be finite".into()));
        }
        if xmin >= xmax {
            return Err(Error::InvalidGrid(format!("xmin < xmax is violated ({xmin} >= {xmax})")));
        }
        if n_cells < MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "n_cells >= {MIN_CELLS} is violated (n_cells = {n_cells})"
            )));
        }
        Ok(Self { xmin, xmax, n_cells, dx: (xmax - xmin) / n_cells as f64 })
    }

    pub fn xmin(&self) -> f64 {
        self.xmin
    }
    pub fn xmax(&self) -> f64 {
        self.xmax
    }
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn center(&self, i: usize) -> f64 {
        self.xmin + (i as f64 + 0.5) * self.dx
    }

    /// Left edge of cell `i`; `edge(n_cells)` is the right boundary.
    pub fn edge(&self, i: usize) -> f64 {
        self.xmin + i as f64 * self.dx
    }

    pub fn centers(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_cells).map(move |i| self.center(i))
    }

    /// Index of the cell containing `x`, if any. Points on an interior edge belong
    /// to the cell on their right; the right boundary belongs to the last cell.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if !(x >= self.xmin && x <= self.xmax) {
            return None;
        }
        let i = ((x - self.xmin) / self.dx).floor() as usize;
        Some(i.min(self.n_cells - 1))
    }
}

/// Uniform grid on `[xmin, xmax]` with `n_cells` cells.
pub fn build_grid(xmin: f64, xmax: f64, n_cells: usize) -> Result<Grid1D> {
    Grid1D::new(xmin, xmax, n_cells)
}

/// Truncation of the real line used when no domain is given:
/// `x0 +- (delta + 8 sigma + |u0 - x0|)`.
pub fn default_domain(p: &ModelParams) -> (f64, f64) {
    let half = p.delta() + 8.0 * p.sigma() + (p.u0() - p.x0()).abs();
    (p.x0() - half, p.x0() + half)
}

/// Nonnegative cell averages on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    grid: Grid1D,
    values: Vec<f64>,
}

impl DensityField {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::InvalidDensity(format!(
                "expected {} values, got {}",
                grid.n_cells(),
                values.len()
            )));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidDensity(format!("value {v} at cell {i} is not finite and nonnegative")));
        }
        Ok(Self { grid, values })
    }

    /// Caller guarantees `values` are finite, nonnegative and sized to the grid.
    pub(crate) fn from_trusted(grid: Grid1D, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_cells());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mass(&self) -> f64 {
        integrate(self)
    }

    pub(crate) fn same_grid(&self, other: &DensityField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Midpoint quadrature `sum values[i] * dx`.
pub fn integrate(field: &DensityField) -> f64 {
    field.values.iter().sum::<f64>() * field.grid.dx
}

/// `sum (x_i - center)^k f_i dx`.
pub fn moment(field: &DensityField, order: u32, center: f64) -> f64 {
    let g = &field.grid;
    let s: f64 = field
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| (g.center(i) - center).powi(order as i32) * v)
        .sum();
    s * g.dx
}

/// Samples `profile` at cell centers, optionally rescaling to unit mass.
pub fn project_density<F>(profile: F, grid: &Grid1D, renormalize: bool) -> Result<DensityField>
where
    F: Fn(f64) -> f64,
{
    let values: Vec<f64> = grid.centers().map(profile).collect();
    let mut field = DensityField::new(*grid, values)?;
    if renormalize {
        let mass = integrate(&field);
        if !(mass > 0.0) {
            return Err(Error::ZeroMass);
        }
        for v in &mut field.values {
            *v /= mass;
        }
    }
    Ok(field)
}

/// `sum |a_i - b_i| dx`.
pub fn l1_distance(a: &DensityField, b: &DensityField) -> Result<f64> {
    a.same_grid(b)?;
    let s: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).sum();
    Ok(s * a.grid.dx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gauss(x: f64, c: f64, v: f64) -> f64 {
        (-(x - c) * (x - c) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
    }

    #[test]
    fn grid_examples() {
        let g = build_grid(0.0, 1.0, 10).unwrap();
        assert!((g.dx() - 0.1).abs() < 1e-15);
        assert!((g.center(0) - 0.05).abs() < 1e-15);
        assert_eq!(build_grid(-5.0, 5.0, 8).unwrap().dx(), 1.25);
        assert!(build_grid(1.0, 1.0, 10).is_err());
        assert!(build_grid(2.0, 1.0, 10).is_err());
        assert!(build_grid(0.0, 1.0, 4).unwrap_err().to_string().contains("n_cells >= 8"));
    }

    #[test]
    fn locate_cells() {
        let g = build_grid(0.0, 1.0, 10).unwrap();
        assert_eq!(g.locate(0.0), Some(0));
        assert_eq!(g.locate(0.95), Some(9));
        assert_eq!(g.locate(1.0), Some(9));
        assert_eq!(g.locate(-1e-9), None);
        assert_eq!(g.locate(f64::NAN), None);
    }

    #[test]
    fn integrate_examples() {
        let g = build_grid(0.0, 1.0, 16).unwrap();
        let ones = project_density(|_| 1.0, &g, false).unwrap();
        assert!((integrate(&ones) - 1.0).abs() < 1e-15);
        let zeros = project_density(|_| 0.0, &g, false).unwrap();
        assert_eq!(integrate(&zeros), 0.0);
        let wide = build_grid(-10.0, 10.0, 2000).unwrap();
        let gf = project_density(|x| gauss(x, 0.0, 1.0), &wide, false).unwrap();
        assert!((integrate(&gf) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn moment_examples() {
        let g = build_grid(-1.0, 1.0, 400).unwrap();
        let u = project_density(|_| 0.5, &g, false).unwrap();
        assert!(moment(&u, 1, 0.0).abs() < 1e-15);
        let dx = g.dx();
        // midpoint error for x^2 is -dx^2/12 times the density integral
        assert!((moment(&u, 2, 0.0) - 1.0 / 3.0).abs() < dx * dx);
        let w = build_grid(-8.0, 12.0, 1000).unwrap();
        let gf = project_density(|x| gauss(x, 1.7, 0.8), &w, false).unwrap();
        assert!((moment(&gf, 1, 0.0) - 1.7).abs() < w.dx() * w.dx());
    }

    #[test]
    fn projection_examples() {
        let g = build_grid(0.0, 1.0, 10).unwrap();
        let two = project_density(|_| 2.0, &g, false).unwrap();
        assert!((integrate(&two) - 2.0).abs() < 1e-15);
        let far = project_density(|x| gauss(x, 100.0, 0.01), &g, true);
        assert_eq!(far.unwrap_err(), Error::ZeroMass);
        assert!(project_density(|_| -1.0, &g, false).is_err());
    }

    #[test]
    fn l1_examples() {
        let g = build_grid(0.0, 2.0, 20).unwrap();
        let a = project_density(|x| if x < 1.0 { 1.0 } else { 0.0 }, &g, false).unwrap();
        let b = project_density(|x| if x >= 1.0 { 1.0 } else { 0.0 }, &g, false).unwrap();
        assert_eq!(l1_distance(&a, &a).unwrap(), 0.0);
        assert!((l1_distance(&a, &b).unwrap() - 2.0).abs() < 1e-14);
        let other = build_grid(0.0, 2.0, 21).unwrap();
        let c = project_density(|_| 0.5, &other, false).unwrap();
        assert_eq!(l1_distance(&a, &c).unwrap_err(), Error::GridMismatch);
    }

    #[test]
    fn l1_of_translated_gaussians() {
        // oracle: 2 * (2 Phi(s/2) - 1) for unit-variance normals shifted by s
        let s = 0.6;
        let phi = |z: f64| 0.5 * libm::erfc(-z / std::f64::consts::SQRT_2);
        let exact = 2.0 * (2.0 * phi(s / 2.0) - 1.0);
        let g = build_grid(-10.0, 10.0, 4000).unwrap();
        let a = project_density(|x| gauss(x, 0.0, 1.0), &g, false).unwrap();
        let b = project_density(|x| gauss(x, s, 1.0), &g, false).unwrap();
        assert!((l1_distance(&a, &b).unwrap() - exact).abs() < 1e-5);
    }

    fn field_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..5.0, 16)
    }

    proptest! {
        #[test]
        fn renormalized_projection_has_unit_mass(c in -3.0f64..3.0, v in 0.2f64..4.0) {
            let g = build_grid(-10.0, 10.0, 64).unwrap();
            let f = project_density(|x| gauss(x, c, v), &g, true).unwrap();
            prop_assert!((integrate(&f) - 1.0).abs() < 1e-14);
        }

        #[test]
        fn l1_is_a_metric(a in field_strategy(), b in field_strategy(), c in field_strategy()) {
            let g = build_grid(0.0, 1.0, 16).unwrap();
            let fa = DensityField::new(g, a).unwrap();
            let fb = DensityField::new(g, b).unwrap();
            let fc = DensityField::new(g, c).unwrap();
            let ab = l1_distance(&fa, &fb).unwrap();
            let ba = l1_distance(&fb, &fa).unwrap();
            let ac = l1_distance(&fa, &fc).unwrap();
            let cb = l1_distance(&fc, &fb).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, ba);
            prop_assert!(ab <= ac + cb + 1e-12);
            prop_assert_eq!(ab == 0.0, fa == fb);
        }

        #[test]
        fn zeroth_moment_is_mass(a in field_strategy(), c in -5.0f64..5.0) {
            let g = build_grid(-1.0, 1.0, 16).unwrap();
            let f = DensityField::new(g, a).unwrap();
            prop_assert!((moment(&f, 0, c) - integrate(&f)).abs() <= 1e-12 * integrate(&f).max(1.0));
        }
    }
}
