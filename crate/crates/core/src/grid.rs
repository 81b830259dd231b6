//! Periodic sampling grids, unitary discrete Fourier transforms and spectral
//! differentiation.
//!
//! Values are stored row-major with axis 0 slowest. Spectral coefficients use
//! the FFT storage order along every axis: storage index `j < N/2` holds
//! wavenumber `j`, index `j >= N/2` holds `j - N`, so the unmatched Nyquist
//! mode sits at `-N/2`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Tolerance for the Hermitian-symmetry check in [`inverse_transform`].
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    points: Vec<usize>,
    lengths: Vec<f64>,
}

impl GridSpec {
    pub fn new(points: Vec<usize>, lengths: Vec<f64>) -> Result<Self> {
        let dim = points.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if lengths.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "{} lengths given for a {dim}-dimensional grid",
                lengths.len()
            )));
        }
        for (axis, &n) in points.iter().enumerate() {
            if n < 8 || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: {n} points (need an even count >= 8)"
                )));
            }
        }
        for (axis, &l) in lengths.iter().enumerate() {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!("axis {axis}: period {l} must be positive")));
            }
        }
        Ok(Self { points, lengths })
    }

    /// Same point count and period on every axis.
    pub fn cube(dim: usize, points: usize, length: f64) -> Result<Self> {
        Self::new(vec![points; dim], vec![length; dim])
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.points[axis] as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(f64::INFINITY, f64::min)
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume of one grid cell, the quadrature weight of every node.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }
}

/// A grid together with its FFT plans and wavenumber tables.
///
/// Shared between fields through an [`Arc`]; constructing one plans the
/// transforms once.
pub struct Grid {
    spec: GridSpec,
    strides: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    wavenumbers: Vec<Vec<i64>>,
    xi: Vec<Vec<f64>>,
    norm: f64,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("spec", &self.spec).finish()
    }
}

impl Grid {
    pub fn new(spec: GridSpec) -> Arc<Self> {
        let dim = spec.dim();
        let mut strides = vec![1; dim];
        for axis in (0..dim.saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * spec.points[axis + 1];
        }
        let mut planner = FftPlanner::new();
        let forward = spec.points.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = spec.points.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        let wavenumbers: Vec<Vec<i64>> = spec
            .points
            .iter()
            .map(|&n| {
                (0..n)
                    .map(|j| if j < n / 2 { j as i64 } else { j as i64 - n as i64 })
                    .collect()
            })
            .collect();
        let xi = wavenumbers
            .iter()
            .zip(&spec.lengths)
            .map(|(ks, &l)| ks.iter().map(|&k| 2.0 * PI * k as f64 / l).collect())
            .collect();
        let norm = 1.0 / (spec.len() as f64).sqrt();
        Arc::new(Self { spec, strides, forward, inverse, wavenumbers, xi, norm })
    }

    pub fn from_points(points: Vec<usize>, lengths: Vec<f64>) -> Result<Arc<Self>> {
        Ok(Self::new(GridSpec::new(points, lengths)?))
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn len(&self) -> usize {
        self.spec.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> &[usize] {
        &self.spec.points
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Storage index along `axis` of the flat index `flat`.
    #[inline]
    pub fn axis_index(&self, flat: usize, axis: usize) -> usize {
        (flat / self.strides[axis]) % self.spec.points[axis]
    }

    /// Signed wavenumber tuple of the coefficient stored at `flat`.
    pub fn mode(&self, flat: usize) -> Vec<i64> {
        (0..self.dim()).map(|a| self.wavenumbers[a][self.axis_index(flat, a)]).collect()
    }

    /// Continuous frequency of the coefficient stored at `flat`.
    pub fn xi_of(&self, flat: usize) -> Vec<f64> {
        (0..self.dim()).map(|a| self.xi[a][self.axis_index(flat, a)]).collect()
    }

    pub fn xi_axis(&self, axis: usize) -> &[f64] {
        &self.xi[axis]
    }

    pub fn wavenumbers_axis(&self, axis: usize) -> &[i64] {
        &self.wavenumbers[axis]
    }

    /// Flat index holding the wavevector `-k` (modular, so Nyquist maps to itself).
    pub fn conjugate_index(&self, flat: usize) -> usize {
        (0..self.dim())
            .map(|a| {
                let n = self.spec.points[a];
                let j = self.axis_index(flat, a);
                ((n - j) % n) * self.strides[a]
            })
            .sum()
    }

    /// True when the mode is its own conjugate (every axis at 0 or Nyquist).
    pub fn is_self_conjugate(&self, flat: usize) -> bool {
        (0..self.dim()).all(|a| {
            let j = self.axis_index(flat, a);
            j == 0 || j == self.spec.points[a] / 2
        })
    }

    /// True when any axis index is at the Nyquist wavenumber `-N/2`.
    pub fn touches_nyquist(&self, flat: usize) -> bool {
        (0..self.dim()).any(|a| self.axis_index(flat, a) == self.spec.points[a] / 2)
    }

    /// Node coordinates of flat index `flat`.
    pub fn node(&self, flat: usize) -> Vec<f64> {
        (0..self.dim()).map(|a| self.axis_index(flat, a) as f64 * self.spec.spacing(a)).collect()
    }

    /// Coordinates along `axis` of every node.
    pub fn coordinates(&self, axis: usize) -> Vec<f64> {
        let h = self.spec.spacing(axis);
        (0..self.len()).map(|i| self.axis_index(i, axis) as f64 * h).collect()
    }

    /// Whether the coefficient at `flat` survives the two-thirds rule.
    #[inline]
    pub fn keeps_mode(&self, flat: usize) -> bool {
        (0..self.dim()).all(|a| {
            let k = self.wavenumbers[a][self.axis_index(flat, a)].unsigned_abs() as usize;
            3 * k <= self.spec.points[a]
        })
    }

    fn transform_axes(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        let total = data.len();
        for (axis, plan) in plans.iter().enumerate() {
            let n = self.spec.points[axis];
            let stride = self.strides[axis];
            if stride == 1 {
                plan.process(data);
                continue;
            }
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            let block = n * stride;
            for outer in 0..total / block {
                for inner in 0..stride {
                    let base = outer * block + inner;
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + j * stride];
                    }
                    plan.process(&mut line);
                    for (j, value) in line.iter().enumerate() {
                        data[base + j * stride] = *value;
                    }
                }
            }
        }
        for value in data.iter_mut() {
            *value *= self.norm;
        }
    }

    /// Unitary forward transform of real samples.
    pub fn fft_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform_axes(&mut data, &self.forward);
        data
    }

    /// Unitary inverse transform, complex output.
    pub fn ifft(&self, mut coeffs: Vec<Complex64>) -> Vec<Complex64> {
        self.transform_axes(&mut coeffs, &self.inverse);
        coeffs
    }

    /// Unitary inverse transform keeping the real part.
    pub fn ifft_real(&self, coeffs: Vec<Complex64>) -> Vec<f64> {
        self.ifft(coeffs).into_iter().map(|c| c.re).collect()
    }

    /// Relative Hermitian-symmetry defect of a coefficient array.
    pub fn hermitian_defect(&self, coeffs: &[Complex64]) -> f64 {
        let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let worst = (0..coeffs.len())
            .map(|i| (coeffs[i] - coeffs[self.conjugate_index(i)].conj()).norm())
            .fold(0.0, f64::max);
        worst / scale
    }

    /// Zero every coefficient outside the two-thirds band, in place.
    pub fn dealias_in_place(&self, coeffs: &mut [Complex64]) {
        for (i, c) in coeffs.iter_mut().enumerate() {
            if !self.keeps_mode(i) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Multiply coefficients by `i xi_axis`, zeroing the Nyquist mode of that axis.
    pub fn differentiate_in_place(&self, coeffs: &mut [Complex64], axis: usize) {
        let n = self.spec.points[axis];
        let xi = &self.xi[axis];
        for (i, c) in coeffs.iter_mut().enumerate() {
            let j = self.axis_index(i, axis);
            *c = if j == n / 2 { Complex64::new(0.0, 0.0) } else { *c * Complex64::new(0.0, xi[j]) };
        }
    }
}

pub(crate) fn check_same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a.spec == b.spec {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!("{:?} vs {:?}", a.spec, b.spec)))
    }
}

#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub(crate) fn from_vec(grid: &Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid: grid.clone(), values }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self::from_vec(grid, vec![0.0; grid.len()])
    }

    pub fn constant(grid: &Arc<Grid>, value: f64) -> Self {
        Self::from_vec(grid, vec![value; grid.len()])
    }

    /// Sample `f` at every node.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.node(i))).collect();
        Self::from_vec(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

#[derive(Clone, Debug)]
pub struct VectorField {
    grid: Arc<Grid>,
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(grid: &Arc<Grid>, components: Vec<ScalarField>) -> Result<Self> {
        if components.len() != grid.dim() {
            return Err(Error::GridMismatch(format!(
                "{} components for a {}-dimensional grid",
                components.len(),
                grid.dim()
            )));
        }
        for c in &components {
            check_same_grid(grid, c.grid())?;
        }
        Ok(Self { grid: grid.clone(), components })
    }

    pub fn from_components(grid: &Arc<Grid>, components: Vec<Vec<f64>>) -> Result<Self> {
        let components =
            components.into_iter().map(|v| ScalarField::new(grid, v)).collect::<Result<Vec<_>>>()?;
        Self::new(grid, components)
    }

    pub(crate) fn from_vecs(grid: &Arc<Grid>, components: Vec<Vec<f64>>) -> Self {
        debug_assert_eq!(components.len(), grid.dim());
        Self {
            grid: grid.clone(),
            components: components.into_iter().map(|v| ScalarField::from_vec(grid, v)).collect(),
        }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self::from_vecs(grid, vec![vec![0.0; grid.len()]; grid.dim()])
    }

    /// Sample a vector-valued function at every node.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        let dim = grid.dim();
        let mut comps = vec![vec![0.0; grid.len()]; dim];
        for i in 0..grid.len() {
            let value = f(&grid.node(i));
            for (c, v) in comps.iter_mut().zip(value) {
                c[i] = v;
            }
        }
        Self::from_vecs(grid, comps)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &ScalarField {
        &self.components[i]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut ScalarField {
        &mut self.components[i]
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(ScalarField::is_finite)
    }

    /// Largest absolute component value over the grid.
    pub fn sup_norm(&self) -> f64 {
        self.components.iter().map(ScalarField::sup_norm).fold(0.0, f64::max)
    }

    /// Largest pointwise Euclidean length.
    pub fn sup_magnitude(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| self.components.iter().map(|c| c.values[i] * c.values[i]).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Discrete torus L² norm (trapezoid rule, exact for band-limited data).
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.components.iter().flat_map(|c| c.values.iter()).map(|v| v * v).sum();
        (sum * self.grid.spec().cell_volume()).sqrt()
    }

    pub fn max_abs_diff(&self, other: &VectorField) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &VectorField) {
        for (a, b) in self.components.iter_mut().zip(&other.components) {
            for (x, y) in a.values.iter_mut().zip(&b.values) {
                *x += alpha * y;
            }
        }
    }

    pub fn scaled(&self, alpha: f64) -> VectorField {
        let mut out = self.clone();
        for c in &mut out.components {
            for x in &mut c.values {
                *x *= alpha;
            }
        }
        out
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    /// Cyclic shift by whole cells: `out(x_i) = self(x_i + shift·h)`.
    pub fn shifted_by_cells(&self, shift: &[i64]) -> VectorField {
        let grid = &self.grid;
        let comps = self
            .components
            .iter()
            .map(|c| {
                (0..grid.len())
                    .map(|i| {
                        let src: usize = (0..grid.dim())
                            .map(|a| {
                                let n = grid.points()[a] as i64;
                                let j = grid.axis_index(i, a) as i64;
                                ((j + shift[a]).rem_euclid(n)) as usize * grid.strides()[a]
                            })
                            .sum();
                        c.values[src]
                    })
                    .collect()
            })
            .collect();
        VectorField::from_vecs(grid, comps)
    }

    /// Concatenated component values, component-major.
    pub fn flat_values(&self) -> Vec<f64> {
        self.components.iter().flat_map(|c| c.values.iter().copied()).collect()
    }
}

#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: &Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} coefficients for a grid of {} modes",
                coeffs.len(),
                grid.len()
            )));
        }
        Ok(Self { grid: grid.clone(), coeffs })
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self { grid: grid.clone(), coeffs: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Flat storage index for a signed wavevector.
    pub fn index_of(&self, k: &[i64]) -> Result<usize> {
        mode_flat_index(&self.grid, k)
    }

    pub fn at(&self, k: &[i64]) -> Result<Complex64> {
        Ok(self.coeffs[self.index_of(k)?])
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.grid.hermitian_defect(&self.coeffs)
    }

    /// Sum of squared coefficient magnitudes (equals the sum of squared samples).
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

fn mode_flat_index(grid: &Grid, k: &[i64]) -> Result<usize> {
    let out_of_range =
        || Error::IndexOutOfRange { index: k.to_vec(), points: grid.points().to_vec() };
    if k.len() != grid.dim() {
        return Err(out_of_range());
    }
    let mut flat = 0;
    for (a, &kj) in k.iter().enumerate() {
        let n = grid.points()[a] as i64;
        if kj < -n / 2 || kj >= n / 2 {
            return Err(out_of_range());
        }
        flat += (kj.rem_euclid(n) as usize) * grid.strides()[a];
    }
    Ok(flat)
}

pub fn forward_transform(f: &ScalarField) -> SpectralField {
    SpectralField { grid: f.grid.clone(), coeffs: f.grid.fft_real(&f.values) }
}

/// Inverse unitary transform; rejects coefficient sets that are not
/// Hermitian-symmetric to [`HERMITIAN_TOL`].
pub fn inverse_transform(spectrum: &SpectralField) -> Result<ScalarField> {
    let defect = spectrum.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian { defect });
    }
    let values = spectrum.grid.ifft_real(spectrum.coeffs.clone());
    Ok(ScalarField::from_vec(&spectrum.grid, values))
}

/// Continuous frequency `xi_j = 2π k_j / L_j` for a signed wavevector index.
pub fn wavevector(grid: &Grid, k: &[i64]) -> Result<Vec<f64>> {
    mode_flat_index(grid, k)?;
    Ok(k.iter()
        .zip(grid.spec().lengths())
        .map(|(&kj, &l)| 2.0 * PI * kj as f64 / l)
        .collect())
}

pub fn partial_derivative(f: &ScalarField, axis: usize) -> ScalarField {
    assert!(axis < f.grid.dim(), "axis {axis} out of range");
    let grid = &f.grid;
    let mut coeffs = grid.fft_real(&f.values);
    grid.differentiate_in_place(&mut coeffs, axis);
    ScalarField::from_vec(grid, grid.ifft_real(coeffs))
}

/// `jac[i][j] = ∂u_i/∂x_j`.
pub fn jacobian(u: &VectorField) -> Vec<Vec<ScalarField>> {
    let grid = &u.grid;
    u.components
        .iter()
        .map(|c| {
            let spectrum = grid.fft_real(&c.values);
            (0..grid.dim())
                .map(|axis| {
                    let mut d = spectrum.clone();
                    grid.differentiate_in_place(&mut d, axis);
                    ScalarField::from_vec(grid, grid.ifft_real(d))
                })
                .collect()
        })
        .collect()
}

/// Trace of a Jacobian field, summed in axis order.
pub fn trace(jac: &[Vec<ScalarField>]) -> ScalarField {
    let grid = jac[0][0].grid.clone();
    let mut out = vec![0.0; grid.len()];
    for (i, row) in jac.iter().enumerate() {
        for (o, v) in out.iter_mut().zip(&row[i].values) {
            *o += v;
        }
    }
    ScalarField::from_vec(&grid, out)
}

pub fn divergence(u: &VectorField) -> ScalarField {
    trace(&jacobian(u))
}

/// Two-thirds rule: zero modes with `|k_j| > N_j/3` on any axis.
pub fn dealias(spectrum: &SpectralField) -> SpectralField {
    let mut out = spectrum.clone();
    spectrum.grid.dealias_in_place(&mut out.coeffs);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn line(n: usize, l: f64) -> Arc<Grid> {
        Grid::from_points(vec![n], vec![l]).unwrap()
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(GridSpec::new(vec![], vec![]).is_err());
        assert!(GridSpec::new(vec![8; 4], vec![1.0; 4]).is_err());
        assert!(GridSpec::new(vec![6], vec![1.0]).is_err());
        assert!(GridSpec::new(vec![9], vec![1.0]).is_err());
        assert!(GridSpec::new(vec![8], vec![0.0]).is_err());
        assert!(GridSpec::new(vec![8, 8], vec![1.0]).is_err());
        assert!(GridSpec::new(vec![8, 16], vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn constant_field_is_a_spike_at_zero() {
        let grid = Grid::from_points(vec![8, 16], vec![2.0, 3.0]).unwrap();
        let spectrum = forward_transform(&ScalarField::constant(&grid, 1.0));
        let expected = (grid.len() as f64).sqrt();
        for (i, c) in spectrum.coeffs().iter().enumerate() {
            if i == 0 {
                assert!((c.re - expected).abs() < 1e-12 && c.im.abs() < 1e-12);
            } else {
                assert!(c.norm() < 1e-12);
            }
        }
        let back = inverse_transform(&spectrum).unwrap();
        assert!(back.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn sine_has_two_modes() {
        let grid = line(32, TAU);
        let f = ScalarField::from_fn(&grid, |x| x[0].sin());
        let spectrum = forward_transform(&f);
        let scale = (32.0f64).sqrt() / 2.0;
        let plus = spectrum.at(&[1]).unwrap();
        let minus = spectrum.at(&[-1]).unwrap();
        assert!((plus - Complex64::new(0.0, -scale)).norm() < 1e-12);
        assert!((minus - Complex64::new(0.0, scale)).norm() < 1e-12);
        let others = spectrum
            .coeffs()
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != 1 && i != 31)
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max);
        assert!(others < 1e-13);
    }

    #[test]
    fn single_modes_invert_to_sine() {
        let grid = line(32, TAU);
        let mut spectrum = SpectralField::zeros(&grid);
        let scale = (32.0f64).sqrt() / 2.0;
        spectrum.coeffs_mut()[1] = Complex64::new(0.0, -scale);
        spectrum.coeffs_mut()[31] = Complex64::new(0.0, scale);
        let f = inverse_transform(&spectrum).unwrap();
        let err = (0..32).map(|i| (f.values()[i] - (grid.node(i)[0]).sin()).abs()).fold(0.0, f64::max);
        assert!(err < 1e-14);
    }

    #[test]
    fn inverse_rejects_non_hermitian_input() {
        let grid = line(16, 1.0);
        let mut spectrum = SpectralField::zeros(&grid);
        spectrum.coeffs_mut()[1] = Complex64::new(1.0, 0.0);
        assert!(matches!(inverse_transform(&spectrum), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn gaussian_round_trip_and_parseval() {
        let grid = Grid::from_points(vec![32, 16], vec![TAU, 4.0]).unwrap();
        let f = ScalarField::from_fn(&grid, |x| {
            (-((x[0] - 3.0).powi(2) + (x[1] - 2.0).powi(2))).exp()
        });
        let spectrum = forward_transform(&f);
        let back = inverse_transform(&spectrum).unwrap();
        assert!(back.max_abs_diff(&f) < 1e-12);
        let sum_sq: f64 = f.values().iter().map(|v| v * v).sum();
        assert!((spectrum.energy() - sum_sq).abs() <= 1e-12 * sum_sq);
    }

    #[test]
    fn wavevector_formula() {
        let grid = line(16, TAU);
        assert_eq!(wavevector(&grid, &[1]).unwrap(), vec![1.0]);
        assert_eq!(wavevector(&grid, &[0]).unwrap(), vec![0.0]);
        let unit = line(16, 1.0);
        assert!((wavevector(&unit, &[3]).unwrap()[0] - 18.849_555_921_538_76).abs() < 1e-12);
        assert!(wavevector(&unit, &[8]).is_err());
        assert!(wavevector(&unit, &[-8]).is_ok());
        assert!(wavevector(&unit, &[-9]).is_err());
        assert!(wavevector(&unit, &[0, 0]).is_err());
    }

    #[test]
    fn derivatives_of_trig_modes() {
        let grid = line(32, TAU);
        let f = ScalarField::from_fn(&grid, |x| x[0].sin());
        let df = partial_derivative(&f, 0);
        let exact = ScalarField::from_fn(&grid, |x| x[0].cos());
        assert!(df.max_abs_diff(&exact) < 1e-12);

        let g = ScalarField::from_fn(&grid, |x| (3.0 * x[0]).sin());
        let dg = partial_derivative(&g, 0);
        let exact = ScalarField::from_fn(&grid, |x| 3.0 * (3.0 * x[0]).cos());
        assert!(dg.max_abs_diff(&exact) < 1e-12);

        let c = partial_derivative(&ScalarField::constant(&grid, 2.5), 0);
        assert!(c.sup_norm() < 1e-14);
    }

    #[test]
    fn nyquist_mode_has_zero_derivative() {
        let grid = line(16, TAU);
        let f = ScalarField::from_fn(&grid, |x| (8.0 * x[0]).cos());
        assert!(partial_derivative(&f, 0).sup_norm() < 1e-12);
    }

    #[test]
    fn jacobian_and_divergence_of_simple_fields() {
        let grid = Grid::from_points(vec![16, 16], vec![TAU, TAU]).unwrap();
        let u = VectorField::from_fn(&grid, |x| vec![x[0].sin(), 0.0]);
        let jac = jacobian(&u);
        let cos = ScalarField::from_fn(&grid, |x| x[0].cos());
        assert!(jac[0][0].max_abs_diff(&cos) < 1e-12);
        assert!(jac[0][1].sup_norm() < 1e-12);
        assert!(jac[1][0].sup_norm() < 1e-12);
        assert!(jac[1][1].sup_norm() < 1e-12);

        let w = VectorField::from_fn(&grid, |x| vec![x[0].sin(), x[1].sin()]);
        let div = divergence(&w);
        let exact = ScalarField::from_fn(&grid, |x| x[0].cos() + x[1].cos());
        assert!(div.max_abs_diff(&exact) < 1e-12);

        let constant = VectorField::from_fn(&grid, |_| vec![1.0, -2.0]);
        for row in jacobian(&constant) {
            for entry in row {
                assert!(entry.sup_norm() < 1e-14);
            }
        }
    }

    #[test]
    fn stream_function_field_is_divergence_free() {
        let grid = Grid::from_points(vec![32, 16], vec![TAU, TAU]).unwrap();
        let psi = |x: &[f64]| (2.0 * x[0]).sin() * x[1].cos() + (x[0] + 3.0 * x[1]).cos();
        let psi_field = ScalarField::from_fn(&grid, psi);
        let dpsi_dx = partial_derivative(&psi_field, 0);
        let dpsi_dy = partial_derivative(&psi_field, 1);
        let u = VectorField::new(
            &grid,
            vec![
                ScalarField::new(&grid, dpsi_dy.values().iter().map(|v| -v).collect()).unwrap(),
                dpsi_dx,
            ],
        )
        .unwrap();
        assert!(divergence(&u).sup_norm() < 1e-12);
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let n = 64;
        let grid = Grid::from_points(vec![n, n], vec![TAU, TAU]).unwrap();
        let u = VectorField::from_fn(&grid, |x| {
            vec![(x[0] + x[1]).sin(), (2.0 * x[0]).cos() * x[1].sin()]
        });
        let jac = jacobian(&u);
        let h = TAU / n as f64;
        let mut worst = 0.0f64;
        for i in 0..2 {
            let c = u.component(i).values();
            for axis in 0..2 {
                let stride = grid.strides()[axis];
                for flat in 0..grid.len() {
                    let j = grid.axis_index(flat, axis);
                    let base = flat - j * stride;
                    let plus = base + ((j + 1) % n) * stride;
                    let minus = base + ((j + n - 1) % n) * stride;
                    let fd = (c[plus] - c[minus]) / (2.0 * h);
                    worst = worst.max((fd - jac[i][axis].values()[flat]).abs());
                }
            }
        }
        // central differences are O(h²) with constant |f'''|/6 ≤ 8/6
        assert!(worst < 1.5 * h * h, "worst = {worst}");
    }

    #[test]
    fn dealias_two_thirds_rule() {
        let grid = line(32, TAU);
        let keep = ScalarField::from_fn(&grid, |x| x[0].cos());
        let cut = ScalarField::from_fn(&grid, |x| (12.0 * x[0]).cos());
        let kept = dealias(&forward_transform(&keep));
        assert!(inverse_transform(&kept).unwrap().max_abs_diff(&keep) < 1e-14);
        let removed = dealias(&forward_transform(&cut));
        assert_eq!(removed.at(&[12]).unwrap().norm(), 0.0);
        assert_eq!(removed.at(&[-12]).unwrap().norm(), 0.0);
        assert!(removed.coeffs().iter().all(|c| c.norm() < 1e-14));
        let boundary = ScalarField::from_fn(&grid, |x| (10.0 * x[0]).cos());
        assert!(dealias(&forward_transform(&boundary)).energy() > 1.0);

        let mixed = ScalarField::from_fn(&grid, |x| x[0].sin() + (14.0 * x[0]).sin());
        let once = dealias(&forward_transform(&mixed));
        let twice = dealias(&once);
        assert_eq!(once.coeffs(), twice.coeffs());
    }

    #[test]
    fn conjugate_index_is_an_involution() {
        let grid = Grid::from_points(vec![8, 10, 12], vec![1.0, 1.0, 1.0]).unwrap();
        for i in 0..grid.len() {
            let j = grid.conjugate_index(i);
            assert_eq!(grid.conjugate_index(j), i);
            let k = grid.mode(i);
            let mk = grid.mode(j);
            for a in 0..3 {
                let n = grid.points()[a] as i64;
                assert_eq!((k[a] + mk[a]).rem_euclid(n), 0);
            }
        }
    }

    #[test]
    fn cell_shift_is_permutation() {
        let grid = line(8, 8.0);
        let u = VectorField::from_fn(&grid, |x| vec![x[0]]);
        let s = u.shifted_by_cells(&[3]);
        assert_eq!(s.component(0).values(), &[3.0, 4.0, 5.0, 6.0, 7.0, 0.0, 1.0, 2.0]);
    }
}
