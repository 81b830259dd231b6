//! Periodic interpolation of grid data at arbitrary points.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::grid::Grid;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Interpolation {
    /// Tensor-product periodic cubic B-spline through the samples.
    #[default]
    CubicSpline,
    /// Direct evaluation of the trigonometric interpolant, O(N) per point.
    Trigonometric,
}

/// Relative distance, in cells, below which a point counts as a grid node.
const NODE_SNAP: f64 = 64.0 * f64::EPSILON;

/// Interpolant for several scalar fields on one grid sharing evaluation points.
pub struct PeriodicInterpolant {
    grid: Arc<Grid>,
    kind: Interpolation,
    spline: Vec<Vec<f64>>,
    samples: Vec<Vec<f64>>,
    spectral: Vec<Vec<Complex64>>,
}

/// Cubic B-spline weights for nodes `i0-1 ..= i0+2` at fractional offset `t`.
#[inline]
fn bspline_weights(t: f64) -> [f64; 4] {
    let s = 1.0 - t;
    let t2 = t * t;
    let t3 = t2 * t;
    [
        s * s * s / 6.0,
        (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
        (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
        t3 / 6.0,
    ]
}

impl PeriodicInterpolant {
    pub fn new(grid: &Arc<Grid>, fields: &[&[f64]], kind: Interpolation) -> Self {
        let mut spline = Vec::new();
        let mut samples = Vec::new();
        let mut spectral = Vec::new();
        match kind {
            Interpolation::CubicSpline => {
                // B-spline prefilter (c[k-1] + 4c[k] + c[k+1]) / 6 = f[k], solved per mode
                let denom: Vec<f64> = (0..grid.len())
                    .map(|i| {
                        (0..grid.dim())
                            .map(|a| {
                                let n = grid.points()[a] as f64;
                                let j = grid.axis_index(i, a) as f64;
                                (4.0 + 2.0 * (2.0 * PI * j / n).cos()) / 6.0
                            })
                            .product()
                    })
                    .collect();
                for f in fields {
                    let mut c = grid.fft_real(f);
                    for (ci, d) in c.iter_mut().zip(&denom) {
                        *ci /= *d;
                    }
                    spline.push(grid.ifft_real(c));
                    samples.push(f.to_vec());
                }
            }
            Interpolation::Trigonometric => {
                let norm = 1.0 / (grid.len() as f64).sqrt();
                for f in fields {
                    spectral.push(grid.fft_real(f).into_iter().map(|c| c * norm).collect());
                    samples.push(f.to_vec());
                }
            }
        }
        Self { grid: grid.clone(), kind, spline, samples, spectral }
    }

    pub fn kind(&self) -> Interpolation {
        self.kind
    }

    pub fn field_count(&self) -> usize {
        match self.kind {
            Interpolation::CubicSpline => self.spline.len(),
            Interpolation::Trigonometric => self.spectral.len(),
        }
    }

    /// Evaluate every field at `x`, writing one value per field into `out`.
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        if let Some(node) = self.node_at(x) {
            // both interpolants pass through the samples; return them exactly
            for (o, f) in out.iter_mut().zip(&self.samples) {
                *o = f[node];
            }
            return;
        }
        match self.kind {
            Interpolation::CubicSpline => self.eval_spline(x, out),
            Interpolation::Trigonometric => self.eval_trig(x, out),
        }
    }

    /// Flat index of the node `x` sits on, within [`NODE_SNAP`].
    fn node_at(&self, x: &[f64]) -> Option<usize> {
        let grid = &self.grid;
        let mut node = 0;
        for a in 0..grid.dim() {
            let t = x[a] / grid.spec().spacing(a);
            let nearest = t.round();
            if (t - nearest).abs() > NODE_SNAP * nearest.abs().max(1.0) {
                return None;
            }
            node += (nearest as i64).rem_euclid(grid.points()[a] as i64) as usize * grid.strides()[a];
        }
        Some(node)
    }

    fn eval_spline(&self, x: &[f64], out: &mut [f64]) {
        let grid = &self.grid;
        let dim = grid.dim();
        let mut idx = [[0usize; 4]; 3];
        let mut w = [[0.0f64; 4]; 3];
        for a in 0..dim {
            let n = grid.points()[a];
            let t = x[a] / grid.spec().spacing(a);
            let base = t.floor();
            w[a] = bspline_weights(t - base);
            let i0 = (base as i64 - 1).rem_euclid(n as i64) as usize;
            for (o, slot) in idx[a].iter_mut().enumerate() {
                *slot = ((i0 + o) % n) * grid.strides()[a];
            }
        }
        for (o, field) in out.iter_mut().zip(&self.spline) {
            *o = match dim {
                1 => (0..4).map(|p| w[0][p] * field[idx[0][p]]).sum(),
                2 => (0..4)
                    .map(|p| {
                        w[0][p] * (0..4).map(|q| w[1][q] * field[idx[0][p] + idx[1][q]]).sum::<f64>()
                    })
                    .sum(),
                _ => (0..4)
                    .map(|p| {
                        w[0][p]
                            * (0..4)
                                .map(|q| {
                                    w[1][q]
                                        * (0..4)
                                            .map(|r| w[2][r] * field[idx[0][p] + idx[1][q] + idx[2][r]])
                                            .sum::<f64>()
                                })
                                .sum::<f64>()
                    })
                    .sum(),
            };
        }
    }

    /// Per-axis phase factors `e^{i ξ x}` in storage order; Nyquist uses `cos`.
    fn phases(&self, axis: usize, x: f64) -> Vec<Complex64> {
        let grid = &self.grid;
        let n = grid.points()[axis];
        let l = grid.spec().lengths()[axis];
        let theta = 2.0 * PI * x / l;
        let step = Complex64::cis(theta);
        let mut pos = vec![Complex64::new(1.0, 0.0); n / 2 + 1];
        for k in 1..=n / 2 {
            pos[k] = if k % 16 == 0 { Complex64::cis(theta * k as f64) } else { pos[k - 1] * step };
        }
        (0..n)
            .map(|j| {
                if j < n / 2 {
                    pos[j]
                } else if j == n / 2 {
                    Complex64::new(pos[n / 2].re, 0.0)
                } else {
                    pos[n - j].conj()
                }
            })
            .collect()
    }

    fn eval_trig(&self, x: &[f64], out: &mut [f64]) {
        let grid = &self.grid;
        let phases: Vec<Vec<Complex64>> = (0..grid.dim()).map(|a| self.phases(a, x[a])).collect();
        for (o, coeffs) in out.iter_mut().zip(&self.spectral) {
            *o = match grid.dim() {
                1 => coeffs.iter().zip(&phases[0]).map(|(c, e)| (c * e).re).sum(),
                2 => {
                    let n1 = grid.points()[1];
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (i0, e0) in phases[0].iter().enumerate() {
                        let row = &coeffs[i0 * n1..(i0 + 1) * n1];
                        let partial: Complex64 = row.iter().zip(&phases[1]).map(|(c, e)| c * e).sum();
                        acc += e0 * partial;
                    }
                    acc.re
                }
                _ => {
                    let (n1, n2) = (grid.points()[1], grid.points()[2]);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (i0, e0) in phases[0].iter().enumerate() {
                        let mut plane = Complex64::new(0.0, 0.0);
                        for (i1, e1) in phases[1].iter().enumerate() {
                            let start = (i0 * n1 + i1) * n2;
                            let row = &coeffs[start..start + n2];
                            let partial: Complex64 =
                                row.iter().zip(&phases[2]).map(|(c, e)| c * e).sum();
                            plane += e1 * partial;
                        }
                        acc += e0 * plane;
                    }
                    acc.re
                }
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn sample(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..grid.len()).map(|i| f(&grid.node(i))).collect()
    }

    #[test]
    fn both_kinds_reproduce_nodes() {
        let grid = Grid::from_points(vec![16, 8], vec![TAU, 3.0]).unwrap();
        let f = sample(&grid, |x| (x[0].sin() + (x[1] * 2.0).cos()).exp());
        for kind in [Interpolation::CubicSpline, Interpolation::Trigonometric] {
            let interp = PeriodicInterpolant::new(&grid, &[&f], kind);
            let mut out = [0.0];
            for i in 0..grid.len() {
                interp.eval(&grid.node(i), &mut out);
                assert!((out[0] - f[i]).abs() < 1e-13, "{kind:?} node {i}");
            }
        }
    }

    #[test]
    fn trigonometric_mode_is_exact_on_band_limited_data() {
        let grid = Grid::from_points(vec![32], vec![TAU]).unwrap();
        let f = sample(&grid, |x| x[0].sin() + 0.25 * (7.0 * x[0]).cos());
        let interp = PeriodicInterpolant::new(&grid, &[&f], Interpolation::Trigonometric);
        let mut out = [0.0];
        for x in [0.1, 1.234, -4.0, 20.0] {
            interp.eval(&[x], &mut out);
            let exact = f64::sin(x) + 0.25 * (7.0 * x).cos();
            assert!((out[0] - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn trigonometric_mode_in_three_dimensions() {
        let grid = Grid::from_points(vec![8, 8, 8], vec![TAU, TAU, TAU]).unwrap();
        let g = |x: &[f64]| (x[0] + x[1]).sin() * (2.0 * x[2]).cos();
        let f = sample(&grid, g);
        let interp = PeriodicInterpolant::new(&grid, &[&f], Interpolation::Trigonometric);
        let mut out = [0.0];
        let p = [0.3, 2.2, -1.1];
        interp.eval(&p, &mut out);
        assert!((out[0] - g(&p)).abs() < 1e-13);
    }

    #[test]
    fn cubic_spline_is_fourth_order() {
        let err = |n: usize| {
            let grid = Grid::from_points(vec![n], vec![TAU]).unwrap();
            let f = sample(&grid, |x| x[0].sin().exp());
            let interp = PeriodicInterpolant::new(&grid, &[&f], Interpolation::CubicSpline);
            let mut out = [0.0];
            (0..200)
                .map(|i| {
                    let x = 0.0137 + i as f64 * TAU / 200.0;
                    interp.eval(&[x], &mut out);
                    (out[0] - x.sin().exp()).abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(32) / err(64);
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn periodic_wrap() {
        let grid = Grid::from_points(vec![16], vec![2.0]).unwrap();
        let f = sample(&grid, |x| (PI * x[0]).sin());
        for kind in [Interpolation::CubicSpline, Interpolation::Trigonometric] {
            let interp = PeriodicInterpolant::new(&grid, &[&f], kind);
            let (mut a, mut b) = ([0.0], [0.0]);
            interp.eval(&[0.37], &mut a);
            interp.eval(&[0.37 + 6.0], &mut b);
            assert!((a[0] - b[0]).abs() < 1e-12);
        }
    }
}
