//! Sobolev norms, momentum, energy and the regularity trace.

use serde::Serialize;

use crate::equation::{BParams, MomentumField};
use crate::error::Result;
use crate::flow::FlowMap;
use crate::grid::VectorField;
use crate::integrate::Trajectory;

/// A named time series.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticSeries {
    pub name: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl DiagnosticSeries {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), times: Vec::new(), values: Vec::new() }
    }

    pub fn push(&mut self, time: f64, value: f64) {
        self.times.push(time);
        self.values.push(value);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first(&self) -> Option<f64> {
        self.values.first().copied()
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `‖f‖_{H^s} = sqrt(ΔV Σ_k (1+|ξ_k|²)^s |f̂_k|²)` summed over components,
/// with the unitary transform so that `s = 0` is the trapezoid L² norm.
pub fn sobolev_norm(f: &VectorField, s: f64) -> f64 {
    assert!(s >= 0.0, "sobolev order must be non-negative, got {s}");
    if s == 0.0 {
        return f.l2_norm();
    }
    let grid = f.grid();
    let weights: Vec<f64> = (0..grid.len())
        .map(|i| (1.0 + grid.xi_of(i).iter().map(|x| x * x).sum::<f64>()).powf(s))
        .collect();
    let sum: f64 = f
        .components()
        .iter()
        .map(|c| grid.fft_real(c.values()).iter().zip(&weights).map(|(z, w)| w * z.norm_sqr()).sum::<f64>())
        .sum();
    (sum * grid.spec().cell_volume()).sqrt()
}

pub fn momentum(u: &VectorField, p: &BParams) -> Result<MomentumField> {
    MomentumField::from_velocity(u, p)
}

/// `∫ Au·u dx` by the trapezoid rule.
pub fn energy(u: &VectorField, p: &BParams) -> Result<f64> {
    let m = momentum(u, p)?;
    let sum: f64 = m
        .values()
        .components()
        .iter()
        .zip(u.components())
        .map(|(a, b)| a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum::<f64>())
        .sum();
    Ok(sum * u.grid().spec().cell_volume())
}

/// `∫ Ω dx` per component.
pub fn mean_momentum(u: &VectorField, p: &BParams) -> Result<Vec<f64>> {
    let m = momentum(u, p)?;
    let dv = u.grid().spec().cell_volume();
    Ok(m.values().components().iter().map(|c| c.values().iter().sum::<f64>() * dv).collect())
}

pub fn jacobian_min(phi: &FlowMap) -> f64 {
    phi.min_jacobian()
}

/// Sobolev norms of every snapshot velocity at each order, plus the ratio
/// series `‖u‖_{s+1}/‖u‖_s` named `ratio_<s>`.
pub fn regularity_trace(traj: &Trajectory, orders: &[f64]) -> Vec<DiagnosticSeries> {
    let mut norms: Vec<DiagnosticSeries> = orders.iter().map(|s| DiagnosticSeries::new(format!("sobolev_{s}"))).collect();
    let mut ratios: Vec<DiagnosticSeries> = orders.iter().map(|s| DiagnosticSeries::new(format!("ratio_{s}"))).collect();
    for snap in traj.snapshots() {
        for (k, &s) in orders.iter().enumerate() {
            let low = sobolev_norm(&snap.velocity, s);
            let high = sobolev_norm(&snap.velocity, s + 1.0);
            norms[k].push(snap.time, low);
            ratios[k].push(snap.time, if low > 0.0 { high / low } else { 0.0 });
        }
    }
    norms.extend(ratios);
    norms
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::multipliers::{builtin_diff_poly, builtin_sobolev, MultiplierSymbol, PolyTerm};
    use crate::scenarios::band_limited_random;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};
    use std::sync::Arc;

    fn line(n: usize) -> Arc<Grid> {
        Grid::from_points(vec![n], vec![TAU]).unwrap()
    }

    fn sine(grid: &Arc<Grid>) -> VectorField {
        VectorField::from_fn(grid, |x| vec![x[0].sin()])
    }

    fn helmholtz(grid: &Arc<Grid>) -> BParams {
        BParams::new(2.0, builtin_sobolev(1, 1.0).unwrap(), grid).unwrap()
    }

    #[test]
    fn sobolev_values() {
        let grid = line(64);
        assert_eq!(sobolev_norm(&VectorField::zeros(&grid), 1.5), 0.0);
        let u = sine(&grid);
        assert!((sobolev_norm(&u, 1.0) - (2.0 * PI).sqrt()).abs() < 1e-13);
        assert!((sobolev_norm(&u, 1.0) - 2.5066283).abs() < 1e-7);
        assert_eq!(sobolev_norm(&u, 0.0), u.l2_norm());
    }

    #[test]
    fn momentum_and_energy_of_sine() {
        let grid = line(64);
        let u = sine(&grid);
        let p = helmholtz(&grid);
        let m = momentum(&u, &p).unwrap();
        // roundoff at |k| ~ N/2 is amplified by 1 + k²
        assert!(m.values().max_abs_diff(&u.scaled(2.0)) < 1e-12);
        assert!((energy(&u, &p).unwrap() - TAU).abs() < 1e-12);
        assert_eq!(energy(&VectorField::zeros(&grid), &p).unwrap(), 0.0);

        let id = BParams::new(2.0, MultiplierSymbol::identity(1), &grid).unwrap();
        assert!(momentum(&u, &id).unwrap().values().max_abs_diff(&u) < 1e-15);
        let l2 = u.l2_norm();
        assert!((energy(&u, &id).unwrap() - l2 * l2).abs() < 1e-12);
    }

    #[test]
    fn helmholtz_polynomial_matches_sobolev_bitwise() {
        let grid = line(64);
        let u = band_limited_random(&grid, 5, 10, 1.0).unwrap();
        let poly = builtin_diff_poly(1, &[PolyTerm::real(1.0, vec![0]), PolyTerm::real(-1.0, vec![2])]).unwrap();
        let a = momentum(&u, &BParams::new(2.0, poly, &grid).unwrap()).unwrap();
        let b = momentum(&u, &helmholtz(&grid)).unwrap();
        assert_eq!(a.values().flat_values(), b.values().flat_values());
    }

    #[test]
    fn mean_momentum_values() {
        let grid = line(64);
        let p = helmholtz(&grid);
        let u = VectorField::from_fn(&grid, |x| vec![1.0 + x[0].sin()]);
        assert!((mean_momentum(&u, &p).unwrap()[0] - TAU).abs() < 1e-12);
        assert!(mean_momentum(&sine(&grid), &p).unwrap()[0].abs() < 1e-14);
    }

    #[test]
    fn mean_momentum_rate_vanishes_for_helmholtz() {
        // d/dt ∫m = −(b−1)∫u_x m for m = u − u_xx; integrand is an exact derivative
        let grid = line(128);
        let u = band_limited_random(&grid, 9, 20, 1.0).unwrap();
        for b in [0.0, 1.0, 2.0, 3.0] {
            let p = BParams::new(b, builtin_sobolev(1, 1.0).unwrap(), &grid).unwrap();
            let rhs = crate::equation::eulerian_rhs(&u, &p).unwrap();
            let rate = mean_momentum(&rhs, &p).unwrap()[0];
            // m carries kmax² ≈ 400 times the velocity scale
            assert!(rate.abs() < 1e-11, "b={b}: {rate}");
        }
    }

    #[test]
    fn jacobian_min_closed_forms() {
        let grid = line(128);
        assert_eq!(jacobian_min(&FlowMap::identity(&grid)), 1.0);
        let half = FlowMap::new(VectorField::from_fn(&grid, |x| vec![0.5 * x[0].sin()])).unwrap();
        assert!((jacobian_min(&half) - 0.5).abs() < 1e-13);
        let fold = FlowMap::new(VectorField::from_fn(&grid, |x| vec![1.5 * x[0].sin()])).unwrap();
        assert!((jacobian_min(&fold) + 0.5).abs() < 1e-13);
    }

    #[test]
    fn energy_is_positive_for_nonzero_fields_in_2d() {
        let grid = Grid::from_points(vec![16, 16], vec![TAU, TAU]).unwrap();
        let p = BParams::new(2.0, builtin_sobolev(2, 1.0).unwrap(), &grid).unwrap();
        for seed in 0..10 {
            let u = band_limited_random(&grid, seed, 5, 1.0).unwrap();
            assert!(energy(&u, &p).unwrap() > 0.0);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn sobolev_norm_is_monotone_in_order(seed in 0u64..1000, s1 in 0.0f64..3.0, ds in 0.0f64..3.0) {
            let grid = Grid::from_points(vec![32, 16], vec![TAU, 5.0]).unwrap();
            let u = band_limited_random(&grid, seed, 4, 1.0).unwrap();
            let low = sobolev_norm(&u, s1);
            let high = sobolev_norm(&u, s1 + ds);
            prop_assert!(low <= high * (1.0 + 1e-14));
        }

        #[test]
        fn sobolev_norm_is_homogeneous(seed in 0u64..1000, scale in -4.0f64..4.0, s in 0.0f64..4.0) {
            let grid = line(64);
            let u = band_limited_random(&grid, seed, 10, 1.0).unwrap();
            let a = sobolev_norm(&u.scaled(scale), s);
            let b = scale.abs() * sobolev_norm(&u, s);
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
        }
    }
}
