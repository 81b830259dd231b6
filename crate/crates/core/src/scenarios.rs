//! Initial data generators and reference traveling waves.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::equation::{eulerian_rhs, BParams};
use crate::error::{Error, Result};
use crate::grid::{partial_derivative, Grid, VectorField};
use crate::ops;

/// Periodized Gaussian `amplitude·Σ_m exp(−|x − center − mL|²/width²)` on
/// component 0. Images up to two periods away are summed; further ones are
/// below `exp(−(2L/width)²)` relative.
pub fn gaussian_bump(grid: &Arc<Grid>, center: &[f64], amplitude: f64, width: f64) -> Result<VectorField> {
    let spec = grid.spec();
    if center.len() != grid.dim() {
        return Err(Error::InvalidScenario(format!(
            "center has {} coordinates for a {}-dimensional grid",
            center.len(),
            grid.dim()
        )));
    }
    if !amplitude.is_finite() || center.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidScenario("gaussian amplitude and center must be finite".into()));
    }
    if !(width >= 4.0 * spec.max_spacing()) {
        return Err(Error::InvalidScenario(format!(
            "gaussian width {width} is under-resolved; need at least {}",
            4.0 * spec.max_spacing()
        )));
    }
    let lengths = spec.lengths().to_vec();
    // per-axis image sums factorize: exp(−|d|²/w²) = Π_a exp(−d_a²/w²)
    let axis_profile = |a: usize, x: f64| -> f64 {
        let l = lengths[a];
        let d0 = (x - center[a]).rem_euclid(l);
        (-2..=2)
            .map(|m| {
                let d = d0 + m as f64 * l;
                (-(d * d) / (width * width)).exp()
            })
            .sum()
    };
    let dim = grid.dim();
    Ok(VectorField::from_fn(grid, |x| {
        let mut out = vec![0.0; dim];
        out[0] = amplitude * (0..dim).map(|a| axis_profile(a, x[a])).product::<f64>();
        out
    }))
}

/// Per-component spectra of [`band_limited_random`]; modes with any
/// `|k_j| > kmax` are exactly zero.
pub fn band_limited_random_spectra(
    grid: &Arc<Grid>,
    seed: u64,
    kmax: usize,
    amplitude: f64,
) -> Result<Vec<Vec<Complex64>>> {
    if let Some(&n) = grid.points().iter().find(|&&n| 3 * kmax >= n) {
        return Err(Error::InvalidScenario(format!(
            "kmax {kmax} must be below N/3 = {} for N = {n}",
            n as f64 / 3.0
        )));
    }
    if !amplitude.is_finite() {
        return Err(Error::InvalidScenario("random amplitude must be finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kmax = kmax as i64;
    let in_band = |i: usize| grid.mode(i).iter().all(|k| k.abs() <= kmax);
    let mut spectra: Vec<Vec<Complex64>> = (0..grid.dim())
        .map(|_| {
            let raw: Vec<Complex64> = (0..grid.len())
                .map(|i| {
                    if in_band(i) {
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect();
            (0..grid.len()).map(|i| (raw[i] + raw[grid.conjugate_index(i)].conj()) * 0.5).collect()
        })
        .collect();
    let field = ops::from_spectra(grid, spectra.clone());
    let sup = field.sup_norm();
    let scale = if sup > 0.0 { amplitude / sup } else { 0.0 };
    for c in spectra.iter_mut().flatten() {
        *c *= scale;
    }
    Ok(spectra)
}

/// Seeded random field with Hermitian coefficients for `|k_j| ≤ kmax` and
/// `sup|u| = amplitude`.
pub fn band_limited_random(grid: &Arc<Grid>, seed: u64, kmax: usize, amplitude: f64) -> Result<VectorField> {
    let spectra = band_limited_random_spectra(grid, seed, kmax, amplitude)?;
    Ok(ops::from_spectra(grid, spectra))
}

/// `(c/cosh(L/2))·cosh(((x − ct) mod L) − L/2)`, peak value `c` at `x = ct`.
/// Not band-limited: the profile has a derivative jump at its crest.
pub fn periodic_peakon(grid: &Arc<Grid>, c: f64, t: f64) -> Result<VectorField> {
    if grid.dim() != 1 {
        return Err(Error::InvalidScenario(format!("peakon needs a 1D grid, got dimension {}", grid.dim())));
    }
    if c == 0.0 || !c.is_finite() || !t.is_finite() {
        return Err(Error::InvalidScenario(format!("peakon speed must be finite and nonzero, got {c}")));
    }
    let l = grid.spec().lengths()[0];
    let scale = c / (l / 2.0).cosh();
    Ok(VectorField::from_fn(grid, |x| vec![scale * (((x[0] - c * t).rem_euclid(l)) - l / 2.0).cosh()]))
}

/// Gaussian low-pass `exp(−(|ξ|/σ_k)²)` applied to every component.
pub fn mollify(u: &VectorField, sigma_k: f64) -> Result<VectorField> {
    if !(sigma_k > 0.0) {
        return Err(Error::InvalidScenario(format!("mollifier width must be positive, got {sigma_k}")));
    }
    let grid = u.grid();
    let weights: Vec<f64> = (0..grid.len())
        .map(|i| {
            let r2: f64 = grid.xi_of(i).iter().map(|x| x * x).sum();
            (-r2 / (sigma_k * sigma_k)).exp()
        })
        .collect();
    let mut spectra = ops::spectra(u);
    for comp in &mut spectra {
        for (c, w) in comp.iter_mut().zip(&weights) {
            *c *= *w;
        }
    }
    Ok(ops::from_spectra(grid, spectra))
}

/// `‖eulerian_rhs(u) + c·u_x‖_{L²}`, zero for an exact wave `u(x − ct)`.
pub fn traveling_wave_residual(profile: &VectorField, c: f64, p: &BParams) -> Result<f64> {
    if profile.grid().dim() != 1 {
        return Err(Error::InvalidScenario("traveling wave residual is defined in 1D".into()));
    }
    let mut r = eulerian_rhs(profile, p)?;
    let ux = VectorField::new(profile.grid(), vec![partial_derivative(profile.component(0), 0)])?;
    r.axpy(c, &ux);
    Ok(r.l2_norm())
}

/// Peak location of a 1D profile refined by a parabola through the three
/// largest neighbouring samples.
pub fn peak_position(u: &VectorField) -> f64 {
    let grid = u.grid();
    let v = u.component(0).values();
    let n = v.len();
    let (i, _) = v.iter().enumerate().fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| {
        if x > bv {
            (i, x)
        } else {
            (bi, bv)
        }
    });
    let (a, b, c) = (v[(i + n - 1) % n], v[i], v[(i + 1) % n]);
    let denom = a - 2.0 * b + c;
    let offset = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    let h = grid.spec().spacing(0);
    ((i as f64 + offset) * h).rem_euclid(grid.spec().lengths()[0])
}

/// Pearson correlation of two fields over all samples.
pub fn correlation(a: &VectorField, b: &VectorField) -> f64 {
    let x = a.flat_values();
    let y = b.flat_values();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (p, q) in x.iter().zip(&y) {
        sxy += (p - mx) * (q - my);
        sxx += (p - mx) * (p - mx);
        syy += (q - my) * (q - my);
    }
    sxy / (sxx * syy).sqrt()
}
