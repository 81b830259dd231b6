//! The b-equation right sides: Eulerian velocity form, the bilinear form `B`,
//! the spray `S` and its right-conjugated Lagrangian version.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::flow::{compose, invert_map, FlowMap, FlowOptions};
use crate::grid::{check_same_grid, jacobian, Grid, GridSpec, VectorField};
use crate::multipliers::{GridMultiplier, MultiplierSymbol};
use crate::ops;

/// Parameters of one b-equation: the family parameter `b` and the inertia `A`
/// tabulated (with its inverse) on a grid.
#[derive(Clone, Debug)]
pub struct BParams {
    b: f64,
    inertia: MultiplierSymbol,
    grid: Arc<Grid>,
    forward: GridMultiplier,
    inverse: GridMultiplier,
    flow: FlowOptions,
}

impl BParams {
    pub fn new(b: f64, inertia: MultiplierSymbol, grid: &Arc<Grid>) -> Result<Self> {
        if !b.is_finite() {
            return Err(Error::InvalidConfig(format!("b must be finite, got {b}")));
        }
        let forward = GridMultiplier::new(&inertia, grid)?;
        let inverse = forward.inverse()?;
        Ok(Self { b, inertia, grid: grid.clone(), forward, inverse, flow: FlowOptions::default() })
    }

    pub fn with_flow_options(mut self, flow: FlowOptions) -> Self {
        self.flow = flow;
        self
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn inertia(&self) -> &MultiplierSymbol {
        &self.inertia
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn spec(&self) -> &GridSpec {
        self.grid.spec()
    }

    pub fn forward(&self) -> &GridMultiplier {
        &self.forward
    }

    pub fn inverse(&self) -> &GridMultiplier {
        &self.inverse
    }

    pub fn flow_options(&self) -> &FlowOptions {
        &self.flow
    }
}

/// `Ω = Au` for a velocity `u`.
#[derive(Clone, Debug)]
pub struct MomentumField {
    values: VectorField,
}

impl MomentumField {
    pub fn from_velocity(u: &VectorField, p: &BParams) -> Result<Self> {
        check_same_grid(u.grid(), p.grid())?;
        Ok(Self { values: p.forward.apply(u)? })
    }

    pub fn values(&self) -> &VectorField {
        &self.values
    }

    pub fn into_values(self) -> VectorField {
        self.values
    }
}

/// `(u·∇)m + (∇u)ᵀm + (b − 1) div(u) m` in real space, not yet dealiased.
fn transport(u: &VectorField, m: &VectorField, b: f64) -> VectorField {
    let jac_u = jacobian(u);
    let mut out = ops::advective(u, m);
    out.axpy(1.0, &ops::transposed_gradient(&jac_u, m));
    out.axpy(b - 1.0, &ops::divergence_times(&jac_u, m));
    out
}

fn finish(grid: &Arc<Grid>, spectra: Vec<Vec<Complex64>>, what: &'static str) -> Result<VectorField> {
    let out = ops::from_spectra(grid, spectra);
    if !out.is_finite() {
        return Err(Error::NonFinite(what));
    }
    Ok(out)
}

/// `u_t = −A⁻¹(∇_u(Au) + (∇u)ᵀAu + (b − 1) div(u) Au)`.
pub fn eulerian_rhs(u: &VectorField, p: &BParams) -> Result<VectorField> {
    check_same_grid(u.grid(), p.grid())?;
    let au = p.forward.apply(u)?;
    let mut spectra = ops::dealiased_spectra(&transport(u, &au, p.b));
    p.inverse.apply_spectra(&mut spectra);
    for c in spectra.iter_mut().flatten() {
        *c = -*c;
    }
    finish(u.grid(), spectra, "eulerian right side")
}

/// Symmetrized connection form `½A⁻¹(T(u, Av) + T(v, Au))`.
pub fn bilinear_b(u: &VectorField, v: &VectorField, p: &BParams) -> Result<VectorField> {
    check_same_grid(u.grid(), p.grid())?;
    check_same_grid(v.grid(), p.grid())?;
    let au = p.forward.apply(u)?;
    let av = p.forward.apply(v)?;
    let sum = transport(u, &av, p.b).add(&transport(v, &au, p.b));
    let mut spectra = ops::dealiased_spectra(&sum);
    p.inverse.apply_spectra(&mut spectra);
    for c in spectra.iter_mut().flatten() {
        *c *= 0.5;
    }
    finish(u.grid(), spectra, "bilinear form")
}

/// `S(u) = A⁻¹([A, ∇_u]u − (∇u)ᵀAu − (b − 1) div(u) Au)`.
pub fn spray_s(u: &VectorField, p: &BParams) -> Result<VectorField> {
    check_same_grid(u.grid(), p.grid())?;
    let au = p.forward.apply(u)?;
    // [A, ∇_u]u = A(u·∇u) − u·∇(Au); the second piece joins the transport term
    let mut first = ops::dealiased_spectra(&ops::advective(u, u));
    p.forward.apply_spectra(&mut first);
    let second = ops::dealiased_spectra(&transport(u, &au, p.b));
    let mut spectra: Vec<Vec<Complex64>> = first
        .into_iter()
        .zip(second)
        .map(|(a, b)| a.into_iter().zip(b).map(|(x, y)| x - y).collect())
        .collect();
    p.inverse.apply_spectra(&mut spectra);
    finish(u.grid(), spectra, "spray")
}

/// `S_φ(v) = (S(v∘φ⁻¹))∘φ`.
pub fn spray_conjugated(phi: &FlowMap, v: &VectorField, p: &BParams) -> Result<VectorField> {
    let u = eulerian_velocity(phi, v, p)?;
    compose(&spray_s(&u, p)?, phi, p.flow.interpolation)
}

/// `u = v∘φ⁻¹`.
pub fn eulerian_velocity(phi: &FlowMap, v: &VectorField, p: &BParams) -> Result<VectorField> {
    check_same_grid(phi.grid(), p.grid())?;
    let psi = invert_map(phi, &p.flow)?;
    compose(v, &psi, p.flow.interpolation)
}

/// `(φ_t, v_t) = (v, S_φ(v))`.
pub fn lagrangian_rhs(phi: &FlowMap, v: &VectorField, p: &BParams) -> Result<(VectorField, VectorField)> {
    Ok((v.clone(), spray_conjugated(phi, v, p)?))
}
