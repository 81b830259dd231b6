//! Flow maps `φ = id + f` on the torus: composition, inversion and the
//! Jacobian-positivity invariant.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{check_same_grid, jacobian, Grid, ScalarField, VectorField};
use crate::interp::{Interpolation, PeriodicInterpolant};

/// Node count above which per-node work is spread over the rayon pool.
const PARALLEL_THRESHOLD: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowOptions {
    pub interpolation: Interpolation,
    /// Residual tolerance `|φ(ψ(x)) − x|_∞` for the inverse.
    pub newton_tol: f64,
    pub max_iter: usize,
    /// Smallest admissible `det(I + df)` before inversion is refused.
    pub min_det: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { interpolation: Interpolation::CubicSpline, newton_tol: 1e-10, max_iter: 50, min_det: 1e-3 }
    }
}

impl FlowOptions {
    pub fn with_interpolation(interpolation: Interpolation) -> Self {
        Self { interpolation, ..Self::default() }
    }
}

/// `φ(x) = x + f(x)` with periodic displacement `f`.
#[derive(Clone, Debug)]
pub struct FlowMap {
    displacement: VectorField,
}

impl FlowMap {
    pub fn new(displacement: VectorField) -> Result<Self> {
        if !displacement.is_finite() {
            return Err(Error::NonFinite("flow map displacement"));
        }
        Ok(Self { displacement })
    }

    pub(crate) fn from_displacement_unchecked(displacement: VectorField) -> Self {
        Self { displacement }
    }

    pub fn identity(grid: &Arc<Grid>) -> Self {
        Self { displacement: VectorField::zeros(grid) }
    }

    /// Rigid translation `x ↦ x + c`.
    pub fn translation(grid: &Arc<Grid>, c: &[f64]) -> Self {
        Self { displacement: VectorField::from_fn(grid, |_| c.to_vec()) }
    }

    /// Translation by whole cells.
    pub fn cell_shift(grid: &Arc<Grid>, cells: &[i64]) -> Self {
        let c: Vec<f64> =
            cells.iter().enumerate().map(|(a, &m)| m as f64 * grid.spec().spacing(a)).collect();
        Self::translation(grid, &c)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.displacement.grid()
    }

    pub fn displacement(&self) -> &VectorField {
        &self.displacement
    }

    pub fn into_displacement(self) -> VectorField {
        self.displacement
    }

    /// `det(I + df)` at every node.
    pub fn jacobian_determinant(&self) -> ScalarField {
        let grid = self.grid();
        let jac = jacobian(&self.displacement);
        let entry = |i: usize, j: usize, k: usize| {
            jac[i][j].values()[k] + if i == j { 1.0 } else { 0.0 }
        };
        let values = (0..grid.len())
            .map(|k| match grid.dim() {
                1 => entry(0, 0, k),
                2 => entry(0, 0, k) * entry(1, 1, k) - entry(0, 1, k) * entry(1, 0, k),
                _ => {
                    entry(0, 0, k) * (entry(1, 1, k) * entry(2, 2, k) - entry(1, 2, k) * entry(2, 1, k))
                        - entry(0, 1, k) * (entry(1, 0, k) * entry(2, 2, k) - entry(1, 2, k) * entry(2, 0, k))
                        + entry(0, 2, k) * (entry(1, 0, k) * entry(2, 1, k) - entry(1, 1, k) * entry(2, 0, k))
                }
            })
            .collect();
        ScalarField::new(grid, values).expect("grid-sized")
    }

    pub fn min_jacobian(&self) -> f64 {
        self.jacobian_determinant().values().iter().fold(f64::INFINITY, |m, &d| m.min(d))
    }

    /// Mean displacement per axis (the drift of `φ − id`).
    pub fn mean_displacement(&self) -> Vec<f64> {
        self.displacement
            .components()
            .iter()
            .map(|c| c.values().iter().sum::<f64>() / c.values().len() as f64)
            .collect()
    }
}

fn map_nodes<T: Send>(len: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    if len >= PARALLEL_THRESHOLD {
        (0..len).into_par_iter().map(f).collect()
    } else {
        (0..len).map(f).collect()
    }
}

/// `w ∘ φ` sampled at the grid nodes.
pub fn compose(w: &VectorField, phi: &FlowMap, interpolation: Interpolation) -> Result<VectorField> {
    check_same_grid(w.grid(), phi.grid())?;
    if !phi.displacement.is_finite() {
        return Err(Error::NonFinite("flow map displacement"));
    }
    let grid = w.grid();
    let dim = grid.dim();
    let fields: Vec<&[f64]> = w.components().iter().map(|c| c.values()).collect();
    let interp = PeriodicInterpolant::new(grid, &fields, interpolation);
    let disp = &phi.displacement;
    let samples = map_nodes(grid.len(), |k| {
        let mut x = grid.node(k);
        for (a, xa) in x.iter_mut().enumerate() {
            *xa += disp.component(a).values()[k];
        }
        let mut out = vec![0.0; dim];
        interp.eval(&x, &mut out);
        out
    });
    let comps = (0..dim).map(|c| samples.iter().map(|s| s[c]).collect()).collect();
    Ok(VectorField::from_vecs(grid, comps))
}

/// `φ ∘ ψ`, i.e. displacement `g + f∘ψ`.
pub fn compose_maps(phi: &FlowMap, psi: &FlowMap, interpolation: Interpolation) -> Result<FlowMap> {
    let pulled = compose(&phi.displacement, psi, interpolation)?;
    FlowMap::new(psi.displacement.add(&pulled))
}

fn solve_small(m: &[[f64; 3]; 3], r: &[f64], dim: usize) -> Option<[f64; 3]> {
    let mut out = [0.0; 3];
    match dim {
        1 => {
            if m[0][0] == 0.0 {
                return None;
            }
            out[0] = r[0] / m[0][0];
        }
        2 => {
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if det == 0.0 {
                return None;
            }
            out[0] = (r[0] * m[1][1] - m[0][1] * r[1]) / det;
            out[1] = (m[0][0] * r[1] - r[0] * m[1][0]) / det;
        }
        _ => {
            let det3 = |a: &[[f64; 3]; 3]| {
                a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                    - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                    + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
            };
            let det = det3(m);
            if det == 0.0 {
                return None;
            }
            for (col, o) in out.iter_mut().enumerate() {
                let mut c = *m;
                for (row, cr) in c.iter_mut().enumerate() {
                    cr[col] = r[row];
                }
                *o = det3(&c) / det;
            }
        }
    }
    Some(out)
}

/// Inverse map `ψ` with `φ(ψ(x_k)) = x_k`, by damped Newton per node.
///
/// Each node starts from the identity; a full Newton step is halved until the
/// residual decreases. Once the residual is below `newton_tol` one extra
/// Newton step polishes the root to machine precision.
pub fn invert_map(phi: &FlowMap, opts: &FlowOptions) -> Result<FlowMap> {
    let grid = phi.grid();
    let dim = grid.dim();
    let det = phi.jacobian_determinant();
    let min_det = det.values().iter().fold(f64::INFINITY, |m, &d| m.min(d));
    if !(min_det >= opts.min_det) {
        return Err(Error::JacobianMargin { min_det, margin: opts.min_det });
    }
    let jac = jacobian(&phi.displacement);
    let mut fields: Vec<&[f64]> = phi.displacement.components().iter().map(|c| c.values()).collect();
    for row in &jac {
        for entry in row {
            fields.push(entry.values());
        }
    }
    let interp = PeriodicInterpolant::new(grid, &fields, opts.interpolation);

    let solve_node = |k: usize| -> Result<[f64; 3]> {
        let target = grid.node(k);
        let mut vals = vec![0.0; dim + dim * dim];
        let residual_at = |y: &[f64], vals: &mut [f64]| -> [f64; 3] {
            interp.eval(y, vals);
            let mut r = [0.0; 3];
            for a in 0..dim {
                r[a] = y[a] + vals[a] - target[a];
            }
            r
        };
        let norm = |r: &[f64; 3]| r.iter().take(dim).fold(0.0f64, |m, v| m.max(v.abs()));
        let newton_step = |vals: &[f64], r: &[f64; 3]| -> Option<[f64; 3]> {
            let mut m = [[0.0; 3]; 3];
            for i in 0..dim {
                for j in 0..dim {
                    m[i][j] = vals[dim + i * dim + j] + if i == j { 1.0 } else { 0.0 };
                }
            }
            solve_small(&m, r, dim)
        };

        let mut y = target.clone();
        let mut r = residual_at(&y, &mut vals);
        let mut res = norm(&r);
        for _ in 0..opts.max_iter {
            if !res.is_finite() {
                break;
            }
            let Some(delta) = newton_step(&vals, &r) else { break };
            if res <= opts.newton_tol {
                let trial: Vec<f64> = (0..dim).map(|a| y[a] - delta[a]).collect();
                let rt = residual_at(&trial, &mut vals);
                if norm(&rt) <= res {
                    y = trial;
                }
                let mut out = [0.0; 3];
                for a in 0..dim {
                    out[a] = y[a] - target[a];
                }
                return Ok(out);
            }
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let trial: Vec<f64> = (0..dim).map(|a| y[a] - alpha * delta[a]).collect();
                let rt = residual_at(&trial, &mut vals);
                let nt = norm(&rt);
                if nt < res {
                    y = trial;
                    r = rt;
                    res = nt;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if res <= opts.newton_tol {
            let mut out = [0.0; 3];
            for a in 0..dim {
                out[a] = y[a] - target[a];
            }
            return Ok(out);
        }
        Err(Error::NewtonDivergence { node: k, residual: res })
    };

    let solved = map_nodes(grid.len(), solve_node);
    let mut comps = vec![vec![0.0; grid.len()]; dim];
    for (k, node) in solved.into_iter().enumerate() {
        let g = node?;
        for a in 0..dim {
            comps[a][k] = g[a];
        }
    }
    Ok(FlowMap { displacement: VectorField::from_vecs(grid, comps) })
}
