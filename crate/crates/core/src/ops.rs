//! Pointwise products on vector fields and their dealiased projections.

use num_complex::Complex64;

use crate::grid::{jacobian, trace, ScalarField, VectorField};

/// `(u·∇)w`, componentwise, without dealiasing.
pub fn advective(u: &VectorField, w: &VectorField) -> VectorField {
    let grid = u.grid();
    let jac = jacobian(w);
    let comps = (0..grid.dim())
        .map(|i| {
            let mut out = vec![0.0; grid.len()];
            for (j, entry) in jac[i].iter().enumerate() {
                for ((o, uj), d) in out.iter_mut().zip(u.component(j).values()).zip(entry.values()) {
                    *o += uj * d;
                }
            }
            out
        })
        .collect();
    VectorField::from_vecs(grid, comps)
}

/// `(∇u)ᵀ m`: component `i` is `Σ_j ∂_i u_j · m_j`.
pub fn transposed_gradient(jac_u: &[Vec<ScalarField>], m: &VectorField) -> VectorField {
    let grid = m.grid();
    let comps = (0..grid.dim())
        .map(|i| {
            let mut out = vec![0.0; grid.len()];
            for (j, row) in jac_u.iter().enumerate() {
                for ((o, d), mj) in out.iter_mut().zip(row[i].values()).zip(m.component(j).values()) {
                    *o += d * mj;
                }
            }
            out
        })
        .collect();
    VectorField::from_vecs(grid, comps)
}

/// `div(u) · m` given the Jacobian of `u`.
pub fn divergence_times(jac_u: &[Vec<ScalarField>], m: &VectorField) -> VectorField {
    let div = trace(jac_u);
    let comps = m
        .components()
        .iter()
        .map(|c| c.values().iter().zip(div.values()).map(|(a, d)| a * d).collect())
        .collect();
    VectorField::from_vecs(m.grid(), comps)
}

/// Forward transforms of every component.
pub fn spectra(u: &VectorField) -> Vec<Vec<Complex64>> {
    u.components().iter().map(|c| u.grid().fft_real(c.values())).collect()
}

/// Forward transforms with the two-thirds rule applied.
pub fn dealiased_spectra(u: &VectorField) -> Vec<Vec<Complex64>> {
    let grid = u.grid();
    let mut out = spectra(u);
    for c in &mut out {
        grid.dealias_in_place(c);
    }
    out
}

pub fn from_spectra(grid: &std::sync::Arc<crate::grid::Grid>, spectra: Vec<Vec<Complex64>>) -> VectorField {
    VectorField::from_vecs(grid, spectra.into_iter().map(|c| grid.ifft_real(c)).collect())
}

/// Dealiased projection of a field.
pub fn project(u: &VectorField) -> VectorField {
    from_spectra(u.grid(), dealiased_spectra(u))
}
