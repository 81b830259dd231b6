//! Fourier-multiplier operators `A = op(a(ξ))`.
//!
//! A [`MultiplierSymbol`] is the continuous symbol; a [`GridMultiplier`] is
//! its tabulation at the wavevectors of one grid, which is what the solvers
//! apply. Tabulated values at self-conjugate modes (every axis at 0 or
//! Nyquist) keep only their real part so real fields map to real fields.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{check_same_grid, Grid, VectorField};
use crate::ops;

pub type SymbolMatrix = DMatrix<Complex64>;

/// Largest per-mode condition number accepted when inverting a symbol.
pub const CONDITION_CAP: f64 = 1e12;

type ScalarFn = dyn Fn(&[f64]) -> Complex64 + Send + Sync;
type MatrixFn = dyn Fn(&[f64]) -> SymbolMatrix + Send + Sync;

#[derive(Clone)]
enum SymbolFn {
    Scalar(Arc<ScalarFn>),
    Matrix(Arc<MatrixFn>),
}

#[derive(Clone)]
pub struct MultiplierSymbol {
    dim: usize,
    order: f64,
    name: String,
    func: SymbolFn,
}

impl fmt::Debug for MultiplierSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiplierSymbol")
            .field("dim", &self.dim)
            .field("order", &self.order)
            .field("name", &self.name)
            .field("scalar", &self.is_scalar())
            .finish()
    }
}

impl MultiplierSymbol {
    /// Symbol of the form `a(ξ)·Id`.
    pub fn scalar(
        dim: usize,
        order: f64,
        name: impl Into<String>,
        f: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self { dim, order, name: name.into(), func: SymbolFn::Scalar(Arc::new(f)) }
    }

    /// General `n×n` matrix-valued symbol.
    pub fn matrix(
        dim: usize,
        order: f64,
        name: impl Into<String>,
        f: impl Fn(&[f64]) -> SymbolMatrix + Send + Sync + 'static,
    ) -> Self {
        Self { dim, order, name: name.into(), func: SymbolFn::Matrix(Arc::new(f)) }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, 0.0, "identity", |_| Complex64::new(1.0, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self.func, SymbolFn::Scalar(_))
    }

    /// Scalar value for scalar symbols.
    pub fn evaluate_scalar(&self, xi: &[f64]) -> Option<Complex64> {
        match &self.func {
            SymbolFn::Scalar(f) => Some(f(xi)),
            SymbolFn::Matrix(_) => None,
        }
    }

    pub fn evaluate(&self, xi: &[f64]) -> SymbolMatrix {
        match &self.func {
            SymbolFn::Scalar(f) => {
                let a = f(xi);
                SymbolMatrix::from_diagonal_element(self.dim, self.dim, a)
            }
            SymbolFn::Matrix(f) => f(xi),
        }
    }
}

/// `Λ^{2s} = op((1+|ξ|²)^s)`.
pub fn builtin_sobolev(dim: usize, s: f64) -> Result<MultiplierSymbol> {
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::InvalidSymbol(format!("sobolev exponent s = {s} must be >= 0")));
    }
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidSymbol(format!("dimension {dim} not in 1..=3")));
    }
    Ok(MultiplierSymbol::scalar(dim, 2.0 * s, format!("sobolev(s={s})"), move |xi| {
        let base = 1.0 + xi.iter().map(|x| x * x).sum::<f64>();
        let value = if s == 1.0 { base } else { base.powf(s) };
        Complex64::new(value, 0.0)
    }))
}

/// Hilbert transform, symbol `-i sgn(ξ)` with `sgn(0) = 0`.
pub fn builtin_hilbert(dim: usize) -> Result<MultiplierSymbol> {
    if dim != 1 {
        return Err(Error::InvalidSymbol(format!("hilbert transform needs dimension 1, got {dim}")));
    }
    Ok(MultiplierSymbol::scalar(1, 0.0, "hilbert", |xi| {
        let sgn = if xi[0] > 0.0 {
            1.0
        } else if xi[0] < 0.0 {
            -1.0
        } else {
            0.0
        };
        Complex64::new(0.0, -sgn)
    }))
}

/// One term `coeff · ∂^powers` of a constant-coefficient differential operator.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyTerm {
    pub coeff: Complex64,
    pub powers: Vec<u32>,
}

impl PolyTerm {
    pub fn real(coeff: f64, powers: Vec<u32>) -> Self {
        Self { coeff: Complex64::new(coeff, 0.0), powers }
    }
}

fn i_power(x: f64, p: u32) -> Complex64 {
    let m = x.powi(p as i32);
    match p % 4 {
        0 => Complex64::new(m, 0.0),
        1 => Complex64::new(0.0, m),
        2 => Complex64::new(-m, 0.0),
        _ => Complex64::new(0.0, -m),
    }
}

/// `Σ c_α ∂^α`, whose symbol is `Σ c_α (iξ)^α`.
pub fn builtin_diff_poly(dim: usize, terms: &[PolyTerm]) -> Result<MultiplierSymbol> {
    if terms.is_empty() {
        return Err(Error::InvalidSymbol("differential polynomial has no terms".into()));
    }
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidSymbol(format!("dimension {dim} not in 1..=3")));
    }
    for t in terms {
        if t.powers.len() != dim {
            return Err(Error::InvalidSymbol(format!(
                "term has {} exponents, expected {dim}",
                t.powers.len()
            )));
        }
        if !(t.coeff.re.is_finite() && t.coeff.im.is_finite()) {
            return Err(Error::InvalidSymbol("non-finite coefficient".into()));
        }
    }
    let order = terms
        .iter()
        .filter(|t| t.coeff != Complex64::new(0.0, 0.0))
        .map(|t| t.powers.iter().sum::<u32>())
        .max()
        .unwrap_or(0) as f64;
    let terms = terms.to_vec();
    let all_real = terms.iter().all(|t| t.coeff.im == 0.0);
    Ok(MultiplierSymbol::scalar(dim, order, "diff_poly", move |xi| {
        let mut re = 0.0;
        let mut im = 0.0;
        for t in &terms {
            let mut monomial = Complex64::new(1.0, 0.0);
            for (&x, &p) in xi.iter().zip(&t.powers) {
                if p > 0 {
                    monomial *= i_power(x, p);
                }
            }
            if all_real {
                re += t.coeff.re * monomial.re;
                im += t.coeff.re * monomial.im;
            } else {
                let v = t.coeff * monomial;
                re += v.re;
                im += v.im;
            }
        }
        Complex64::new(re, im)
    }))
}

#[derive(Clone, Debug)]
enum Table {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
    Matrix(Vec<SymbolMatrix>),
}

/// A symbol tabulated at every wavevector of a grid.
#[derive(Clone, Debug)]
pub struct GridMultiplier {
    grid: Arc<Grid>,
    table: Table,
}

impl GridMultiplier {
    pub fn new(symbol: &MultiplierSymbol, grid: &Arc<Grid>) -> Result<Self> {
        if symbol.dim() != grid.dim() {
            return Err(Error::GridMismatch(format!(
                "symbol dimension {} vs grid dimension {}",
                symbol.dim(),
                grid.dim()
            )));
        }
        let len = grid.len();
        let table = match &symbol.func {
            SymbolFn::Scalar(f) => {
                let mut values = Vec::with_capacity(len);
                for i in 0..len {
                    let xi = grid.xi_of(i);
                    let mut a = f(&xi);
                    if !(a.re.is_finite() && a.im.is_finite()) {
                        return Err(Error::NonFinite("symbol evaluation"));
                    }
                    if grid.is_self_conjugate(i) {
                        a.im = 0.0;
                    }
                    values.push(a);
                }
                if values.iter().all(|a| a.im == 0.0) {
                    Table::Real(values.into_iter().map(|a| a.re).collect())
                } else {
                    Table::Complex(values)
                }
            }
            SymbolFn::Matrix(f) => {
                let mut values = Vec::with_capacity(len);
                for i in 0..len {
                    let xi = grid.xi_of(i);
                    let mut a = f(&xi);
                    if a.nrows() != grid.dim() || a.ncols() != grid.dim() {
                        return Err(Error::InvalidSymbol(format!(
                            "symbol returned a {}x{} matrix",
                            a.nrows(),
                            a.ncols()
                        )));
                    }
                    if a.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
                        return Err(Error::NonFinite("symbol evaluation"));
                    }
                    if grid.is_self_conjugate(i) {
                        a.iter_mut().for_each(|c| c.im = 0.0);
                    }
                    values.push(a);
                }
                Table::Matrix(values)
            }
        };
        Ok(Self { grid: grid.clone(), table })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Tabulated value at the zero mode for scalar tables.
    pub fn zero_mode(&self) -> Option<Complex64> {
        match &self.table {
            Table::Real(v) => Some(Complex64::new(v[0], 0.0)),
            Table::Complex(v) => Some(v[0]),
            Table::Matrix(_) => None,
        }
    }

    /// Mode-wise inverse; rejects singular modes or condition numbers above `cap`.
    pub fn inverse_with_cap(&self, cap: f64) -> Result<Self> {
        let singular = |i: usize, condition: f64| Error::SingularSymbol {
            xi: self.grid.xi_of(i),
            condition,
        };
        let table = match &self.table {
            Table::Real(v) => Table::Real(
                v.iter()
                    .enumerate()
                    .map(|(i, &a)| {
                        if a == 0.0 || !(1.0 / a).is_finite() {
                            Err(singular(i, f64::INFINITY))
                        } else {
                            Ok(1.0 / a)
                        }
                    })
                    .collect::<Result<_>>()?,
            ),
            Table::Complex(v) => Table::Complex(
                v.iter()
                    .enumerate()
                    .map(|(i, &a)| {
                        let inv = a.inv();
                        if a.norm() == 0.0 || !(inv.re.is_finite() && inv.im.is_finite()) {
                            Err(singular(i, f64::INFINITY))
                        } else {
                            Ok(inv)
                        }
                    })
                    .collect::<Result<_>>()?,
            ),
            Table::Matrix(v) => Table::Matrix(
                v.iter()
                    .enumerate()
                    .map(|(i, a)| {
                        let sv = a.clone().singular_values();
                        let smax = sv.iter().fold(0.0f64, |m, s| m.max(*s));
                        let smin = sv.iter().fold(f64::INFINITY, |m, s| m.min(*s));
                        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
                        if !(condition <= cap) {
                            return Err(singular(i, condition));
                        }
                        a.clone().try_inverse().ok_or_else(|| singular(i, condition))
                    })
                    .collect::<Result<_>>()?,
            ),
        };
        Ok(Self { grid: self.grid.clone(), table })
    }

    pub fn inverse(&self) -> Result<Self> {
        self.inverse_with_cap(CONDITION_CAP)
    }

    /// Multiply per-component spectra in place.
    pub fn apply_spectra(&self, spectra: &mut [Vec<Complex64>]) {
        match &self.table {
            Table::Real(v) => {
                for comp in spectra.iter_mut() {
                    for (c, a) in comp.iter_mut().zip(v) {
                        *c *= *a;
                    }
                }
            }
            Table::Complex(v) => {
                for comp in spectra.iter_mut() {
                    for (c, a) in comp.iter_mut().zip(v) {
                        *c *= *a;
                    }
                }
            }
            Table::Matrix(v) => {
                let n = spectra.len();
                let mut buf = vec![Complex64::new(0.0, 0.0); n];
                for (mode, a) in v.iter().enumerate() {
                    for (i, b) in buf.iter_mut().enumerate() {
                        *b = (0..n).map(|j| a[(i, j)] * spectra[j][mode]).sum();
                    }
                    for (i, b) in buf.iter().enumerate() {
                        spectra[i][mode] = *b;
                    }
                }
            }
        }
    }

    pub fn apply(&self, u: &VectorField) -> Result<VectorField> {
        check_same_grid(&self.grid, u.grid())?;
        let mut spectra = ops::spectra(u);
        self.apply_spectra(&mut spectra);
        let out = ops::from_spectra(u.grid(), spectra);
        if !out.is_finite() {
            return Err(Error::NonFinite("multiplier application"));
        }
        Ok(out)
    }
}

/// `A u` evaluated mode by mode.
pub fn apply(symbol: &MultiplierSymbol, u: &VectorField) -> Result<VectorField> {
    GridMultiplier::new(symbol, u.grid())?.apply(u)
}

/// `A⁻¹ w`; fails with the offending ξ when a mode is singular or ill-conditioned.
pub fn apply_inverse(symbol: &MultiplierSymbol, w: &VectorField) -> Result<VectorField> {
    GridMultiplier::new(symbol, w.grid())?.inverse()?.apply(w)
}

/// `[A, ∇_u]u = A(∇_u u) − ∇_u(Au)` from a tabulated operator, products dealiased.
pub fn commutator_with(a: &GridMultiplier, u: &VectorField) -> Result<VectorField> {
    let grid = u.grid();
    let mut first = ops::dealiased_spectra(&ops::advective(u, u));
    a.apply_spectra(&mut first);
    let au = a.apply(u)?;
    let second = ops::dealiased_spectra(&ops::advective(u, &au));
    let diff = first
        .into_iter()
        .zip(second)
        .map(|(p, q)| p.into_iter().zip(q).map(|(x, y)| x - y).collect())
        .collect();
    let out = ops::from_spectra(grid, diff);
    if !out.is_finite() {
        return Err(Error::NonFinite("commutator"));
    }
    Ok(out)
}

pub fn commutator_term(symbol: &MultiplierSymbol, u: &VectorField) -> Result<VectorField> {
    commutator_with(&GridMultiplier::new(symbol, u.grid())?, u)
}

/// Sample set for [`validate_class`].
#[derive(Clone, Debug)]
pub struct SamplingPlan {
    /// Largest sampled frequency magnitude.
    pub xi_max: f64,
    /// Number of magnitudes: zero followed by a logarithmic ladder.
    pub magnitudes: usize,
    /// Smallest nonzero magnitude of the ladder.
    pub xi_min: f64,
    /// Bound on every certified ratio.
    pub cap: f64,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        Self { xi_max: 1e3, magnitudes: 200, xi_min: 1e-2, cap: 20.0 }
    }
}

impl SamplingPlan {
    pub fn magnitudes(&self) -> Vec<f64> {
        let count = self.magnitudes.max(2);
        let lo = self.xi_min.ln();
        let hi = self.xi_max.ln();
        std::iter::once(0.0)
            .chain((0..count - 1).map(|i| {
                let t = if count > 2 { i as f64 / (count - 2) as f64 } else { 1.0 };
                (lo + t * (hi - lo)).exp()
            }))
            .collect()
    }

    /// Unit sampling directions: coordinate axes and diagonals.
    pub fn directions(dim: usize) -> Vec<Vec<f64>> {
        match dim {
            1 => vec![vec![1.0], vec![-1.0]],
            2 => (0..8)
                .map(|k| {
                    let t = k as f64 * PI / 4.0;
                    vec![t.cos(), t.sin()]
                })
                .collect(),
            _ => {
                let mut dirs = Vec::new();
                for axis in 0..3 {
                    for sign in [1.0, -1.0] {
                        let mut d = vec![0.0; 3];
                        d[axis] = sign;
                        dirs.push(d);
                    }
                }
                let r = 1.0 / 3f64.sqrt();
                for mask in 0..8u32 {
                    dirs.push(
                        (0..3).map(|a| if mask & (1 << a) != 0 { -r } else { r }).collect(),
                    );
                }
                dirs
            }
        }
    }
}

/// Outcome of the numerical symbol-class certification.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ClassReport {
    pub symbol: String,
    pub order_tested: f64,
    pub cap: f64,
    pub s_r_bound_ok: bool,
    pub s_r_worst_ratio: f64,
    pub elliptic_ok: bool,
    pub elliptic_worst_ratio: f64,
    pub hermitian_pd_ok: bool,
    pub max_hermitian_defect: f64,
    pub min_eigenvalue: f64,
    pub sample_count: usize,
}

impl ClassReport {
    pub fn all_ok(&self) -> bool {
        self.s_r_bound_ok && self.elliptic_ok && self.hermitian_pd_ok
    }
}

fn operator_norm(m: &SymbolMatrix) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)].norm();
    }
    m.clone().singular_values().iter().fold(0.0, |a, s| a.max(*s))
}

fn min_singular_value(m: &SymbolMatrix) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)].norm();
    }
    m.clone().singular_values().iter().fold(f64::INFINITY, |a, s| a.min(*s))
}

fn checked_eval(symbol: &MultiplierSymbol, xi: &[f64]) -> Result<SymbolMatrix> {
    let a = symbol.evaluate(xi);
    if a.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(Error::NonFinite("symbol evaluation"));
    }
    Ok(a)
}

/// Fourth-order central first difference along `axis`.
fn first_difference(symbol: &MultiplierSymbol, xi: &[f64], axis: usize, h: f64) -> Result<SymbolMatrix> {
    let at = |offset: f64| {
        let mut p = xi.to_vec();
        p[axis] += offset;
        checked_eval(symbol, &p)
    };
    let s = Complex64::new(1.0 / (12.0 * h), 0.0);
    Ok((at(-2.0 * h)? - at(2.0 * h)? + (at(h)? - at(-h)?) * Complex64::new(8.0, 0.0)) * s)
}

/// Fourth-order central second difference, pure or mixed.
fn second_difference(
    symbol: &MultiplierSymbol,
    xi: &[f64],
    a: usize,
    b: usize,
    h: f64,
) -> Result<SymbolMatrix> {
    if a == b {
        let at = |offset: f64| {
            let mut p = xi.to_vec();
            p[a] += offset;
            checked_eval(symbol, &p)
        };
        let s = Complex64::new(1.0 / (12.0 * h * h), 0.0);
        let centre = at(0.0)? * Complex64::new(30.0, 0.0);
        let near = (at(h)? + at(-h)?) * Complex64::new(16.0, 0.0);
        let far = at(2.0 * h)? + at(-2.0 * h)?;
        return Ok((near - far - centre) * s);
    }
    let weights = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];
    let n = symbol.dim();
    let mut acc = SymbolMatrix::zeros(n, n);
    for &(oa, wa) in &weights {
        for &(ob, wb) in &weights {
            let mut p = xi.to_vec();
            p[a] += oa * h;
            p[b] += ob * h;
            acc += checked_eval(symbol, &p)? * Complex64::new(wa * wb, 0.0);
        }
    }
    Ok(acc * Complex64::new(1.0 / (144.0 * h * h), 0.0))
}

/// Numerical falsification test of S^r, ellipticity and Hermitian
/// positive-definiteness on a finite sample set.
pub fn validate_class(symbol: &MultiplierSymbol, order: f64, plan: &SamplingPlan) -> Result<ClassReport> {
    let dim = symbol.dim();
    let mut s_r_worst = 0.0f64;
    let mut elliptic_worst = 0.0f64;
    let mut herm_defect = 0.0f64;
    let mut herm_ok = true;
    let mut min_eig = f64::INFINITY;
    let mut count = 0;
    let directions = SamplingPlan::directions(dim);
    for magnitude in plan.magnitudes() {
        for dir in &directions {
            let xi: Vec<f64> = dir.iter().map(|d| d * magnitude).collect();
            let weight = 1.0 + magnitude * magnitude;
            let h = 1e-3 * (1.0 + magnitude);
            let a = checked_eval(symbol, &xi)?;
            count += 1;

            s_r_worst = s_r_worst.max(operator_norm(&a) / weight.powf(order / 2.0));
            for i in 0..dim {
                let d1 = first_difference(symbol, &xi, i, h)?;
                s_r_worst = s_r_worst.max(operator_norm(&d1) / weight.powf((order - 1.0) / 2.0));
                for j in i..dim {
                    let d2 = second_difference(symbol, &xi, i, j, h)?;
                    s_r_worst =
                        s_r_worst.max(operator_norm(&d2) / weight.powf((order - 2.0) / 2.0));
                }
            }

            let smin = min_singular_value(&a);
            let inv_norm = if smin > 0.0 { 1.0 / smin } else { f64::INFINITY };
            elliptic_worst = elliptic_worst.max(inv_norm * weight.powf(order / 2.0));

            let adjoint = a.adjoint();
            let defect = operator_norm(&(&a - &adjoint));
            herm_defect = herm_defect.max(defect);
            if defect > 1e-10 * operator_norm(&a).max(1.0) {
                herm_ok = false;
            }
            let hermitian_part = (&a + &adjoint) * Complex64::new(0.5, 0.0);
            let eig = hermitian_part.symmetric_eigenvalues().iter().fold(f64::INFINITY, |m, e| m.min(*e));
            min_eig = min_eig.min(eig);
        }
    }
    let finite_and_capped = |r: f64| r.is_finite() && r <= plan.cap;
    Ok(ClassReport {
        symbol: symbol.name().to_string(),
        order_tested: order,
        cap: plan.cap,
        s_r_bound_ok: finite_and_capped(s_r_worst),
        s_r_worst_ratio: s_r_worst,
        elliptic_ok: finite_and_capped(elliptic_worst),
        elliptic_worst_ratio: elliptic_worst,
        hermitian_pd_ok: herm_ok && min_eig > 0.0,
        max_hermitian_defect: herm_defect,
        min_eigenvalue: min_eig,
        sample_count: count,
    })
}
