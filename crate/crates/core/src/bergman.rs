//! The Bergman kernel `K(z,w)` and the companion kernel `Λ(z,w)`, built from
//! Szegő data with a finite-rank correction and no area integrals.
//!
//! On an `n`-connected domain,
//!
//! ```text
//! K(z,w) = 4π S(z,w)² + Σ_ij λ_ij 𝓥_i(z) conj(𝓥_j(w)),
//! ```
//!
//! where `𝓥_i(z) = L(z,a_i) S(z,a)` spans the classical span of the
//! harmonic-measure derivatives. The coefficients `λ_ij` solve a small
//! linear system obtained by pairing the identity against `1/(z−b_k)` for
//! one point `b_k` inside each hole; the pairing turns into boundary
//! integrals of `ln|z−b_k|` against the correction basis (the log-moment
//! matrix `𝔸`), so the whole computation stays one-dimensional.
//!
//! `Λ(z,w)` uses the coefficients in the companion basis
//! `𝓤_i(z) = S(z,a_i) L(z,a)`; the change of basis between the two spanning
//! families is computed once by least squares on the boundary samples. Its
//! sign and pairing are pinned down by the boundary identity
//! `Λ(w,z)T(z) = −K(w,z)·conj(T(z))`, which the tests enforce directly.

use crate::error::{Error, Result};
use crate::geometry::{BoundaryFunction, BoundaryGrid};
use crate::integral_eq::cauchy_eval_unchecked;
use crate::szego::SzegoData;
use crate::Flagged;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

/// One representative point per hole: the area centroid of each inner curve,
/// verified to lie outside the domain.
pub fn hole_points(grid: &BoundaryGrid) -> Result<Vec<Complex64>> {
    let domain = grid.domain();
    let mut out = Vec::new();
    for c in domain.inner_indices() {
        let b = grid.curve_centroid(c);
        match grid.winding_number(b) {
            Ok(0) => out.push(b),
            _ => {
                return Err(Error::Geometry(format!(
                    "centroid {b} of curve {c} does not lie inside the hole; \
                     supply hole points explicitly"
                )))
            }
        }
    }
    Ok(out)
}

/// Log-moment matrix `A_ik = i ∮ ln|z−b_k| conj(𝓥_i(z)) dconj(z)`.
pub fn log_moment_matrix(
    grid: &BoundaryGrid,
    basis: &[BoundaryFunction],
    holes: &[Complex64],
) -> Result<DMatrix<Complex64>> {
    let m = basis.len();
    assert_eq!(holes.len(), m, "one hole point per basis function");
    for &b in holes {
        if grid.boundary_distance(b) < grid.boundary_tolerance() {
            return Err(Error::OnBoundary { point: b });
        }
    }
    let i_unit = Complex64::new(0.0, 1.0);
    let mut a = DMatrix::<Complex64>::zeros(m, m);
    for (k, &b) in holes.iter().enumerate() {
        let log_samples: Vec<f64> = grid.nodes().iter().map(|&z| (z - b).norm().ln()).collect();
        for (i, v) in basis.iter().enumerate() {
            let mut sum = Complex64::default();
            for j in 0..grid.len() {
                sum += log_samples[j] * v.values[j].conj() * grid.dz_weights()[j].conj();
            }
            a[(i, k)] = i_unit * sum;
        }
    }
    Ok(a)
}

/// The assembled Bergman package on top of a Szegő package.
pub struct BergmanData {
    szego: Arc<SzegoData>,
    holes: Vec<Complex64>,
    log_moments: DMatrix<Complex64>,
    /// Coefficients in the `𝓥` basis, hermitian-symmetrized.
    lambda: DMatrix<Complex64>,
    /// Coefficients in the companion `𝓤` basis, for `Λ`.
    lambda_companion: DMatrix<Complex64>,
    /// `‖λ − λ†‖_max` before symmetrization; a discretization-quality metric.
    hermitian_defect: f64,
    /// Boundary samples of `𝓥_i = L(·,a_i) S(·,a)`.
    basis_v: Vec<BoundaryFunction>,
    /// Boundary samples of `𝓤_i = S(·,a_i) L(·,a)`.
    basis_u: Vec<BoundaryFunction>,
    /// `d_m = 𝓥_m(a_m) = (1/2π) ∂S/∂z (a_m, a)`.
    diag: Vec<Complex64>,
}

impl BergmanData {
    pub fn assemble(szego: Arc<SzegoData>) -> Result<BergmanData> {
        let holes = hole_points(szego.grid())?;
        BergmanData::assemble_with_holes(szego, holes)
    }

    pub fn assemble_with_holes(
        szego: Arc<SzegoData>,
        holes: Vec<Complex64>,
    ) -> Result<BergmanData> {
        let grid = szego.grid();
        let m = szego.zeros().len();
        if holes.len() != m {
            return Err(Error::Geometry(format!(
                "{} hole points supplied for a domain with {} holes",
                holes.len(),
                m
            )));
        }

        let basis_v: Vec<BoundaryFunction> = (0..m)
            .map(|i| {
                szego
                    .garabedian_boundary_at_zero(i)
                    .product(szego.szego_boundary())
            })
            .collect();
        let basis_u: Vec<BoundaryFunction> = (0..m)
            .map(|i| {
                szego
                    .szego_boundary_at_zero(i)
                    .product(szego.garabedian_boundary_base())
            })
            .collect();

        let diag: Vec<Complex64> = szego
            .zeros()
            .iter()
            .map(|&am| cauchy_eval_unchecked(szego.szego_boundary(), grid, am, 1) / (2.0 * PI))
            .collect();

        let log_moments = log_moment_matrix(grid, &basis_v, &holes)?;
        let (lambda, hermitian_defect) = if m == 0 {
            (DMatrix::<Complex64>::zeros(0, 0), 0.0)
        } else {
            solve_lambda(&szego, grid, &holes, &log_moments, &diag)?
        };

        let lambda_companion = if m == 0 {
            DMatrix::<Complex64>::zeros(0, 0)
        } else {
            companion_coefficients(grid, &basis_v, &basis_u, &lambda)?
        };

        Ok(BergmanData {
            szego,
            holes,
            log_moments,
            lambda,
            lambda_companion,
            hermitian_defect,
            basis_v,
            basis_u,
            diag,
        })
    }

    /// Rebuild from primary data (deserialized artifacts); the basis sample
    /// products are recomputed.
    pub(crate) fn from_parts(
        szego: Arc<SzegoData>,
        holes: Vec<Complex64>,
        log_moments: DMatrix<Complex64>,
        lambda: DMatrix<Complex64>,
        lambda_companion: DMatrix<Complex64>,
        hermitian_defect: f64,
        diag: Vec<Complex64>,
    ) -> Result<BergmanData> {
        let m = szego.zeros().len();
        if holes.len() != m || lambda.nrows() != m || diag.len() != m {
            return Err(Error::Artifact("inconsistent Bergman data sizes".into()));
        }
        let basis_v: Vec<BoundaryFunction> = (0..m)
            .map(|i| {
                szego
                    .garabedian_boundary_at_zero(i)
                    .product(szego.szego_boundary())
            })
            .collect();
        let basis_u: Vec<BoundaryFunction> = (0..m)
            .map(|i| {
                szego
                    .szego_boundary_at_zero(i)
                    .product(szego.garabedian_boundary_base())
            })
            .collect();
        Ok(BergmanData {
            szego,
            holes,
            log_moments,
            lambda,
            lambda_companion,
            hermitian_defect,
            basis_v,
            basis_u,
            diag,
        })
    }

    pub fn szego(&self) -> &SzegoData {
        &self.szego
    }

    pub fn holes(&self) -> &[Complex64] {
        &self.holes
    }

    pub fn log_moments(&self) -> &DMatrix<Complex64> {
        &self.log_moments
    }

    pub fn lambda(&self) -> &DMatrix<Complex64> {
        &self.lambda
    }

    pub fn lambda_companion(&self) -> &DMatrix<Complex64> {
        &self.lambda_companion
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.hermitian_defect
    }

    pub fn correction_diag(&self) -> &[Complex64] {
        &self.diag
    }

    pub fn basis_v_boundary(&self, i: usize) -> &BoundaryFunction {
        &self.basis_v[i]
    }

    pub fn basis_u_boundary(&self, i: usize) -> &BoundaryFunction {
        &self.basis_u[i]
    }

    /// Values of the `𝓥` family at a point (samples at nodes, Cauchy
    /// integrals inside; the products are pole-free).
    pub fn basis_v_at(&self, p: Complex64) -> Result<Flagged<Vec<Complex64>>> {
        self.family_at(&self.basis_v, p)
    }

    /// Values of the `𝓤` family at a point.
    pub fn basis_u_at(&self, p: Complex64) -> Result<Flagged<Vec<Complex64>>> {
        self.family_at(&self.basis_u, p)
    }

    fn family_at(
        &self,
        family: &[BoundaryFunction],
        p: Complex64,
    ) -> Result<Flagged<Vec<Complex64>>> {
        let grid = self.szego.grid();
        let (node, dist) = grid.nearest_node(p);
        if dist < 1e-9 * grid.diameter() {
            return Ok(Flagged::clean(
                family.iter().map(|f| f.values[node]).collect(),
            ));
        }
        if !grid.contains(p)? {
            return Err(Error::OutsideDomain { point: p });
        }
        let near = dist < 2.0 * grid.local_spacing(node);
        Ok(Flagged::new(
            family
                .iter()
                .map(|f| cauchy_eval_unchecked(f, grid, p, 0))
                .collect(),
            near,
        ))
    }

    /// `K(z,w)`.
    pub fn bergman_eval(&self, z: Complex64, w: Complex64) -> Result<Flagged<Complex64>> {
        let s = self.szego.szego_eval(z, w)?;
        let vz = self.basis_v_at(z)?;
        let vw = self.basis_v_at(w)?;
        let mut k = 4.0 * PI * s.value * s.value;
        let m = self.lambda.nrows();
        for i in 0..m {
            for j in 0..m {
                k += self.lambda[(i, j)] * vz.value[i] * vw.value[j].conj();
            }
        }
        Ok(Flagged::new(
            k,
            s.near_boundary || vz.near_boundary || vw.near_boundary,
        ))
    }

    /// `K(z,w)` evaluated through the companion basis; used as an internal
    /// consistency check of the change of basis.
    pub fn bergman_eval_companion(&self, z: Complex64, w: Complex64) -> Result<Flagged<Complex64>> {
        let s = self.szego.szego_eval(z, w)?;
        let uz = self.basis_u_at(z)?;
        let uw = self.basis_u_at(w)?;
        let mut k = 4.0 * PI * s.value * s.value;
        let m = self.lambda_companion.nrows();
        for i in 0..m {
            for j in 0..m {
                k += self.lambda_companion[(i, j)] * uz.value[i] * uw.value[j].conj();
            }
        }
        Ok(Flagged::new(
            k,
            s.near_boundary || uz.near_boundary || uw.near_boundary,
        ))
    }

    /// The companion kernel `Λ(z,w)`, holomorphic in both variables with a
    /// double pole on the diagonal.
    pub fn lambda_kernel_eval(&self, z: Complex64, w: Complex64) -> Result<Flagged<Complex64>> {
        let l = self.szego.garabedian_eval(z, w)?;
        let uz = self.basis_u_at(z)?;
        let vw = self.basis_v_at(w)?;
        let mut lam = 4.0 * PI * l.value * l.value;
        let m = self.lambda_companion.nrows();
        for i in 0..m {
            for j in 0..m {
                lam += self.lambda_companion[(i, j)] * uz.value[i] * vw.value[j];
            }
        }
        Ok(Flagged::new(
            lam,
            l.near_boundary || uz.near_boundary || vw.near_boundary,
        ))
    }
}

/// Correction coefficients in the `𝓥` basis for a Szegő package and hole
/// points: the hermitian-symmetrized matrix together with its
/// pre-symmetrization defect.
pub fn lambda_coefficients(
    szego: &SzegoData,
    holes: &[Complex64],
) -> Result<(DMatrix<Complex64>, f64)> {
    let grid = szego.grid();
    let m = szego.zeros().len();
    if holes.len() != m {
        return Err(Error::Geometry(format!(
            "{} hole points supplied for a domain with {m} holes",
            holes.len()
        )));
    }
    if m == 0 {
        return Ok((DMatrix::<Complex64>::zeros(0, 0), 0.0));
    }
    let basis_v: Vec<BoundaryFunction> = (0..m)
        .map(|i| {
            szego
                .garabedian_boundary_at_zero(i)
                .product(szego.szego_boundary())
        })
        .collect();
    let diag: Vec<Complex64> = szego
        .zeros()
        .iter()
        .map(|&am| cauchy_eval_unchecked(szego.szego_boundary(), grid, am, 1) / (2.0 * PI))
        .collect();
    let log_moments = log_moment_matrix(grid, &basis_v, holes)?;
    solve_lambda(szego, grid, holes, &log_moments, &diag)
}

/// Solve the log-moment system for the `𝓥`-basis coefficients.
///
/// Pairing `K_w − 4πS_w² = Σ_ij λ_ij conj(𝓥_j(w)) 𝓥_i` with `1/(z−b_k)` in
/// the Bergman inner product and setting `w = a_m` gives, since
/// `𝓥_j(a_m) = δ_jm d_m`,
///
/// ```text
/// Σ_i conj(λ_im) d_m A_ik = g_mk,
/// g_mk = 1/(a_m−b_k) − 4πi ∮ ln|z−b_k| S(a_m,z)² dconj(z),
/// ```
///
/// i.e. rows of `conj(λ)` solve small systems against `𝔸`. Hermiticity of
/// `λ` is not imposed here; its defect is reported and then removed.
fn solve_lambda(
    szego: &SzegoData,
    grid: &BoundaryGrid,
    holes: &[Complex64],
    log_moments: &DMatrix<Complex64>,
    diag: &[Complex64],
) -> Result<(DMatrix<Complex64>, f64)> {
    let m = holes.len();
    if log_moments.clone().try_inverse().is_none() {
        return Err(Error::Solve(
            "log-moment matrix is singular to working precision".into(),
        ));
    }
    let lu = log_moments.transpose().lu();

    let mut lambda_conj = DMatrix::<Complex64>::zeros(m, m);
    for mm in 0..m {
        let am = szego.zeros()[mm];
        let s_m = szego.szego_boundary_at_zero(mm);
        let mut g = DVector::<Complex64>::zeros(m);
        for (k, &b) in holes.iter().enumerate() {
            let mut integral = Complex64::default();
            for j in 0..grid.len() {
                let log = (grid.nodes()[j] - b).norm().ln();
                let s_conj = s_m.values[j].conj();
                integral += log * s_conj * s_conj * grid.dz_weights()[j].conj();
            }
            g[k] = 1.0 / (am - b) - Complex64::new(0.0, 4.0 * PI) * integral;
        }
        let rhs = g / diag[mm];
        // Row mm of conj(λ) solves Σ_i x_i A_ik = rhs_k, i.e. 𝔸ᵀ x = rhs.
        let x = lu
            .solve(&rhs)
            .ok_or_else(|| Error::Solve("log-moment system solve failed".into()))?;
        for i in 0..m {
            lambda_conj[(mm, i)] = x[i];
        }
    }
    // lambda_conj[(m,i)] currently holds conj(λ_im).
    let mut lambda = DMatrix::<Complex64>::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            lambda[(i, j)] = lambda_conj[(j, i)].conj();
        }
    }
    let defect = (&lambda - lambda.adjoint()).camax();
    let sym = (&lambda + lambda.adjoint()) * Complex64::new(0.5, 0.0);
    Ok((sym, defect))
}

/// Least-squares change of basis `𝓤_i = Σ_p R_pi 𝓥_p` on the boundary
/// samples, then `μ = R⁻¹ λ R⁻†` so both expansions represent the same
/// correction kernel.
fn companion_coefficients(
    grid: &BoundaryGrid,
    basis_v: &[BoundaryFunction],
    basis_u: &[BoundaryFunction],
    lambda: &DMatrix<Complex64>,
) -> Result<DMatrix<Complex64>> {
    let m = basis_v.len();
    let ip = |a: &BoundaryFunction, b: &BoundaryFunction| -> Complex64 {
        let mut sum = Complex64::default();
        for j in 0..grid.len() {
            sum += a.values[j] * b.values[j].conj() * grid.weights()[j];
        }
        sum
    };
    let mut gram = DMatrix::<Complex64>::zeros(m, m);
    let mut rhs = DMatrix::<Complex64>::zeros(m, m);
    for p in 0..m {
        for q in 0..m {
            gram[(p, q)] = ip(&basis_v[q], &basis_v[p]);
            rhs[(p, q)] = ip(&basis_u[q], &basis_v[p]);
        }
    }
    let r = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Solve("basis Gram matrix is singular".into()))?;
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Solve("basis change matrix is singular".into()))?;
    Ok(&r_inv * lambda * r_inv.adjoint())
}
