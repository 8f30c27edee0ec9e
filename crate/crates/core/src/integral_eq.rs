//! The Kerzman–Stein integral equation of the second kind and Cauchy-integral
//! evaluation of boundary data at interior points.
//!
//! The kernel `A(z,w) = (1/2πi)(T(w)/(w−z) − conj(T(z))/(conj w − conj z))`
//! is skew-hermitian and, despite its appearance, smooth across the diagonal:
//! expanding both terms along a curve shows the `1/ε` poles *and* the
//! constant terms cancel, so the smooth limit on the diagonal is zero. The
//! Nyström system `(I − A·W)` with trapezoid weights therefore converges
//! spectrally for smooth boundaries.

use crate::error::{Error, Result};
use crate::geometry::{BoundaryFunction, BoundaryGrid};
use crate::Flagged;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;

fn two_pi_i() -> Complex64 {
    Complex64::new(0.0, 2.0 * PI)
}

/// The Kerzman–Stein kernel at a pair of distinct boundary points with their
/// unit tangents.
pub fn kernel_point(z: Complex64, tz: Complex64, w: Complex64, tw: Complex64) -> Complex64 {
    (tw / (w - z) - (tz / (w - z)).conj()) / two_pi_i()
}

/// The Cauchy kernel `C_a` sampled on the grid; the right-hand side of the
/// integral equation for the Szegő kernel based at `a`.
pub fn cauchy_rhs(grid: &BoundaryGrid, a: Complex64) -> Result<BoundaryFunction> {
    if !grid.contains(a)? {
        return Err(Error::OutsideDomain { point: a });
    }
    let values = grid
        .nodes()
        .iter()
        .zip(grid.tangents())
        .map(|(&z, &t)| t.conj() / (a.conj() - z.conj()) / two_pi_i())
        .collect();
    Ok(BoundaryFunction::new(values))
}

/// Dense Nyström discretization of `I − A·W` with its LU factorization,
/// reusable across right-hand sides.
pub struct KerzmanSteinOperator {
    kernel: DMatrix<Complex64>,
    system: DMatrix<Complex64>,
    lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl KerzmanSteinOperator {
    pub fn assemble(grid: &BoundaryGrid) -> Result<KerzmanSteinOperator> {
        let n = grid.len();
        let z = grid.nodes();
        let t = grid.tangents();
        let w = grid.weights();

        let mut kernel = DMatrix::<Complex64>::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                if j != k {
                    kernel[(j, k)] = kernel_point(z[j], t[j], z[k], t[k]);
                }
                // Diagonal entries stay zero: the smooth limit of A along
                // each curve (the paired Taylor expansions cancel exactly).
            }
        }

        let mut system = DMatrix::<Complex64>::identity(n, n);
        for j in 0..n {
            for k in 0..n {
                system[(j, k)] -= kernel[(j, k)] * w[k];
            }
        }

        let lu = system.clone().lu();
        // Fredholm second kind with compact skew-hermitian part: the system
        // must be invertible. Guard against a degenerate factorization.
        let diag_ok = (0..n).all(|i| lu.u()[(i, i)].norm() > 1e-14);
        if !diag_ok {
            return Err(Error::Solve(format!(
                "Kerzman-Stein system is numerically singular (condition estimate {:.3e})",
                condition_from_lu(&lu)
            )));
        }

        Ok(KerzmanSteinOperator { kernel, system, lu })
    }

    /// The raw kernel matrix `[A(z_j, z_k)]` (no quadrature weights).
    pub fn kernel(&self) -> &DMatrix<Complex64> {
        &self.kernel
    }

    /// Crude condition estimate from the LU diagonal.
    pub fn condition_estimate(&self) -> f64 {
        condition_from_lu(&self.lu)
    }

    /// Solve `(I − A·W)x = rhs` and verify the discrete residual.
    pub fn solve(&self, rhs: &BoundaryFunction) -> Result<BoundaryFunction> {
        let n = self.system.nrows();
        assert_eq!(rhs.len(), n, "sample count mismatch");
        let b = DVector::from_iterator(n, rhs.values.iter().copied());
        let x = self
            .lu
            .solve(&b)
            .ok_or_else(|| Error::Solve("LU solve failed".into()))?;
        let residual = (&self.system * &x - &b).camax();
        let scale = b.camax().max(1.0);
        if residual > 1e-12 * scale {
            return Err(Error::Solve(format!(
                "direct solve residual {residual:.3e} exceeds tolerance \
                 (condition estimate {:.3e})",
                self.condition_estimate()
            )));
        }
        Ok(BoundaryFunction::new(x.iter().copied().collect()))
    }

    /// Boundary values of `S(·,a)` by the Kerzman–Stein equation.
    pub fn solve_szego(&self, grid: &BoundaryGrid, a: Complex64) -> Result<BoundaryFunction> {
        let rhs = cauchy_rhs(grid, a)?;
        self.solve(&rhs)
    }
}

fn condition_from_lu(lu: &nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    let u = lu.u();
    let n = u.nrows();
    let mut lo = f64::MAX;
    let mut hi = 0.0f64;
    for i in 0..n {
        let d = u[(i, i)].norm();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Cauchy integral of boundary values of a holomorphic function at an
/// interior point; `order = 1` evaluates the derivative instead.
///
/// The trapezoid quadrature of the Cauchy kernel loses accuracy within about
/// two node spacings of the boundary; such evaluations succeed but come back
/// flagged.
pub fn cauchy_eval(
    bv: &BoundaryFunction,
    grid: &BoundaryGrid,
    z: Complex64,
    order: u8,
) -> Result<Flagged<Complex64>> {
    assert!(
        order <= 1,
        "only values and first derivatives are supported"
    );
    if !grid.contains(z)? {
        return Err(Error::OutsideDomain { point: z });
    }
    Ok(Flagged::new(
        cauchy_eval_unchecked(bv, grid, z, order),
        grid.near_accuracy_floor(z),
    ))
}

/// The raw quadrature behind [`cauchy_eval`]; the caller vouches for `z`
/// being inside the domain.
pub(crate) fn cauchy_eval_unchecked(
    bv: &BoundaryFunction,
    grid: &BoundaryGrid,
    z: Complex64,
    order: u8,
) -> Complex64 {
    assert_eq!(bv.len(), grid.len(), "sample count mismatch");
    let mut sum = Complex64::default();
    match order {
        0 => {
            for ((&v, &dw), &p) in bv.values.iter().zip(grid.dz_weights()).zip(grid.nodes()) {
                sum += v * dw / (p - z);
            }
        }
        _ => {
            for ((&v, &dw), &p) in bv.values.iter().zip(grid.dz_weights()).zip(grid.nodes()) {
                let d = p - z;
                sum += v * dw / (d * d);
            }
        }
    }
    sum / two_pi_i()
}

/// Cauchy integrals of several boundary-sample vectors at the same interior
/// point, sharing the kernel evaluation across functions.
pub(crate) fn cauchy_eval_many(
    fns: &[&BoundaryFunction],
    grid: &BoundaryGrid,
    z: Complex64,
) -> Vec<Complex64> {
    let mut sums = vec![Complex64::default(); fns.len()];
    for (k, (&p, &dw)) in grid.nodes().iter().zip(grid.dz_weights()).enumerate() {
        let kernel = dw / (p - z);
        for (i, f) in fns.iter().enumerate() {
            sums[i] += f.values[k] * kernel;
        }
    }
    let scale = two_pi_i();
    sums.iter_mut().for_each(|s| *s /= scale);
    sums
}
