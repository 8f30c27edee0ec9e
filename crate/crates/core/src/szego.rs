//! The assembled Szegő package of a domain: boundary values of `S(·,a)`,
//! `S(·,a_i)` at the `n−1` zeros `a_i` of `S(·,a)`, the Garabedian kernel
//! `L(·,a)`, the Ahlfors map `f_a = S(·,a)/L(·,a)`, and the coefficient data
//! that turns those few functions of one variable into the two-variable
//! kernels `S(z,w)` and `L(z,w)` at arbitrary point pairs.
//!
//! Zero location never searches the plane: the power sums of the zeros are
//! residue integrals of `z^k S'/S` over the boundary, Newton's identities
//! convert them to elementary symmetric functions, and the resulting
//! polynomial is solved and polished by Newton steps on the Cauchy-integral
//! extension of `S(·,a)`.

use crate::error::{Error, Result};
use crate::geometry::{inward_normal, spectral_derivative, BoundaryFunction, BoundaryGrid, Domain};
use crate::integral_eq::{cauchy_eval_unchecked, KerzmanSteinOperator};
use crate::Flagged;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

/// Base-point policy for the assembly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasePoint {
    /// Pick a point a modest distance inside the outer curve and retry along
    /// it until the zeros of `S(·,a)` are distinct and simple.
    Auto,
    Fixed(Complex64),
}

/// Assembly tolerances. All are relative to the indicated scale except
/// `simplicity`, which bounds `|∂S/∂z|` at a zero from below.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Zero residual, relative to `max |S(·,a)|` on the boundary.
    pub zero_residual_rel: f64,
    /// Minimum pairwise zero separation, relative to the domain diameter.
    pub separation_rel: f64,
    /// Lower bound for `|∂S/∂z(a_i, a)|`.
    pub simplicity: f64,
    /// Base-point retries in auto mode.
    pub retries: usize,
}

impl Default for Tolerances {
    fn default() -> Tolerances {
        Tolerances {
            zero_residual_rel: 1e-8,
            separation_rel: 1e-6,
            simplicity: 1e-8,
            retries: 8,
        }
    }
}

/// Power sums `p_k = Σ_i a_i^k` of the zeros and the elementary symmetric
/// functions `e_k` recovered from them through Newton's identities.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSums {
    pub power: Vec<Complex64>,
    pub elementary: Vec<Complex64>,
}

impl PowerSums {
    pub fn from_powers(power: Vec<Complex64>) -> PowerSums {
        let elementary = elementary_from_power_sums(&power);
        PowerSums { power, elementary }
    }
}

/// Newton's identities: `k·e_k = Σ_{i=1..k} (−1)^{i−1} e_{k−i} p_i`.
pub fn elementary_from_power_sums(p: &[Complex64]) -> Vec<Complex64> {
    let mut e = vec![Complex64::default(); p.len()];
    for k in 1..=p.len() {
        let mut acc = Complex64::default();
        for i in 1..=k {
            let prev = if k - i == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                e[k - i - 1]
            };
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * prev * p[i - 1];
        }
        e[k - 1] = acc / k as f64;
    }
    e
}

/// All roots of the monic polynomial `ζ^d − e_1 ζ^{d−1} + e_2 ζ^{d−2} − …`
/// with the given elementary symmetric functions, by Durand–Kerner iteration
/// followed by a few Newton steps on the polynomial itself.
pub fn polynomial_roots(elementary: &[Complex64]) -> Vec<Complex64> {
    let d = elementary.len();
    if d == 0 {
        return Vec::new();
    }
    // Descending coefficients of the monic polynomial.
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for (k, &e) in elementary.iter().enumerate() {
        let sign = if (k + 1) % 2 == 1 { -1.0 } else { 1.0 };
        coeffs.push(sign * e);
    }
    let eval = |z: Complex64| -> Complex64 {
        coeffs
            .iter()
            .fold(Complex64::default(), |acc, &c| acc * z + c)
    };
    let eval_deriv = |z: Complex64| -> Complex64 {
        let mut acc = Complex64::default();
        for (i, &c) in coeffs.iter().enumerate().take(d) {
            acc = acc * z + c * (d - i) as f64;
        }
        acc
    };

    let scale = 1.0 + elementary.iter().map(|e| e.norm()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..d).map(|k| scale * seed.powu(k as u32 + 1)).collect();
    for _ in 0..500 {
        let mut max_step = 0.0f64;
        for k in 0..d {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..d {
                if j != k {
                    denom *= roots[k] - roots[j];
                }
            }
            let step = eval(roots[k]) / denom;
            roots[k] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-14 * scale {
            break;
        }
    }
    // Newton polish against the polynomial.
    for r in roots.iter_mut() {
        for _ in 0..8 {
            let f = eval(*r);
            let fp = eval_deriv(*r);
            if fp.norm() == 0.0 {
                break;
            }
            let step = f / fp;
            *r -= step;
            if step.norm() < 1e-15 * scale {
                break;
            }
        }
    }
    roots
}

/// Boundary values of the Garabedian kernel from those of the Szegő kernel:
/// `L(z,a) = i·conj(S(z,a))·conj(T(z))` on the boundary.
pub fn garabedian_boundary(s: &BoundaryFunction, grid: &BoundaryGrid) -> BoundaryFunction {
    assert_eq!(s.len(), grid.len(), "sample count mismatch");
    let i = Complex64::new(0.0, 1.0);
    BoundaryFunction::new(
        s.values
            .iter()
            .zip(grid.tangents())
            .map(|(&sv, &t)| i * sv.conj() * t.conj())
            .collect(),
    )
}

/// Power sums of the zeros of a boundary-sampled holomorphic function by the
/// residue integrals `p_k = (1/2πi) ∮ z^k (∂S/∂z)/S dz`, followed by
/// Newton's identities.
pub fn power_sums(
    s: &BoundaryFunction,
    grid: &BoundaryGrid,
    connectivity: usize,
) -> Result<PowerSums> {
    let count = connectivity.saturating_sub(1);
    if count == 0 {
        return Ok(PowerSums::from_powers(Vec::new()));
    }
    let min_s = s.values.iter().map(|v| v.norm()).fold(f64::MAX, f64::min);
    if min_s < 1e-10 {
        return Err(Error::ZeroLocation(format!(
            "base point too degenerate: min |S| on the boundary is {min_s:.3e}"
        )));
    }
    let ds_dt = spectral_derivative(s, grid);
    let mut power = Vec::with_capacity(count);
    let n = grid.nodes_per_curve() as f64;
    for k in 1..=count {
        let mut sum = Complex64::default();
        for (j, &z) in grid.nodes().iter().enumerate() {
            sum += z.powu(k as u32) * ds_dt.values[j] / s.values[j] / n;
        }
        power.push(sum / Complex64::new(0.0, TAU));
    }
    Ok(PowerSums::from_powers(power))
}

/// Number of zeros of a non-vanishing boundary-sampled function inside the
/// domain, by the argument principle.
pub fn argument_principle_zero_count(s: &BoundaryFunction, grid: &BoundaryGrid) -> Result<i64> {
    let min_s = s.values.iter().map(|v| v.norm()).fold(f64::MAX, f64::min);
    if min_s < 1e-10 {
        return Err(Error::ZeroLocation(
            "boundary values nearly vanish; argument principle unreliable".into(),
        ));
    }
    let ds_dt = spectral_derivative(s, grid);
    let n = grid.nodes_per_curve() as f64;
    let mut sum = Complex64::default();
    for j in 0..grid.len() {
        sum += ds_dt.values[j] / s.values[j] / n;
    }
    let w = (sum / Complex64::new(0.0, TAU)).re;
    let rounded = w.round();
    if (w - rounded).abs() > 0.1 {
        return Err(Error::ZeroLocation(format!(
            "argument-principle count {w} is not close to an integer"
        )));
    }
    Ok(rounded as i64)
}

/// Total winding number of unimodular boundary samples over all curves, by
/// phase unwrapping between consecutive nodes.
pub fn boundary_winding(bv: &BoundaryFunction, grid: &BoundaryGrid) -> i64 {
    let mut total = 0.0f64;
    for c in 0..grid.curve_count() {
        let range = grid.curve_range(c);
        let slice = &bv.values[range];
        let mut acc = 0.0;
        for k in 0..slice.len() {
            let next = slice[(k + 1) % slice.len()];
            acc += (next / slice[k]).arg();
        }
        total += acc / TAU;
    }
    total.round() as i64
}

/// Basic-function values at one point: the factors every kernel formula is
/// built from.
#[derive(Debug, Clone)]
pub struct BasisValues {
    pub s_base: Complex64,
    pub s_zeros: Vec<Complex64>,
    pub l_base: Complex64,
    pub l_zeros: Vec<Complex64>,
    pub ahlfors: Complex64,
    /// `1/L(z,a)`, kept in a form that stays finite at the pole `z = a`
    /// (where it vanishes).
    pub l_base_recip: Complex64,
}

/// The assembled Szegő package.
pub struct SzegoData {
    grid: BoundaryGrid,
    operator: KerzmanSteinOperator,
    base: Complex64,
    zeros: Vec<Complex64>,
    s_base: BoundaryFunction,
    s_zeros: Vec<BoundaryFunction>,
    l_base: BoundaryFunction,
    l_zeros: Vec<BoundaryFunction>,
    ahlfors_bv: BoundaryFunction,
    c0: f64,
    coeff: DMatrix<Complex64>,
    s_at_base: f64,
}

struct AssembledParts {
    base: Complex64,
    zeros: Vec<Complex64>,
    s_base: BoundaryFunction,
    s_zeros: Vec<BoundaryFunction>,
    l_base: BoundaryFunction,
    l_zeros: Vec<BoundaryFunction>,
    ahlfors_bv: BoundaryFunction,
    c0: f64,
    coeff: DMatrix<Complex64>,
    s_at_base: f64,
}

impl SzegoData {
    pub fn assemble(domain: &Domain, n: usize, base: BasePoint) -> Result<SzegoData> {
        SzegoData::assemble_with(domain, n, base, &Tolerances::default())
    }

    pub fn assemble_with(
        domain: &Domain,
        n: usize,
        base: BasePoint,
        tol: &Tolerances,
    ) -> Result<SzegoData> {
        let grid = BoundaryGrid::build(domain, n)?;
        let operator = KerzmanSteinOperator::assemble(&grid)?;
        let candidates = match base {
            BasePoint::Fixed(a) => vec![a],
            BasePoint::Auto => auto_candidates(&grid, tol.retries),
        };
        let tries = candidates.len();
        let mut last_err = Error::BasePoint {
            tries,
            reason: "no admissible base-point candidates".into(),
        };
        for a in candidates {
            match assemble_at(&grid, &operator, a, tol) {
                Ok(parts) => {
                    return Ok(SzegoData {
                        grid,
                        operator,
                        base: parts.base,
                        zeros: parts.zeros,
                        s_base: parts.s_base,
                        s_zeros: parts.s_zeros,
                        l_base: parts.l_base,
                        l_zeros: parts.l_zeros,
                        ahlfors_bv: parts.ahlfors_bv,
                        c0: parts.c0,
                        coeff: parts.coeff,
                        s_at_base: parts.s_at_base,
                    })
                }
                Err(e) => last_err = e,
            }
        }
        match base {
            BasePoint::Fixed(_) => Err(last_err),
            BasePoint::Auto => Err(Error::BasePoint {
                tries,
                reason: last_err.to_string(),
            }),
        }
    }

    /// Rebuild a package from its primary data (deserialized artifacts);
    /// derived boundary data and the operator factorization are recomputed
    /// by the exact construction used at assembly.
    pub(crate) fn from_parts(
        domain: &Domain,
        n: usize,
        base: Complex64,
        zeros: Vec<Complex64>,
        s_base: BoundaryFunction,
        s_zeros: Vec<BoundaryFunction>,
        c0: f64,
        coeff: DMatrix<Complex64>,
        s_at_base: f64,
    ) -> Result<SzegoData> {
        let grid = BoundaryGrid::build(domain, n)?;
        let operator = KerzmanSteinOperator::assemble(&grid)?;
        if s_base.len() != grid.len()
            || s_zeros.iter().any(|s| s.len() != grid.len())
            || s_zeros.len() != zeros.len()
            || coeff.nrows() != zeros.len()
            || coeff.ncols() != zeros.len()
        {
            return Err(Error::Artifact("inconsistent boundary data sizes".into()));
        }
        let l_base = garabedian_boundary(&s_base, &grid);
        let l_zeros: Vec<BoundaryFunction> = s_zeros
            .iter()
            .map(|s| garabedian_boundary(s, &grid))
            .collect();
        let ahlfors_bv = BoundaryFunction::new(
            s_base
                .values
                .iter()
                .zip(&l_base.values)
                .map(|(s, l)| s / l)
                .collect(),
        );
        Ok(SzegoData {
            grid,
            operator,
            base,
            zeros,
            s_base,
            s_zeros,
            l_base,
            l_zeros,
            ahlfors_bv,
            c0,
            coeff,
            s_at_base,
        })
    }

    pub fn grid(&self) -> &BoundaryGrid {
        &self.grid
    }

    pub fn domain(&self) -> &Domain {
        self.grid.domain()
    }

    pub fn base(&self) -> Complex64 {
        self.base
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn connectivity(&self) -> usize {
        self.domain().connectivity()
    }

    /// `S(a,a)`, a positive real number.
    pub fn s_at_base(&self) -> f64 {
        self.s_at_base
    }

    /// `c_0 = 1/S(a,a)`.
    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Inverse of the zero-point matrix `[S(a_j, a_k)]`.
    pub fn coefficients(&self) -> &DMatrix<Complex64> {
        &self.coeff
    }

    pub fn szego_boundary(&self) -> &BoundaryFunction {
        &self.s_base
    }

    pub fn szego_boundary_at_zero(&self, i: usize) -> &BoundaryFunction {
        &self.s_zeros[i]
    }

    pub fn garabedian_boundary_base(&self) -> &BoundaryFunction {
        &self.l_base
    }

    pub fn garabedian_boundary_at_zero(&self, i: usize) -> &BoundaryFunction {
        &self.l_zeros[i]
    }

    pub fn ahlfors_boundary(&self) -> &BoundaryFunction {
        &self.ahlfors_bv
    }

    /// Fresh Kerzman–Stein solve for `S(·,w)` reusing the assembled
    /// factorization; the independent cross-check for the kernel formulas.
    pub fn boundary_szego_at(&self, w: Complex64) -> Result<BoundaryFunction> {
        self.operator.solve_szego(&self.grid, w)
    }

    /// Condition estimate of the Nyström system.
    pub fn condition_estimate(&self) -> f64 {
        self.operator.condition_estimate()
    }

    /// Basic-function values at a point: interior points go through the
    /// Cauchy integral of the stored boundary data (with the pole of the
    /// Garabedian kernels restored); grid nodes use the samples directly.
    pub fn basis_at(&self, p: Complex64) -> Result<Flagged<BasisValues>> {
        let (node, dist) = self.grid.nearest_node(p);
        if dist < 1e-9 * self.grid.diameter() {
            return Ok(Flagged::clean(self.basis_at_node(node)));
        }
        if !self.grid.contains(p)? {
            return Err(Error::OutsideDomain { point: p });
        }
        let near = dist < 2.0 * self.grid.local_spacing(node);
        let s_base = cauchy_eval_unchecked(&self.s_base, &self.grid, p, 0);
        let s_zeros: Vec<Complex64> = self
            .s_zeros
            .iter()
            .map(|s| cauchy_eval_unchecked(s, &self.grid, p, 0))
            .collect();
        // The Cauchy integral of L-boundary data drops the simple pole; put
        // it back by hand. The reciprocal is formed so it degrades to zero
        // rather than NaN at the pole itself.
        let dz = p - self.base;
        let l_regular = cauchy_eval_unchecked(&self.l_base, &self.grid, p, 0);
        let l_base = l_regular + 1.0 / (2.0 * PI * dz);
        let l_base_recip = 2.0 * PI * dz / (1.0 + 2.0 * PI * dz * l_regular);
        let l_zeros: Vec<Complex64> = self
            .l_zeros
            .iter()
            .zip(&self.zeros)
            .map(|(l, &ai)| {
                cauchy_eval_unchecked(l, &self.grid, p, 0) + 1.0 / (2.0 * PI * (p - ai))
            })
            .collect();
        let ahlfors = cauchy_eval_unchecked(&self.ahlfors_bv, &self.grid, p, 0);
        Ok(Flagged::new(
            BasisValues {
                s_base,
                s_zeros,
                l_base,
                l_zeros,
                ahlfors,
                l_base_recip,
            },
            near,
        ))
    }

    pub fn basis_at_node(&self, node: usize) -> BasisValues {
        BasisValues {
            s_base: self.s_base.values[node],
            s_zeros: self.s_zeros.iter().map(|s| s.values[node]).collect(),
            l_base: self.l_base.values[node],
            l_zeros: self.l_zeros.iter().map(|l| l.values[node]).collect(),
            ahlfors: self.ahlfors_bv.values[node],
            l_base_recip: 1.0 / self.l_base.values[node],
        }
    }

    /// `S(z, ζ_k)` for every grid node `ζ_k`, given the basis values at `z`.
    /// The workhorse behind boundary-integral operators applied at `z`.
    pub(crate) fn szego_row_from_basis(&self, bz: &BasisValues) -> Vec<Complex64> {
        let m = self.zeros.len();
        let n = self.grid.len();
        let mut row = Vec::with_capacity(n);
        for k in 0..n {
            let denom = 1.0 - bz.ahlfors * self.ahlfors_bv.values[k].conj();
            let mut num = self.c0 * bz.s_base * self.s_base.values[k].conj();
            for i in 0..m {
                for j in 0..m {
                    num += self.coeff[(i, j)] * bz.s_zeros[i] * self.s_zeros[j].values[k].conj();
                }
            }
            row.push(num / denom);
        }
        row
    }

    /// `S(z,w)` from the assembled package.
    pub fn szego_eval(&self, z: Complex64, w: Complex64) -> Result<Flagged<Complex64>> {
        let bz = self.basis_at(z)?;
        let bw = self.basis_at(w)?;
        let near = bz.near_boundary || bw.near_boundary;
        let v = self.szego_from_basis(&bz.value, &bw.value)?;
        Ok(Flagged::new(v, near))
    }

    pub(crate) fn szego_from_basis(&self, bz: &BasisValues, bw: &BasisValues) -> Result<Complex64> {
        let denom = 1.0 - bz.ahlfors * bw.ahlfors.conj();
        if denom.norm() < 1e-13 {
            return Err(Error::NearSingular(
                "1 − f(z)·conj(f(w)) vanishes (boundary diagonal)".into(),
            ));
        }
        let mut num = self.c0 * bz.s_base * bw.s_base.conj();
        let m = self.zeros.len();
        for i in 0..m {
            for j in 0..m {
                num += self.coeff[(i, j)] * bz.s_zeros[i] * bw.s_zeros[j].conj();
            }
        }
        Ok(num / denom)
    }

    /// `L(z,w)` from the assembled package; `z ≠ w`.
    pub fn garabedian_eval(&self, z: Complex64, w: Complex64) -> Result<Flagged<Complex64>> {
        if (z - w).norm() < 1e-10 {
            return Err(Error::NearSingular(
                "Garabedian kernel has a pole on the diagonal".into(),
            ));
        }
        let bz = self.basis_at(z)?;
        let bw = self.basis_at(w)?;
        let near = bz.near_boundary || bw.near_boundary;
        let v = self.garabedian_from_basis(&bz.value, &bw.value)?;
        Ok(Flagged::new(v, near))
    }

    pub(crate) fn garabedian_from_basis(
        &self,
        bz: &BasisValues,
        bw: &BasisValues,
    ) -> Result<Complex64> {
        let df = bz.ahlfors - bw.ahlfors;
        if df.norm() < 1e-13 {
            return Err(Error::NearSingular(
                "f(z) − f(w) vanishes; Garabedian evaluation is ill conditioned".into(),
            ));
        }
        // The base term is written with f(w)·L(w,a) contracted to S(w,a), so
        // the removable 0·∞ at w = a never materializes.
        let mut sum = self.c0 * bz.s_base * bw.s_base;
        let m = self.zeros.len();
        for i in 0..m {
            for j in 0..m {
                sum += bw.ahlfors * self.coeff[(i, j)] * bz.s_zeros[i] * bw.l_zeros[j];
            }
        }
        Ok(sum / df)
    }

    /// The Ahlfors map at a point.
    pub fn ahlfors_eval(&self, z: Complex64) -> Result<Flagged<Complex64>> {
        Ok(self.basis_at(z)?.map(|b| b.ahlfors))
    }

    /// `f_a'` at a point, by the derivative Cauchy integral.
    pub fn ahlfors_derivative(&self, z: Complex64) -> Result<Flagged<Complex64>> {
        if !self.grid.contains(z)? {
            return Err(Error::OutsideDomain { point: z });
        }
        Ok(Flagged::new(
            cauchy_eval_unchecked(&self.ahlfors_bv, &self.grid, z, 1),
            self.grid.near_accuracy_floor(z),
        ))
    }
}

fn assemble_at(
    grid: &BoundaryGrid,
    operator: &KerzmanSteinOperator,
    a: Complex64,
    tol: &Tolerances,
) -> Result<AssembledParts> {
    let connectivity = grid.domain().connectivity();
    let s_base = operator.solve_szego(grid, a)?;
    let s_max = s_base.values.iter().map(|v| v.norm()).fold(0.0, f64::max);

    let zeros = if connectivity == 1 {
        Vec::new()
    } else {
        let counted = argument_principle_zero_count(&s_base, grid)?;
        if counted != (connectivity - 1) as i64 {
            return Err(Error::ZeroLocation(format!(
                "argument principle counts {counted} zeros, expected {}",
                connectivity - 1
            )));
        }
        let sums = power_sums(&s_base, grid, connectivity)?;
        let rough = polynomial_roots(&sums.elementary);
        let mut polished = Vec::with_capacity(rough.len());
        for r in rough {
            polished.push(polish_zero(
                &s_base,
                grid,
                r,
                tol.zero_residual_rel * s_max,
            )?);
        }
        polished
    };

    // Simplicity and separation checks.
    let sep_tol = tol.separation_rel * grid.diameter();
    for i in 0..zeros.len() {
        for j in (i + 1)..zeros.len() {
            if (zeros[i] - zeros[j]).norm() < sep_tol {
                return Err(Error::ZeroLocation(format!(
                    "zeros {} and {} closer than {sep_tol:.3e}",
                    zeros[i], zeros[j]
                )));
            }
        }
    }
    for &z in &zeros {
        let slope = cauchy_eval_unchecked(&s_base, grid, z, 1);
        if slope.norm() < tol.simplicity {
            return Err(Error::ZeroLocation(format!(
                "zero {z} fails the simplicity bound: |∂S/∂z| = {:.3e}",
                slope.norm()
            )));
        }
        let residual = cauchy_eval_unchecked(&s_base, grid, z, 0).norm();
        if residual > tol.zero_residual_rel * s_max {
            return Err(Error::ZeroLocation(format!(
                "zero {z} has residual {residual:.3e}"
            )));
        }
    }

    // Remaining boundary data: one factorization, n right-hand sides.
    let mut s_zeros = Vec::with_capacity(zeros.len());
    for &z in &zeros {
        s_zeros.push(operator.solve_szego(grid, z)?);
    }
    let l_base = garabedian_boundary(&s_base, grid);
    let l_zeros: Vec<BoundaryFunction> = s_zeros
        .iter()
        .map(|s| garabedian_boundary(s, grid))
        .collect();
    let ahlfors_bv = BoundaryFunction::new(
        s_base
            .values
            .iter()
            .zip(&l_base.values)
            .map(|(s, l)| s / l)
            .collect(),
    );
    let modulus_defect = ahlfors_bv
        .values
        .iter()
        .map(|v| (v.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    if modulus_defect > 1e-6 {
        return Err(Error::Solve(format!(
            "Ahlfors boundary modulus defect {modulus_defect:.3e}"
        )));
    }

    let s_at_base_c = cauchy_eval_unchecked(&s_base, grid, a, 0);
    if s_at_base_c.re <= 0.0 || s_at_base_c.im.abs() > 1e-8 * s_at_base_c.re.abs() {
        return Err(Error::Solve(format!(
            "S(a,a) = {s_at_base_c} is not positive real"
        )));
    }
    let s_at_base = s_at_base_c.re;
    let c0 = 1.0 / s_at_base;

    // [S(a_j, a_k)] and its inverse.
    let m = zeros.len();
    let mut gram = DMatrix::<Complex64>::zeros(m, m);
    for j in 0..m {
        for k in 0..m {
            gram[(j, k)] = cauchy_eval_unchecked(&s_zeros[k], grid, zeros[j], 0);
        }
    }
    let coeff = if m == 0 {
        DMatrix::<Complex64>::zeros(0, 0)
    } else {
        let inv = gram.clone().try_inverse().ok_or_else(|| {
            Error::Solve("zero-point Szegő matrix [S(a_j,a_k)] is singular".into())
        })?;
        let defect = (&inv * &gram - DMatrix::<Complex64>::identity(m, m)).camax();
        if defect > 1e-8 {
            return Err(Error::Solve(format!(
                "coefficient matrix inverse residual {defect:.3e}"
            )));
        }
        inv
    };

    Ok(AssembledParts {
        base: a,
        zeros,
        s_base,
        s_zeros,
        l_base,
        l_zeros,
        ahlfors_bv,
        c0,
        coeff,
        s_at_base,
    })
}

fn polish_zero(
    s: &BoundaryFunction,
    grid: &BoundaryGrid,
    start: Complex64,
    residual_tol: f64,
) -> Result<Complex64> {
    // Points inside the boundary-resolution band are allowed to iterate (the
    // raw polynomial root can land there); only a definitive exterior verdict
    // aborts.
    let definitely_outside = |p: Complex64| matches!(grid.winding_number(p), Ok(w) if w != 1);
    let mut z = start;
    if definitely_outside(z) {
        return Err(Error::ZeroLocation(format!(
            "polynomial root {start} lies outside the domain"
        )));
    }
    for _ in 0..40 {
        let f = cauchy_eval_unchecked(s, grid, z, 0);
        if f.norm() < residual_tol {
            break;
        }
        let fp = cauchy_eval_unchecked(s, grid, z, 1);
        if fp.norm() == 0.0 {
            break;
        }
        let mut step = f / fp;
        let cap = 0.25 * grid.diameter();
        if step.norm() > cap {
            step *= cap / step.norm();
        }
        let next = z - step;
        if definitely_outside(next) {
            return Err(Error::ZeroLocation(format!(
                "Newton polish left the domain near {next}"
            )));
        }
        z = next;
    }
    let residual = cauchy_eval_unchecked(s, grid, z, 0).norm();
    if residual > residual_tol {
        return Err(Error::ZeroLocation(format!(
            "Newton polish stalled at {z} with residual {residual:.3e}"
        )));
    }
    match grid.winding_number(z) {
        Ok(1) => Ok(z),
        _ => Err(Error::ZeroLocation(format!(
            "polished zero {z} is not cleanly inside the domain"
        ))),
    }
}

/// Base-point candidates along an inward offset of the outer curve: 15% of
/// the local feature size, but never below 2.5 node spacings.
fn auto_candidates(grid: &BoundaryGrid, count: usize) -> Vec<Complex64> {
    let outer = grid.domain().outer_index();
    let range = grid.curve_range(outer);
    let n = range.len();
    let mut out = Vec::new();
    for r in 0..count.max(1) {
        let k = range.start + r * n / count.max(1);
        let z0 = grid.nodes()[k];
        let mut feature = 0.5 * grid.diameter();
        for c in 0..grid.curve_count() {
            if c == outer {
                continue;
            }
            for j in grid.curve_range(c) {
                feature = feature.min((grid.nodes()[j] - z0).norm());
            }
        }
        let depth = (0.15 * feature).max(2.5 * grid.max_spacing());
        let candidate = z0 + depth * inward_normal(grid, k);
        if grid.contains(candidate).unwrap_or(false) {
            out.push(candidate);
        }
    }
    out
}
