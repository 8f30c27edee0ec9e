//! Harmonic measures, a Dirichlet solver driven by the Szegő projection, and
//! the Poisson kernel — all from boundary data of the assembled package.
//!
//! For boundary data `φ` the harmonic extension is
//!
//! ```text
//! Eφ = h + conj(H) + Σ_j c_j ω_j,
//! h = P(S_a ψ)/S_a,   H = P(L_a conj(ψ))/L_a,   ψ = φ − Σ_j c_j χ_j,
//! ```
//!
//! where `P` is the Szegő projection, `χ_j` the indicator of the j-th inner
//! curve, `ω_j` the harmonic measures, and the side conditions
//! `Σ_j A_jk c_j = P(S_a φ)(a_k)` run against the period matrix
//! `A_jk = −i ∮_{γ_j} L(z,a_k) S(z,a) dz`.
//!
//! The harmonic measures themselves are computed two independent ways, both
//! using line integrals only:
//!
//! * primary — self-apply the extension identity to boundary data with a
//!   known harmonic extension and nontrivial measure components:
//!   `φ_k = ln|ζ−b_k|` with `b_k` a point inside the k-th hole. (The naive
//!   choice `φ = χ_j` is vacuous: its side coefficients are exactly
//!   `c_i = δ_ij`, so `ψ ≡ 0` and the coupling matrix degenerates to zero.)
//!   This yields `Σ_j c_j^{(k)} ω_j(z) = ln|z−b_k| − h_k(z) − conj(H_k(z))`,
//!   a small well-conditioned system solvable at every point from boundary
//!   data;
//! * fallback — expand the density derivatives `F_j' = 2 ∂ω_j/∂z` in the
//!   `L(·,a_i)S(·,a)` basis (matching log-moment constants against the hole
//!   points) and integrate `ω_j(z) = Re ∫ F_j' dζ` along a polyline from the
//!   outer boundary, where `ω_j = 0`. The real part is path independent
//!   because the periods of `F_j'` are purely imaginary. The first sliver off
//!   the anchor node is integrated by a boundary Taylor expansion, the rest
//!   by Gauss–Legendre panels against an upsampled grid.

use crate::bergman::hole_points;
use crate::error::{Error, Result};
use crate::geometry::{
    fourier_upsample, inward_normal, spectral_derivative, BoundaryFunction, BoundaryGrid,
};
use crate::integral_eq::cauchy_eval_many;
use crate::szego::SzegoData;
use crate::{Flagged, RealValue};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::TAU;
use std::sync::Arc;

/// Period matrix `A_jk = −i ∮_{γ_j} L(z,a_k) S(z,a) dz` over the inner
/// curves, together with its inverse.
pub fn period_matrix(szego: &SzegoData) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let grid = szego.grid();
    let inner = grid.domain().inner_indices();
    let m = szego.zeros().len();
    assert_eq!(inner.len(), m);
    let mut a = DMatrix::<Complex64>::zeros(m, m);
    for (j, &curve) in inner.iter().enumerate() {
        for k in 0..m {
            let mut sum = Complex64::default();
            for node in grid.curve_range(curve) {
                sum += szego.garabedian_boundary_at_zero(k).values[node]
                    * szego.szego_boundary().values[node]
                    * grid.dz_weights()[node];
            }
            a[(j, k)] = -Complex64::new(0.0, 1.0) * sum;
        }
    }
    let b = if m == 0 {
        DMatrix::<Complex64>::zeros(0, 0)
    } else {
        a.clone()
            .try_inverse()
            .ok_or_else(|| Error::Solve("period matrix is singular".into()))?
    };
    Ok((a, b))
}

/// The Szegő projection of boundary samples, evaluated at an interior point:
/// `(Pu)(z) = ∮ S(z,w) u(w) ds`.
pub fn szego_projection_eval(
    szego: &SzegoData,
    u: &BoundaryFunction,
    z: Complex64,
) -> Result<Flagged<Complex64>> {
    let grid = szego.grid();
    assert_eq!(u.len(), grid.len(), "sample count mismatch");
    let bz = szego.basis_at(z)?;
    let row = szego.szego_row_from_basis(&bz.value);
    let mut sum = Complex64::default();
    for k in 0..grid.len() {
        sum += row[k] * u.values[k] * grid.weights()[k];
    }
    Ok(Flagged::new(sum, bz.near_boundary))
}

/// Assembled data for harmonic-measure and Poisson-kernel evaluation.
pub struct PoissonData {
    szego: Arc<SzegoData>,
    inner_curves: Vec<usize>,
    periods: DMatrix<Complex64>,
    periods_inv: DMatrix<Complex64>,
    /// Hole points `b_k` used by both harmonic-measure methods.
    holes: Vec<Complex64>,
    /// `C[(k,j)] = c_j` of the extension identity applied to
    /// `φ_k = ln|ζ−b_k|`.
    log_coeffs: DMatrix<Complex64>,
    omega_lu: Option<nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>>,
    /// Boundary samples of `S_a·ψ_k` and `L_a·conj(ψ_k)` for the log data.
    psi_sa: Vec<BoundaryFunction>,
    psi_la: Vec<BoundaryFunction>,
    fallback: Option<OmegaFallback>,
}

impl PoissonData {
    pub fn assemble(szego: Arc<SzegoData>) -> Result<PoissonData> {
        let grid = szego.grid();
        let m = szego.zeros().len();
        let (periods, periods_inv) = period_matrix(&szego)?;

        let holes = if m == 0 {
            Vec::new()
        } else {
            hole_points(grid)?
        };

        let mut log_coeffs = DMatrix::<Complex64>::zeros(m, m);
        if m > 0 {
            let at_lu = periods.transpose().lu();
            for (k, &b) in holes.iter().enumerate() {
                let phi =
                    BoundaryFunction::from_fn(grid, |z| Complex64::new((z - b).norm().ln(), 0.0));
                let rhs = projection_at_zeros(&szego, &phi);
                let c = at_lu
                    .solve(&rhs)
                    .ok_or_else(|| Error::Solve("period system solve failed".into()))?;
                for j in 0..m {
                    log_coeffs[(k, j)] = c[j];
                }
            }
        }
        PoissonData::from_parts(szego, holes, log_coeffs, periods, periods_inv)
    }

    /// Rebuild from primary data (deserialized artifacts); the corrected
    /// boundary densities, measure system and fallback machinery are
    /// recomputed from the stored coefficients.
    pub(crate) fn from_parts(
        szego: Arc<SzegoData>,
        holes: Vec<Complex64>,
        log_coeffs: DMatrix<Complex64>,
        periods: DMatrix<Complex64>,
        periods_inv: DMatrix<Complex64>,
    ) -> Result<PoissonData> {
        let grid = szego.grid();
        let inner_curves = grid.domain().inner_indices();
        let m = szego.zeros().len();
        if holes.len() != m || log_coeffs.nrows() != m || periods.nrows() != m {
            return Err(Error::Artifact("inconsistent harmonic data sizes".into()));
        }

        let mut psi_sa = Vec::with_capacity(m);
        let mut psi_la = Vec::with_capacity(m);
        for (k, &b) in holes.iter().enumerate() {
            let mut psi =
                BoundaryFunction::from_fn(grid, |z| Complex64::new((z - b).norm().ln(), 0.0));
            for j in 0..m {
                for node in grid.curve_range(inner_curves[j]) {
                    psi.values[node] -= log_coeffs[(k, j)];
                }
            }
            let sa = BoundaryFunction::new(
                psi.values
                    .iter()
                    .zip(&szego.szego_boundary().values)
                    .map(|(p, s)| p * s)
                    .collect(),
            );
            let la = BoundaryFunction::new(
                psi.values
                    .iter()
                    .zip(&szego.garabedian_boundary_base().values)
                    .map(|(p, l)| p.conj() * l)
                    .collect(),
            );
            psi_sa.push(sa);
            psi_la.push(la);
        }

        let omega_lu = if m == 0 {
            None
        } else {
            // The coupling matrix must be invertible with a sane condition
            // number; otherwise the antiderivative method takes over.
            match log_coeffs.clone().try_inverse() {
                Some(inv) => {
                    let cond = inv.camax() * log_coeffs.camax();
                    if cond.is_finite() && cond < 1e12 {
                        Some(log_coeffs.clone().lu())
                    } else {
                        None
                    }
                }
                None => None,
            }
        };

        let fallback = if m == 0 {
            None
        } else {
            Some(OmegaFallback::build(&szego)?)
        };

        Ok(PoissonData {
            szego,
            inner_curves,
            periods,
            periods_inv,
            holes,
            log_coeffs,
            omega_lu,
            psi_sa,
            psi_la,
            fallback,
        })
    }

    pub fn szego_data(&self) -> &SzegoData {
        &self.szego
    }

    pub fn periods(&self) -> &DMatrix<Complex64> {
        &self.periods
    }

    pub fn periods_inv(&self) -> &DMatrix<Complex64> {
        &self.periods_inv
    }

    /// Largest imaginary part of a period-matrix entry relative to the
    /// matrix scale. The periods pair real differentials, so this is a
    /// discretization-quality warning indicator, not a hard invariant.
    pub fn periods_imag_defect(&self) -> f64 {
        let scale = self.periods.camax().max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for i in 0..self.periods.nrows() {
            for j in 0..self.periods.ncols() {
                worst = worst.max(self.periods[(i, j)].im.abs());
            }
        }
        worst / scale
    }

    /// Harmonic-measure components of the log data `ln|ζ−b_k|`; the
    /// coupling matrix of the primary measure method.
    pub fn log_coefficients(&self) -> &DMatrix<Complex64> {
        &self.log_coeffs
    }

    pub fn holes(&self) -> &[Complex64] {
        &self.holes
    }

    /// Number of harmonic measures (`connectivity − 1`).
    pub fn measure_count(&self) -> usize {
        self.inner_curves.len()
    }

    /// All harmonic measures at `z` by the primary method, as complex values
    /// whose imaginary parts measure discretization error.
    pub fn omega_complex(&self, z: Complex64) -> Result<Flagged<Vec<Complex64>>> {
        if self.measure_count() == 0 {
            return Ok(Flagged::clean(Vec::new()));
        }
        match &self.omega_lu {
            Some(lu) => {
                let u = self.omega_rhs(z)?;
                let sol = lu
                    .solve(&DVector::from_iterator(
                        u.value.len(),
                        u.value.iter().copied(),
                    ))
                    .ok_or_else(|| Error::Solve("harmonic measure system solve failed".into()))?;
                Ok(Flagged::new(sol.iter().copied().collect(), u.near_boundary))
            }
            None => {
                let fb = self
                    .fallback
                    .as_ref()
                    .ok_or_else(|| Error::Solve("no harmonic-measure method available".into()))?;
                fb.eval_all(z).map(Flagged::clean)
            }
        }
    }

    /// All harmonic measures at `z` (real parts; imaginary residuals kept as
    /// diagnostics).
    pub fn omega_all(&self, z: Complex64) -> Result<Vec<RealValue>> {
        let v = self.omega_complex(z)?;
        Ok(v.value
            .iter()
            .map(|&c| RealValue::from_complex(c, v.near_boundary))
            .collect())
    }

    /// Harmonic measures by the antiderivative fallback; exposed so the two
    /// methods can be compared directly.
    pub fn omega_fallback_all(&self, z: Complex64) -> Result<Vec<RealValue>> {
        let fb = self
            .fallback
            .as_ref()
            .ok_or_else(|| Error::Solve("fallback data unavailable (simply connected)".into()))?;
        let vals = fb.eval_all(z)?;
        Ok(vals
            .iter()
            .map(|&c| RealValue::from_complex(c, false))
            .collect())
    }

    /// Right-hand side `r_k(z) = ln|z−b_k| − h_k(z) − conj(H_k(z))` of the
    /// measure system at `z`.
    fn omega_rhs(&self, z: Complex64) -> Result<Flagged<Vec<Complex64>>> {
        let grid = self.szego.grid();
        let bz = self.szego.basis_at(z)?;
        let row = self.szego.szego_row_from_basis(&bz.value);
        let m = self.measure_count();
        let mut u = Vec::with_capacity(m);
        for k_idx in 0..m {
            let mut p_sa = Complex64::default();
            let mut p_la = Complex64::default();
            for k in 0..grid.len() {
                let w = grid.weights()[k];
                p_sa += row[k] * self.psi_sa[k_idx].values[k] * w;
                p_la += row[k] * self.psi_la[k_idx].values[k] * w;
            }
            let h = p_sa / bz.value.s_base;
            let big_h = p_la * bz.value.l_base_recip;
            u.push((z - self.holes[k_idx]).norm().ln() - h - big_h.conj());
        }
        Ok(Flagged::new(u, bz.near_boundary))
    }

    /// Harmonic extension of real boundary samples `φ`, evaluated at `z`.
    pub fn dirichlet_solve(&self, phi: &BoundaryFunction, z: Complex64) -> Result<RealValue> {
        let grid = self.szego.grid();
        assert_eq!(phi.len(), grid.len(), "sample count mismatch");
        let m = self.measure_count();

        let c = if m == 0 {
            DVector::<Complex64>::zeros(0)
        } else {
            let rhs = projection_at_zeros(&self.szego, phi);
            self.periods
                .transpose()
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Solve("period system solve failed".into()))?
        };

        let mut psi = phi.clone();
        for j in 0..m {
            for node in grid.curve_range(self.inner_curves[j]) {
                psi.values[node] -= c[j];
            }
        }

        let bz = self.szego.basis_at(z)?;
        let row = self.szego.szego_row_from_basis(&bz.value);
        let mut p_sa = Complex64::default();
        let mut p_la = Complex64::default();
        for k in 0..grid.len() {
            let w = grid.weights()[k];
            p_sa += row[k] * self.szego.szego_boundary().values[k] * psi.values[k] * w;
            p_la +=
                row[k] * self.szego.garabedian_boundary_base().values[k] * psi.values[k].conj() * w;
        }
        let h = p_sa / bz.value.s_base;
        let big_h = p_la * bz.value.l_base_recip;

        let mut total = h + big_h.conj();
        let mut near = bz.near_boundary;
        if m > 0 {
            let omega = self.omega_complex(z)?;
            near = near || omega.near_boundary;
            for j in 0..m {
                total += c[j] * omega.value[j];
            }
        }
        Ok(RealValue::from_complex(total, near))
    }

    /// The Poisson kernel `p(z, w)` for interior `z` and the boundary node
    /// with flat index `node`.
    pub fn poisson_kernel(&self, z: Complex64, node: usize) -> Result<RealValue> {
        let grid = self.szego.grid();
        let m = self.measure_count();
        let bz = self.szego.basis_at(z)?;
        let bw = self.szego.basis_at_node(node);
        let s_zw = self.szego.szego_from_basis(&bz.value, &bw)?;

        let mut p = s_zw * bw.s_base / bz.value.s_base
            + (s_zw * bw.l_base).conj() * bz.value.l_base_recip.conj();
        let mut near = bz.near_boundary;

        if m > 0 {
            // Coefficient kernels q_j(w) reproducing the side conditions:
            // c_j = ∮ q_j(w) φ(w) ds.
            let mut q = vec![Complex64::default(); m];
            for j in 0..m {
                for k in 0..m {
                    q[j] += self.periods_inv[(k, j)] * bw.s_zeros[k].conj() * bw.s_base;
                }
            }
            let row = self.szego.szego_row_from_basis(&bz.value);
            let omega = self.omega_complex(z)?;
            near = near || omega.near_boundary;
            for j in 0..m {
                let mut i_j = Complex64::default();
                let mut j_j = Complex64::default();
                for k in grid.curve_range(self.inner_curves[j]) {
                    let w = grid.weights()[k];
                    i_j += row[k] * self.szego.szego_boundary().values[k] * w;
                    j_j += (row[k] * self.szego.garabedian_boundary_base().values[k]).conj() * w;
                }
                i_j /= bz.value.s_base;
                j_j *= bz.value.l_base_recip.conj();
                p += -q[j] * i_j - q[j].conj() * j_j + omega.value[j] * q[j];
            }
        }
        Ok(RealValue::from_complex(p, near))
    }
}

/// A single harmonic measure as an interior evaluator.
pub struct HarmonicMeasure {
    index: usize,
    data: Arc<PoissonData>,
}

impl HarmonicMeasure {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn eval(&self, z: Complex64) -> Result<RealValue> {
        let all = self.data.omega_complex(z)?;
        Ok(RealValue::from_complex(
            all.value[self.index],
            all.near_boundary,
        ))
    }
}

/// Evaluators for `ω_1 … ω_{n−1}` (empty for a simply connected domain).
pub fn harmonic_measures(data: &Arc<PoissonData>) -> Vec<HarmonicMeasure> {
    (0..data.measure_count())
        .map(|index| HarmonicMeasure {
            index,
            data: Arc::clone(data),
        })
        .collect()
}

/// `P(S_a φ)(a_k)` for all zeros `a_k`, straight from boundary samples:
/// `∮ S(a_k,w) S_a(w) φ(w) ds`.
fn projection_at_zeros(szego: &SzegoData, phi: &BoundaryFunction) -> DVector<Complex64> {
    let grid = szego.grid();
    let m = szego.zeros().len();
    let mut rhs = DVector::<Complex64>::zeros(m);
    for k in 0..m {
        let s_k = szego.szego_boundary_at_zero(k);
        let mut sum = Complex64::default();
        for node in 0..grid.len() {
            sum += s_k.values[node].conj()
                * szego.szego_boundary().values[node]
                * phi.values[node]
                * grid.weights()[node];
        }
        rhs[k] = sum;
    }
    rhs
}

/// Upsampling factor for the fallback's fine grid.
const FINE_FACTOR: usize = 16;

/// Antiderivative-based harmonic measures.
struct OmegaFallback {
    fine: BoundaryGrid,
    fprime_fine: Vec<BoundaryFunction>,
    anchor_z: Complex64,
    normal: Complex64,
    sliver: f64,
    /// `F'`, `F''`, `F'''` of each measure at the anchor node.
    taylor: Vec<[Complex64; 3]>,
    mid: Complex64,
    center: Complex64,
    ring_radius: f64,
    clearance_min: f64,
}

impl OmegaFallback {
    fn build(szego: &SzegoData) -> Result<OmegaFallback> {
        let grid = szego.grid();
        let m = szego.zeros().len();
        let holes = hole_points(grid)?;

        let basis_v: Vec<BoundaryFunction> = (0..m)
            .map(|i| {
                szego
                    .garabedian_boundary_at_zero(i)
                    .product(szego.szego_boundary())
            })
            .collect();

        // Expand each basis function over the measure derivatives F_k' by
        // the per-curve constants formula, then invert:
        // M_ik = −(1/2πi) ∮ ln|z−b_k| 𝓥_i dz  gives 𝓥_i = Σ_k M_ik F_k'.
        let mut mmat = DMatrix::<Complex64>::zeros(m, m);
        for (k, &b) in holes.iter().enumerate() {
            for i in 0..m {
                let mut sum = Complex64::default();
                for node in 0..grid.len() {
                    sum += (grid.nodes()[node] - b).norm().ln()
                        * basis_v[i].values[node]
                        * grid.dz_weights()[node];
                }
                mmat[(i, k)] = -sum / Complex64::new(0.0, TAU);
            }
        }
        let weights = mmat.try_inverse().ok_or_else(|| {
            Error::Solve("harmonic-measure basis change matrix is singular".into())
        })?;

        // F_j' = Σ_i W_ji 𝓥_i, sampled on the coarse grid.
        let mut fprime_coarse = Vec::with_capacity(m);
        for j in 0..m {
            let mut values = vec![Complex64::default(); grid.len()];
            for i in 0..m {
                let wji = weights[(j, i)];
                for node in 0..grid.len() {
                    values[node] += wji * basis_v[i].values[node];
                }
            }
            fprime_coarse.push(BoundaryFunction::new(values));
        }

        let fine = grid.refined(FINE_FACTOR)?;
        let fprime_fine: Vec<BoundaryFunction> = fprime_coarse
            .iter()
            .map(|f| fourier_upsample(f, grid, FINE_FACTOR))
            .collect();

        // Anchor: the outer-curve node farthest from all inner curves.
        let outer = grid.domain().outer_index();
        let mut anchor = grid.curve_range(outer).start;
        let mut best = f64::MIN;
        for k in grid.curve_range(outer) {
            let mut score = f64::MAX;
            for c in 0..grid.curve_count() {
                if c == outer {
                    continue;
                }
                for j in grid.curve_range(c) {
                    score = score.min((grid.nodes()[j] - grid.nodes()[k]).norm());
                }
            }
            if score > best {
                best = score;
                anchor = k;
            }
        }
        let anchor_z = grid.nodes()[anchor];
        let normal = inward_normal(grid, anchor);
        let depth = (0.5 * best).min(0.25 * grid.diameter());
        let mid = anchor_z + depth * normal;

        // Boundary Taylor data for the first sliver off the anchor.
        let mut taylor = Vec::with_capacity(m);
        for f in &fprime_coarse {
            let d1 = spectral_derivative(f, grid);
            let f2 = BoundaryFunction::new(
                d1.values
                    .iter()
                    .zip(grid.velocities())
                    .map(|(v, dz)| v / dz)
                    .collect(),
            );
            let d2 = spectral_derivative(&f2, grid);
            let f3 = BoundaryFunction::new(
                d2.values
                    .iter()
                    .zip(grid.velocities())
                    .map(|(v, dz)| v / dz)
                    .collect(),
            );
            taylor.push([f.values[anchor], f2.values[anchor], f3.values[anchor]]);
        }

        let fine_outer_start = fine.curve_range(outer).start;
        let anchor_fine = fine_outer_start + (anchor - grid.curve_range(outer).start) * FINE_FACTOR;
        let sliver = 6.0 * fine.local_spacing(anchor_fine);

        let range = grid.curve_range(outer);
        let center = grid.curve_centroid(outer);
        let ring_radius = range
            .clone()
            .map(|k| (grid.nodes()[k] - center).norm())
            .sum::<f64>()
            / range.len() as f64;

        Ok(OmegaFallback {
            fine,
            fprime_fine,
            anchor_z,
            normal,
            sliver,
            taylor,
            mid,
            center,
            ring_radius,
            clearance_min: 3.0 * grid.max_spacing(),
        })
    }

    /// `ω_j(z)` for all j as complex values before taking real parts.
    fn eval_all(&self, z: Complex64) -> Result<Vec<Complex64>> {
        let m = self.fprime_fine.len();
        // Sliver: ∫₀^δ F'(z₀+sν) ν ds by the boundary Taylor expansion.
        let nu = self.normal;
        let d = self.sliver;
        let mut totals: Vec<Complex64> = self
            .taylor
            .iter()
            .map(|t| nu * (t[0] * d + t[1] * nu * d * d / 2.0 + t[2] * nu * nu * d * d * d / 6.0))
            .collect();

        let start = self.anchor_z + d * nu;
        let mut waypoints = vec![start, self.mid];
        waypoints.extend(self.route(self.mid, z)?);

        let fns: Vec<&BoundaryFunction> = self.fprime_fine.iter().collect();
        let (gl_nodes, gl_weights) = gauss_legendre_16();
        for leg in waypoints.windows(2) {
            let (p, q) = (leg[0], leg[1]);
            if (q - p).norm() < 1e-14 {
                continue;
            }
            let clearance = self.segment_clearance(p, q);
            let pieces = ((q - p).norm() / (1.5 * clearance)).ceil().max(1.0) as usize;
            for piece in 0..pieces {
                let a = p + (q - p) * (piece as f64 / pieces as f64);
                let b = p + (q - p) * ((piece + 1) as f64 / pieces as f64);
                let half = (b - a) / 2.0;
                let mid = (a + b) / 2.0;
                for (t, w) in gl_nodes.iter().zip(&gl_weights) {
                    let zeta = mid + half * *t;
                    let vals = cauchy_eval_many(&fns, &self.fine, zeta);
                    for j in 0..m {
                        totals[j] += vals[j] * half * *w;
                    }
                }
            }
        }
        Ok(totals)
    }

    fn segment_clearance(&self, p: Complex64, q: Complex64) -> f64 {
        let samples = 48;
        let mut clear = f64::MAX;
        for s in 0..=samples {
            let t = s as f64 / samples as f64;
            let point = p + (q - p) * t;
            clear = clear.min(self.fine.boundary_distance(point));
        }
        clear
    }

    fn segment_ok(&self, p: Complex64, q: Complex64) -> bool {
        let allow = self
            .clearance_min
            .min(0.9 * self.fine.boundary_distance(p))
            .min(0.9 * self.fine.boundary_distance(q));
        self.segment_clearance(p, q) >= allow
    }

    /// Waypoints from `from` (exclusive) to `to` (inclusive) keeping clear of
    /// the boundary: straight if possible, otherwise around a ring about the
    /// domain center.
    fn route(&self, from: Complex64, to: Complex64) -> Result<Vec<Complex64>> {
        if self.segment_ok(from, to) {
            return Ok(vec![to]);
        }
        for frac in [0.75, 0.8, 0.7, 0.65, 0.85, 0.6, 0.55, 0.5, 0.45, 0.9] {
            let rho = frac * self.ring_radius;
            let th_from = (from - self.center).arg();
            let th_to = (to - self.center).arg();
            let mut dth = th_to - th_from;
            while dth > std::f64::consts::PI {
                dth -= TAU;
            }
            while dth < -std::f64::consts::PI {
                dth += TAU;
            }
            let chords = ((dth.abs() * rho / 0.25).ceil() as usize).max(1);
            let mut pts = vec![self.center + Complex64::from_polar(rho, th_from)];
            for c in 1..=chords {
                let th = th_from + dth * c as f64 / chords as f64;
                pts.push(self.center + Complex64::from_polar(rho, th));
            }
            pts.push(to);
            let mut ok = self.segment_ok(from, pts[0]);
            for pair in pts.windows(2) {
                ok = ok && self.segment_ok(pair[0], pair[1]);
            }
            if ok {
                return Ok(pts);
            }
        }
        Err(Error::Solve(format!(
            "no boundary-clear integration path to {to}"
        )))
    }
}

/// 16-point Gauss–Legendre rule on [−1, 1], by Newton iteration on the
/// Legendre polynomial.
fn gauss_legendre_16() -> (Vec<f64>, Vec<f64>) {
    let n = 16usize;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = pk;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;
    use crate::szego::BasePoint;
    use approx::assert_abs_diff_eq;

    fn disc_poisson_data(n: usize, a: Complex64) -> Arc<PoissonData> {
        let s = SzegoData::assemble(&reference::disc_domain(), n, BasePoint::Fixed(a)).unwrap();
        Arc::new(PoissonData::assemble(Arc::new(s)).unwrap())
    }

    fn annulus_poisson_data(n: usize) -> Arc<PoissonData> {
        let s = SzegoData::assemble(
            &reference::annulus_domain(0.5),
            n,
            BasePoint::Fixed(Complex64::new(0.7, 0.0)),
        )
        .unwrap();
        Arc::new(PoissonData::assemble(Arc::new(s)).unwrap())
    }

    fn three_conn_poisson_data(n: usize) -> Arc<PoissonData> {
        let s = SzegoData::assemble(
            &reference::three_connected_domain(),
            n,
            BasePoint::Fixed(Complex64::new(0.0, 0.55)),
        )
        .unwrap();
        Arc::new(PoissonData::assemble(Arc::new(s)).unwrap())
    }

    #[test]
    fn period_matrix_shapes_and_inverse() {
        let disc = disc_poisson_data(64, Complex64::new(0.3, 0.0));
        assert_eq!(disc.periods().nrows(), 0);

        let ann = annulus_poisson_data(128);
        assert_eq!(ann.periods().nrows(), 1);
        assert!(ann.periods()[(0, 0)].norm() > 0.0);

        let three = three_conn_poisson_data(256);
        let defect =
            (three.periods_inv() * three.periods() - DMatrix::<Complex64>::identity(2, 2)).camax();
        assert!(defect < 1e-10, "[B][A] − I defect {defect}");
    }

    #[test]
    fn period_matrix_stable_under_refinement() {
        let coarse = annulus_poisson_data(128);
        let fine = annulus_poisson_data(256);
        let drift = (coarse.periods()[(0, 0)] - fine.periods()[(0, 0)]).norm();
        assert!(drift < 1e-8, "period drift {drift}");
    }

    #[test]
    fn projection_reproduces_hardy_functions() {
        let data = disc_poisson_data(128, Complex64::new(0.3, 0.0));
        let grid = data.szego_data().grid();
        let u = BoundaryFunction::from_fn(grid, |z| z * z);
        let z = Complex64::new(0.4, 0.0);
        let v = szego_projection_eval(data.szego_data(), &u, z)
            .unwrap()
            .value;
        assert!((v - Complex64::new(0.16, 0.0)).norm() < 1e-10);

        let ones = BoundaryFunction::from_fn(grid, |_| Complex64::new(1.0, 0.0));
        let v = szego_projection_eval(data.szego_data(), &ones, Complex64::new(-0.2, 0.5))
            .unwrap()
            .value;
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn projection_kills_antiholomorphic_part() {
        let data = disc_poisson_data(128, Complex64::new(0.3, 0.0));
        let grid = data.szego_data().grid();
        let u = BoundaryFunction::from_fn(grid, |z| z.conj());
        let v = szego_projection_eval(data.szego_data(), &u, Complex64::new(0.3, 0.1))
            .unwrap()
            .value;
        assert!(v.norm() < 1e-10, "P(conj ζ) = {v}");
    }

    #[test]
    fn dirichlet_reproduces_harmonic_polynomials() {
        let data = annulus_poisson_data(256);
        let grid = data.szego_data().grid();
        let phi = BoundaryFunction::from_fn(grid, |z| Complex64::new((z * z).re, 0.0));
        let z = Complex64::new(0.7, 0.0);
        let v = data.dirichlet_solve(&phi, z).unwrap();
        assert!(
            (v.value - 0.49).abs() < 1e-8,
            "Re ζ² extension: {}",
            v.value
        );
        assert!(v.imag_residual < 1e-8);
    }

    #[test]
    fn dirichlet_reproduces_log_modulus() {
        let data = annulus_poisson_data(256);
        let grid = data.szego_data().grid();
        let phi = BoundaryFunction::from_fn(grid, |z| Complex64::new(z.norm().ln(), 0.0));
        let z = Complex64::new(0.7, 0.0);
        let v = data.dirichlet_solve(&phi, z).unwrap();
        assert!(
            (v.value - 0.7f64.ln()).abs() < 1e-8,
            "ln|ζ| extension: {} vs {}",
            v.value,
            0.7f64.ln()
        );
    }

    #[test]
    fn dirichlet_constant_and_linearity() {
        let data = annulus_poisson_data(128);
        let grid = data.szego_data().grid();
        let one = BoundaryFunction::from_fn(grid, |_| Complex64::new(1.0, 0.0));
        let z = Complex64::new(-0.2, 0.65);
        let v = data.dirichlet_solve(&one, z).unwrap();
        assert!((v.value - 1.0).abs() < 1e-10);

        let f1 = BoundaryFunction::from_fn(grid, |w| Complex64::new((w * w).re, 0.0));
        let f2 = BoundaryFunction::from_fn(grid, |w| Complex64::new(w.im, 0.0));
        let combo = BoundaryFunction::new(
            f1.values
                .iter()
                .zip(&f2.values)
                .map(|(a, b)| 2.0 * a - 3.0 * b)
                .collect(),
        );
        let v_combo = data.dirichlet_solve(&combo, z).unwrap().value;
        let v1 = data.dirichlet_solve(&f1, z).unwrap().value;
        let v2 = data.dirichlet_solve(&f2, z).unwrap().value;
        assert!((v_combo - (2.0 * v1 - 3.0 * v2)).abs() < 1e-10);
    }

    #[test]
    fn dirichlet_mean_value_on_disc() {
        let data = disc_poisson_data(128, Complex64::new(0.3, 0.0));
        let grid = data.szego_data().grid();
        let phi = BoundaryFunction::from_fn(grid, |z| {
            Complex64::new((3.0 * z.arg()).cos() + 0.2 * z.re, 0.0)
        });
        let v = data.dirichlet_solve(&phi, Complex64::default()).unwrap();
        let mean: f64 = phi
            .values
            .iter()
            .zip(grid.weights())
            .map(|(p, w)| p.re * w)
            .sum::<f64>()
            / TAU;
        assert!((v.value - mean).abs() < 1e-9, "{} vs {}", v.value, mean);
    }

    #[test]
    fn annulus_harmonic_measure_closed_form() {
        let data = annulus_poisson_data(256);
        for z in [
            Complex64::new(0.7, 0.0),
            Complex64::new(0.0, 0.6),
            Complex64::new(-0.63, 0.4),
        ] {
            let omega = data.omega_all(z).unwrap();
            let expect = reference::annulus_harmonic_measure(0.5, z);
            assert!(
                (omega[0].value - expect).abs() < 1e-8,
                "ω₁({z}) = {} vs {}",
                omega[0].value,
                expect
            );
        }
    }

    #[test]
    fn harmonic_measure_bounds_and_boundary_limits() {
        let data = three_conn_poisson_data(256);
        let grid = data.szego_data().grid().clone();
        // Interior bounds.
        for s in 0..60 {
            let th = TAU * s as f64 / 60.0;
            let z = Complex64::from_polar(0.75, th);
            for v in data.omega_all(z).unwrap() {
                assert!(v.value > 0.0 && v.value < 1.0, "ω({z}) = {}", v.value);
            }
        }
        // Coarse boundary band: offset by 5% of the local curve size along
        // the inward normal (a global offset would overshoot the small
        // holes entirely).
        let curve_size = |c: usize| -> f64 {
            let r = grid.curve_range(c);
            let mut lo = Complex64::new(f64::MAX, f64::MAX);
            let mut hi = Complex64::new(f64::MIN, f64::MIN);
            for k in r {
                let z = grid.nodes()[k];
                lo = Complex64::new(lo.re.min(z.re), lo.im.min(z.im));
                hi = Complex64::new(hi.re.max(z.re), hi.im.max(z.im));
            }
            (hi - lo).norm()
        };
        for k in (0..grid.len()).step_by(29) {
            let offset = 0.05 * curve_size(grid.curve_of(k));
            let z = grid.nodes()[k] + offset * inward_normal(&grid, k);
            if !grid.contains(z).unwrap_or(false) {
                continue;
            }
            let omega = data.omega_all(z).unwrap();
            let curve = grid.curve_of(k);
            for (j, v) in omega.iter().enumerate() {
                let target = if grid.domain().inner_indices()[j] == curve {
                    1.0
                } else {
                    0.0
                };
                // The measures move off their boundary values at unit-size
                // slopes, so at offset 0.1 a coarse band is all that can be
                // asserted; this still catches index or sign mix-ups.
                assert!(
                    (v.value - target).abs() < 0.35,
                    "ω_{j} near node {k}: {} vs {target}",
                    v.value
                );
            }
        }
    }

    #[test]
    fn fallback_agrees_with_primary() {
        let data = three_conn_poisson_data(256);
        for z in [
            Complex64::new(0.0, 0.7),
            Complex64::new(0.0, -0.5),
            Complex64::new(0.7, 0.35),
            Complex64::new(-0.15, 0.1),
        ] {
            let primary = data.omega_all(z).unwrap();
            let fallback = data.omega_fallback_all(z).unwrap();
            for j in 0..2 {
                assert!(
                    (primary[j].value - fallback[j].value).abs() < 1e-6,
                    "ω_{j}({z}): primary {} vs fallback {}",
                    primary[j].value,
                    fallback[j].value
                );
            }
        }
    }

    #[test]
    fn fallback_annulus_closed_form() {
        let data = annulus_poisson_data(256);
        for z in [Complex64::new(0.7, 0.0), Complex64::new(-0.1, -0.8)] {
            let fb = data.omega_fallback_all(z).unwrap();
            let expect = reference::annulus_harmonic_measure(0.5, z);
            assert!(
                (fb[0].value - expect).abs() < 1e-6,
                "fallback ω₁({z}) = {} vs {}",
                fb[0].value,
                expect
            );
        }
    }

    #[test]
    fn disc_has_no_measures() {
        let data = disc_poisson_data(64, Complex64::new(0.3, 0.0));
        assert!(data.omega_all(Complex64::new(0.2, 0.2)).unwrap().is_empty());
        assert!(harmonic_measures(&data).is_empty());
    }

    #[test]
    fn poisson_kernel_matches_disc_closed_form() {
        let data = disc_poisson_data(256, Complex64::default());
        let grid = data.szego_data().grid().clone();
        let z = Complex64::new(0.3, -0.4);
        let mut worst = 0.0f64;
        for k in (0..grid.len()).step_by(7) {
            let p = data.poisson_kernel(z, k).unwrap();
            let expect = reference::disc_poisson(z, grid.nodes()[k]);
            worst = worst.max((p.value - expect).abs() / expect.abs());
        }
        assert!(worst < 1e-6, "max rel error {worst}");
    }

    #[test]
    fn poisson_kernel_row_sums_to_one() {
        for data in [
            annulus_poisson_data(128),
            disc_poisson_data(64, Complex64::new(0.3, 0.0)),
        ] {
            let grid = data.szego_data().grid().clone();
            let z = Complex64::new(-0.1, 0.72);
            let mut sum = 0.0;
            for k in 0..grid.len() {
                sum += data.poisson_kernel(z, k).unwrap().value * grid.weights()[k];
            }
            assert!((sum - 1.0).abs() < 1e-8, "Σ p w = {sum}");
        }
    }

    #[test]
    fn poisson_kernel_consistent_with_dirichlet() {
        let data = annulus_poisson_data(128);
        let grid = data.szego_data().grid().clone();
        let phi = BoundaryFunction::from_fn(&grid, |w| Complex64::new((w * w).re, 0.0));
        let z = Complex64::new(0.66, 0.2);
        let mut quad = 0.0;
        for k in 0..grid.len() {
            quad += data.poisson_kernel(z, k).unwrap().value * phi.values[k].re * grid.weights()[k];
        }
        let direct = data.dirichlet_solve(&phi, z).unwrap().value;
        assert!((quad - direct).abs() < 1e-8, "{quad} vs {direct}");
    }

    #[test]
    fn poisson_kernel_positive_up_to_discretization() {
        let data = three_conn_poisson_data(256);
        let grid = data.szego_data().grid().clone();
        let z = Complex64::new(0.1, 0.4);
        for k in (0..grid.len()).step_by(11) {
            let p = data.poisson_kernel(z, k).unwrap().value;
            assert!(p > -1e-8, "p(z, node {k}) = {p}");
        }
    }

    #[test]
    fn quality_residuals_shrink_with_refinement() {
        let mut residuals = Vec::new();
        for n in [64usize, 128] {
            let s = SzegoData::assemble(
                &reference::annulus_domain(0.5),
                n,
                BasePoint::Fixed(Complex64::new(0.7, 0.0)),
            )
            .unwrap();
            let data = PoissonData::assemble(Arc::new(s)).unwrap();
            let grid = data.szego_data().grid();
            let phi = BoundaryFunction::from_fn(grid, |w| Complex64::new((w * w * w).im, 0.0));
            let v = data
                .dirichlet_solve(&phi, Complex64::new(0.68, 0.12))
                .unwrap();
            residuals.push(v.imag_residual.max(1e-16));
        }
        assert!(
            residuals[0] > 100.0 * residuals[1] || residuals[1] < 1e-13,
            "imag residuals {residuals:?}"
        );
    }

    #[test]
    fn mean_value_identity_check() {
        // Poisson kernel at the origin of the centered disc is the uniform
        // density 1/(2π), tying the kernel normalization down.
        let data = disc_poisson_data(64, Complex64::default());
        let p = data.poisson_kernel(Complex64::default(), 3).unwrap();
        assert_abs_diff_eq!(p.value, 1.0 / TAU, epsilon = 1e-10);
    }
}
