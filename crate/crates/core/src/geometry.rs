//! Boundary geometry: parameterized closed curves, multiply connected domains
//! and the equispaced quadrature grids everything else is built on.
//!
//! Curves are parameterized over one period `t ∈ [0, 1)` either as circles or
//! as trigonometric polynomials, so positions and derivatives are exact and
//! the trapezoid rule over the grid integrates smooth periodic data with
//! spectral accuracy. The boundary is kept positively oriented: the outer
//! curve runs counterclockwise, inner curves run clockwise, so the domain is
//! always on the left of the direction of travel and the inward normal is
//! `i·T(z)`.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rustfft::{num_complex::Complex as FftComplex, FftPlanner};
use std::f64::consts::TAU;

/// Relative node-distance threshold for the simplicity/disjointness checks.
const MIN_SEPARATION_REL: f64 = 1e-9;

/// A smooth simple closed curve with period-1 parameterization.
#[derive(Debug, Clone, PartialEq)]
pub enum Curve {
    /// `z(t) = center + radius·e^{±2πit}`; `orientation = +1` is counterclockwise.
    Circle {
        center: Complex64,
        radius: f64,
        orientation: i8,
    },
    /// `z(t) = Σ_m c_m e^{2πimt}` over a finite set of integer frequencies.
    Trig { coeffs: Vec<(i32, Complex64)> },
}

impl Curve {
    pub fn circle(center: Complex64, radius: f64, orientation: i8) -> Curve {
        Curve::Circle {
            center,
            radius,
            orientation,
        }
    }

    pub fn trig(coeffs: Vec<(i32, Complex64)>) -> Curve {
        Curve::Trig { coeffs }
    }

    /// Position and first two derivatives of the parameterization at `t`.
    pub fn eval(&self, t: f64) -> (Complex64, Complex64, Complex64) {
        match self {
            Curve::Circle {
                center,
                radius,
                orientation,
            } => {
                let om = TAU * f64::from(*orientation);
                let e = Complex64::new(0.0, om * t).exp();
                let i_om = Complex64::new(0.0, om);
                let z = center + radius * e;
                let dz = i_om * radius * e;
                let ddz = i_om * i_om * radius * e;
                (z, dz, ddz)
            }
            Curve::Trig { coeffs } => {
                let mut z = Complex64::default();
                let mut dz = Complex64::default();
                let mut ddz = Complex64::default();
                for &(m, c) in coeffs {
                    let i_om = Complex64::new(0.0, TAU * f64::from(m));
                    let e = c * Complex64::new(0.0, TAU * f64::from(m) * t).exp();
                    z += e;
                    dz += i_om * e;
                    ddz += i_om * i_om * e;
                }
                (z, dz, ddz)
            }
        }
    }
}

/// A bounded domain described by `n ≥ 1` pairwise disjoint closed curves,
/// one of which is the outer boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    curves: Vec<Curve>,
    outer: usize,
}

impl Domain {
    /// Structural construction; the numeric invariants (non-degeneracy,
    /// disjointness, orientation) are verified when a grid is built.
    pub fn new(curves: Vec<Curve>, outer: usize) -> Result<Domain> {
        if curves.is_empty() {
            return Err(Error::Geometry("domain needs at least one curve".into()));
        }
        if outer >= curves.len() {
            return Err(Error::Geometry(format!(
                "outer index {} out of range for {} curves",
                outer,
                curves.len()
            )));
        }
        Ok(Domain { curves, outer })
    }

    /// Simply connected domain bounded by one counterclockwise curve.
    pub fn simply_connected(curve: Curve) -> Result<Domain> {
        Domain::new(vec![curve], 0)
    }

    pub fn curves(&self) -> &[Curve] {
        &self.curves
    }

    pub fn outer_index(&self) -> usize {
        self.outer
    }

    /// Connectivity `n` (number of boundary curves).
    pub fn connectivity(&self) -> usize {
        self.curves.len()
    }

    /// Indices of the inner curves in their canonical order (curve order
    /// with the outer curve removed).
    pub fn inner_indices(&self) -> Vec<usize> {
        (0..self.curves.len())
            .filter(|&i| i != self.outer)
            .collect()
    }
}

/// Complex samples of a function on the full boundary grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFunction {
    pub values: Vec<Complex64>,
}

impl BoundaryFunction {
    pub fn new(values: Vec<Complex64>) -> BoundaryFunction {
        BoundaryFunction { values }
    }

    pub fn from_fn(grid: &BoundaryGrid, f: impl Fn(Complex64) -> Complex64) -> BoundaryFunction {
        BoundaryFunction {
            values: grid.nodes().iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Pointwise product of two sample vectors.
    pub fn product(&self, other: &BoundaryFunction) -> BoundaryFunction {
        assert_eq!(self.len(), other.len(), "sample count mismatch");
        BoundaryFunction {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }
}

/// Discretized boundary: `N` equispaced parameter nodes per curve with node
/// positions, velocities, unit tangents and arc-length quadrature weights.
#[derive(Debug, Clone)]
pub struct BoundaryGrid {
    domain: Domain,
    nodes_per_curve: usize,
    z: Vec<Complex64>,
    dz: Vec<Complex64>,
    ddz: Vec<Complex64>,
    tangent: Vec<Complex64>,
    /// Arc-length weights `|z'(t_k)|/N`, so `Σ w_k f(z_k) ≈ ∮ f ds`.
    weight: Vec<f64>,
    /// Complex weights `z'(t_k)/N`, so `Σ v_k f(z_k) ≈ ∮ f dz`.
    dz_weight: Vec<Complex64>,
    offsets: Vec<usize>,
    max_spacing: f64,
    diameter: f64,
}

impl BoundaryGrid {
    /// Build an `N`-node-per-curve grid and verify the domain invariants at
    /// grid resolution.
    pub fn build(domain: &Domain, n: usize) -> Result<BoundaryGrid> {
        if n < 16 || n % 2 != 0 {
            return Err(Error::Geometry(format!(
                "grid size must be even and at least 16, got {n}"
            )));
        }
        let grid = BoundaryGrid::build_unchecked(domain, n)?;
        grid.validate()?;
        Ok(grid)
    }

    /// Grid construction without the domain-invariant checks. Used for
    /// refinements of an already validated grid.
    pub(crate) fn build_unchecked(domain: &Domain, n: usize) -> Result<BoundaryGrid> {
        let ncurves = domain.curves.len();
        let total = ncurves * n;
        let mut z = Vec::with_capacity(total);
        let mut dz = Vec::with_capacity(total);
        let mut ddz = Vec::with_capacity(total);
        let mut tangent = Vec::with_capacity(total);
        let mut weight = Vec::with_capacity(total);
        let mut dz_weight = Vec::with_capacity(total);
        let mut offsets = Vec::with_capacity(ncurves + 1);

        for (ci, curve) in domain.curves.iter().enumerate() {
            offsets.push(z.len());
            for k in 0..n {
                let t = k as f64 / n as f64;
                let (p, v, a) = curve.eval(t);
                let speed = v.norm();
                if !speed.is_finite() || speed < 1e-12 {
                    return Err(Error::InvalidCurve {
                        index: ci,
                        reason: format!("parameterization is degenerate near t = {t}"),
                    });
                }
                z.push(p);
                dz.push(v);
                ddz.push(a);
                tangent.push(v / speed);
                weight.push(speed / n as f64);
                dz_weight.push(v / n as f64);
            }
        }
        offsets.push(total);

        let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in &z {
            lo_x = lo_x.min(p.re);
            hi_x = hi_x.max(p.re);
            lo_y = lo_y.min(p.im);
            hi_y = hi_y.max(p.im);
        }
        let diameter = ((hi_x - lo_x).powi(2) + (hi_y - lo_y).powi(2)).sqrt();

        let mut max_spacing = 0.0f64;
        for ci in 0..ncurves {
            let range = offsets[ci]..offsets[ci + 1];
            let slice = &z[range.clone()];
            for k in 0..slice.len() {
                let next = slice[(k + 1) % slice.len()];
                max_spacing = max_spacing.max((next - slice[k]).norm());
            }
        }

        Ok(BoundaryGrid {
            domain: domain.clone(),
            nodes_per_curve: n,
            z,
            dz,
            ddz,
            tangent,
            weight,
            dz_weight,
            offsets,
            max_spacing,
            diameter,
        })
    }

    fn validate(&self) -> Result<()> {
        let sep = MIN_SEPARATION_REL * self.diameter;
        let ncurves = self.curve_count();

        // Disjointness and simplicity at grid resolution: the node polylines
        // must not cross, and must keep a minimum distance. Points on the
        // same curve are only compared when their parameter separation is
        // large enough that closeness cannot be explained by the
        // parameterization itself.
        for ci in 0..ncurves {
            for cj in ci..ncurves {
                let ri = self.curve_range(ci);
                let rj = self.curve_range(cj);
                let n = self.nodes_per_curve;
                for ki in ri.clone() {
                    let a0 = self.z[ki];
                    let a1 = self.z[if ki + 1 == ri.end { ri.start } else { ki + 1 }];
                    for kj in rj.clone() {
                        if ci == cj {
                            let d = (ki as i64 - kj as i64).rem_euclid(n as i64) as usize;
                            let d = d.min(n - d);
                            if d <= n / 8 {
                                continue;
                            }
                            if kj <= ki {
                                continue;
                            }
                        }
                        let b0 = self.z[kj];
                        let b1 = self.z[if kj + 1 == rj.end { rj.start } else { kj + 1 }];
                        if (a0 - b0).norm() < sep || segments_cross(a0, a1, b0, b1) {
                            return Err(if ci == cj {
                                Error::InvalidCurve {
                                    index: ci,
                                    reason: "curve self-intersects at grid resolution".into(),
                                }
                            } else {
                                Error::Geometry(format!("curves {ci} and {cj} intersect"))
                            });
                        }
                    }
                }
            }
        }

        // Orientation and nesting, via winding numbers around curve centroids.
        let centroids: Vec<Complex64> = (0..ncurves).map(|c| self.curve_centroid(c)).collect();
        for ci in 0..ncurves {
            let own = self.curve_winding(ci, centroids[ci]);
            let expect = if ci == self.domain.outer { 1 } else { -1 };
            if own != expect {
                return Err(Error::Geometry(format!(
                    "curve {ci} has winding {own} about its centroid, expected {expect} \
                     (outer counterclockwise, inner clockwise)"
                )));
            }
            if ci != self.domain.outer {
                if self.curve_winding(self.domain.outer, centroids[ci]) != 1 {
                    return Err(Error::Geometry(format!(
                        "curve {ci} does not lie inside the outer curve"
                    )));
                }
                for cj in 0..ncurves {
                    if cj != ci
                        && cj != self.domain.outer
                        && self.curve_winding(cj, centroids[ci]) != 0
                    {
                        return Err(Error::Geometry(format!(
                            "curve {ci} lies inside curve {cj}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn nodes_per_curve(&self) -> usize {
        self.nodes_per_curve
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn curve_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn curve_range(&self, curve: usize) -> std::ops::Range<usize> {
        self.offsets[curve]..self.offsets[curve + 1]
    }

    /// Curve index owning the flat node index `k`.
    pub fn curve_of(&self, k: usize) -> usize {
        (0..self.curve_count())
            .find(|&c| self.curve_range(c).contains(&k))
            .expect("node index in range")
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.z
    }

    pub fn velocities(&self) -> &[Complex64] {
        &self.dz
    }

    pub fn accelerations(&self) -> &[Complex64] {
        &self.ddz
    }

    pub fn tangents(&self) -> &[Complex64] {
        &self.tangent
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    pub fn dz_weights(&self) -> &[Complex64] {
        &self.dz_weight
    }

    pub fn max_spacing(&self) -> f64 {
        self.max_spacing
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Coarsest distance below which a point may be treated as sitting on
    /// the boundary; per-point queries use the local node spacing instead.
    pub fn boundary_tolerance(&self) -> f64 {
        self.max_spacing
    }

    /// Coarsest distance below which interior evaluation through the Cauchy
    /// integral quadrature loses accuracy (results are flagged, not
    /// rejected); per-point queries use the local node spacing instead.
    pub fn accuracy_floor(&self) -> f64 {
        2.0 * self.max_spacing
    }

    /// Node spacing of the curve at flat node index `k`.
    pub fn local_spacing(&self, k: usize) -> f64 {
        let c = self.curve_of(k);
        let r = self.curve_range(c);
        let next = if k + 1 == r.end { r.start } else { k + 1 };
        (self.z[next] - self.z[k]).norm()
    }

    /// Nearest grid node to `p` and its distance.
    pub fn nearest_node(&self, p: Complex64) -> (usize, f64) {
        let mut best = (0usize, f64::MAX);
        for (k, &q) in self.z.iter().enumerate() {
            let d = (q - p).norm();
            if d < best.1 {
                best = (k, d);
            }
        }
        best
    }

    /// Distance from `p` to the boundary, at grid resolution.
    pub fn boundary_distance(&self, p: Complex64) -> f64 {
        self.nearest_node(p).1
    }

    /// Whether `p` sits within one local node spacing of the boundary, i.e.
    /// too close to resolve.
    pub fn on_boundary(&self, p: Complex64) -> bool {
        let (k, d) = self.nearest_node(p);
        d < self.local_spacing(k)
    }

    /// Whether `p` sits below the Cauchy-quadrature accuracy floor (two
    /// local node spacings) of its nearest boundary curve.
    pub fn near_accuracy_floor(&self, p: Complex64) -> bool {
        let (k, d) = self.nearest_node(p);
        d < 2.0 * self.local_spacing(k)
    }

    /// ∮ f ds by the trapezoid rule.
    pub fn integrate_ds(&self, f: &BoundaryFunction) -> Complex64 {
        assert_eq!(f.len(), self.len(), "sample count mismatch");
        f.values.iter().zip(&self.weight).map(|(v, &w)| v * w).sum()
    }

    /// ∮ f dz by the trapezoid rule.
    pub fn integrate_dz(&self, f: &BoundaryFunction) -> Complex64 {
        assert_eq!(f.len(), self.len(), "sample count mismatch");
        f.values
            .iter()
            .zip(&self.dz_weight)
            .map(|(v, &w)| v * w)
            .sum()
    }

    fn curve_winding(&self, curve: usize, p: Complex64) -> i32 {
        let mut sum = Complex64::default();
        for k in self.curve_range(curve) {
            sum += self.dz_weight[k] / (self.z[k] - p);
        }
        (sum / Complex64::new(0.0, TAU)).re.round() as i32
    }

    /// Area centroid of the region enclosed by one curve (orientation drops
    /// out of the ratio of the two contour integrals).
    pub fn curve_centroid(&self, curve: usize) -> Complex64 {
        let mut num = Complex64::default();
        let mut den = Complex64::default();
        for k in self.curve_range(curve) {
            num += self.z[k] * self.z[k].conj() * self.dz_weight[k];
            den += self.z[k].conj() * self.dz_weight[k];
        }
        num / den
    }

    /// Total winding number of the boundary around `p`: 1 inside the domain,
    /// 0 outside the closure or inside a hole.
    pub fn winding_number(&self, p: Complex64) -> Result<i32> {
        if self.on_boundary(p) {
            return Err(Error::OnBoundary { point: p });
        }
        let mut sum = Complex64::default();
        for k in 0..self.len() {
            sum += self.dz_weight[k] / (self.z[k] - p);
        }
        let w = (sum / Complex64::new(0.0, TAU)).re;
        let rounded = w.round();
        if (w - rounded).abs() > 0.25 {
            return Err(Error::OnBoundary { point: p });
        }
        Ok(rounded as i32)
    }

    /// Whether `p` lies in the domain, by winding number.
    pub fn contains(&self, p: Complex64) -> Result<bool> {
        Ok(self.winding_number(p)? == 1)
    }

    /// Same grid rebuilt with `factor` times as many nodes per curve.
    pub fn refined(&self, factor: usize) -> Result<BoundaryGrid> {
        BoundaryGrid::build_unchecked(&self.domain, self.nodes_per_curve * factor)
    }
}

fn cross(o: Complex64, a: Complex64, b: Complex64) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

/// Proper crossing test for two segments (shared endpoints and grazing
/// contacts are handled by the distance threshold instead).
fn segments_cross(a0: Complex64, a1: Complex64, b0: Complex64, b1: Complex64) -> bool {
    let d1 = cross(b0, b1, a0);
    let d2 = cross(b0, b1, a1);
    let d3 = cross(a0, a1, b0);
    let d4 = cross(a0, a1, b1);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Signed wavenumber for FFT bin `k` of an `n`-point transform. The Nyquist
/// bin is mapped to zero so differentiation stays skew-symmetric.
fn diff_wavenumber(k: usize, n: usize) -> f64 {
    if 2 * k < n {
        k as f64
    } else if 2 * k == n {
        0.0
    } else {
        k as f64 - n as f64
    }
}

fn fft_in_place(buf: &mut [FftComplex<f64>], inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(buf.len())
    } else {
        planner.plan_fft_forward(buf.len())
    };
    fft.process(buf);
}

/// Samples of `d/dt` of a smooth periodic sample vector, curve by curve, via
/// discrete Fourier differentiation. The derivative along the boundary in the
/// `z` variable is then `(d/dt) / z'(t)`.
pub fn spectral_derivative(samples: &BoundaryFunction, grid: &BoundaryGrid) -> BoundaryFunction {
    assert_eq!(samples.len(), grid.len(), "sample count mismatch");
    let mut out = Vec::with_capacity(samples.len());
    for c in 0..grid.curve_count() {
        let range = grid.curve_range(c);
        let n = range.len();
        let mut buf: Vec<FftComplex<f64>> = samples.values[range]
            .iter()
            .map(|v| FftComplex::new(v.re, v.im))
            .collect();
        fft_in_place(&mut buf, false);
        for (k, v) in buf.iter_mut().enumerate() {
            let om = TAU * diff_wavenumber(k, n);
            *v *= FftComplex::new(0.0, om / n as f64);
        }
        fft_in_place(&mut buf, true);
        out.extend(buf.into_iter().map(|v| Complex64::new(v.re, v.im)));
    }
    BoundaryFunction::new(out)
}

/// Trigonometric interpolation of per-curve samples onto a grid refined by
/// `factor`, via zero-padding in the frequency domain. Exact on band-limited
/// data and spectrally accurate on smooth data.
pub fn fourier_upsample(
    samples: &BoundaryFunction,
    grid: &BoundaryGrid,
    factor: usize,
) -> BoundaryFunction {
    assert_eq!(samples.len(), grid.len(), "sample count mismatch");
    assert!(factor >= 1);
    if factor == 1 {
        return samples.clone();
    }
    let mut out = Vec::with_capacity(samples.len() * factor);
    for c in 0..grid.curve_count() {
        let range = grid.curve_range(c);
        let n = range.len();
        let m = n * factor;
        let mut buf: Vec<FftComplex<f64>> = samples.values[range]
            .iter()
            .map(|v| FftComplex::new(v.re, v.im))
            .collect();
        fft_in_place(&mut buf, false);
        let mut fine = vec![FftComplex::new(0.0, 0.0); m];
        for k in 0..n {
            let scaled = buf[k] / n as f64;
            if 2 * k < n {
                fine[k] = scaled;
            } else if 2 * k == n {
                // Split the Nyquist energy between the two mirrored bins.
                fine[k] = scaled * 0.5;
                fine[m - k] = scaled * 0.5;
            } else {
                fine[m - (n - k)] = scaled;
            }
        }
        fft_in_place(&mut fine, true);
        out.extend(fine.into_iter().map(|v| Complex64::new(v.re, v.im)));
    }
    BoundaryFunction::new(out)
}

/// Unit-circle arc-length of a circle grid sanity value: `2πr`.
pub fn circle_circumference(radius: f64) -> f64 {
    TAU * radius
}

/// Inward unit normal at node `k` (the tangent rotated by +90°).
pub fn inward_normal(grid: &BoundaryGrid, k: usize) -> Complex64 {
    Complex64::new(0.0, 1.0) * grid.tangents()[k]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn unit_circle() -> Domain {
        Domain::simply_connected(Curve::circle(Complex64::default(), 1.0, 1)).unwrap()
    }

    fn annulus(r: f64) -> Domain {
        Domain::new(
            vec![
                Curve::circle(Complex64::default(), 1.0, 1),
                Curve::circle(Complex64::default(), r, -1),
            ],
            0,
        )
        .unwrap()
    }

    #[test]
    fn circle_eval_basics() {
        let c = Curve::circle(Complex64::default(), 1.0, 1);
        let (z, dz, _) = c.eval(0.0);
        assert_abs_diff_eq!(z.re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dz.re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dz.im, TAU, epsilon = 1e-12);

        let (z, dz, _) = c.eval(0.25);
        assert_abs_diff_eq!((z - Complex64::new(0.0, 1.0)).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            (dz - Complex64::new(-TAU, 0.0)).norm(),
            0.0,
            epsilon = 1e-12
        );

        let cw = Curve::circle(Complex64::default(), 0.5, -1);
        let (z, dz, _) = cw.eval(0.0);
        assert_abs_diff_eq!(z.re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!((dz - Complex64::new(0.0, -PI)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn grid_weights_circumference() {
        for r in [0.5, 1.0, 2.5] {
            let d =
                Domain::simply_connected(Curve::circle(Complex64::new(0.3, -0.2), r, 1)).unwrap();
            let g = BoundaryGrid::build(&d, 64).unwrap();
            let total: f64 = g.weights().iter().sum();
            assert_abs_diff_eq!(total, circle_circumference(r), epsilon = 1e-12);
        }
    }

    #[test]
    fn tangents_on_circles() {
        let g = BoundaryGrid::build(&unit_circle(), 32).unwrap();
        for k in 0..g.len() {
            let expect = Complex64::new(0.0, 1.0) * g.nodes()[k];
            assert_abs_diff_eq!((g.tangents()[k] - expect).norm(), 0.0, epsilon = 1e-13);
            assert_abs_diff_eq!(g.tangents()[k].norm(), 1.0, epsilon = 1e-15);
        }
        // Clockwise inner circle of an annulus: T = -i e^{-2πi t}.
        let g = BoundaryGrid::build(&annulus(0.5), 32).unwrap();
        for (j, k) in g.curve_range(1).enumerate() {
            let t = j as f64 / 32.0;
            let expect = -Complex64::new(0.0, 1.0) * Complex64::new(0.0, -TAU * t).exp();
            assert_abs_diff_eq!((g.tangents()[k] - expect).norm(), 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn quadrature_exactness_on_monomials() {
        let g = BoundaryGrid::build(&unit_circle(), 32).unwrap();
        for m in -15i32..=15 {
            let f = BoundaryFunction::from_fn(&g, |z| z.powi(m));
            let integral = g.integrate_ds(&f);
            if m == 0 {
                assert_abs_diff_eq!((integral - TAU).norm(), 0.0, epsilon = 1e-13);
            } else {
                assert_abs_diff_eq!(integral.norm(), 0.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn winding_and_contains() {
        let g = BoundaryGrid::build(&annulus(0.5), 64).unwrap();
        assert!(g.contains(Complex64::new(0.7, 0.0)).unwrap());
        assert!(!g.contains(Complex64::new(0.2, 0.0)).unwrap());
        assert!(!g.contains(Complex64::new(2.0, 0.0)).unwrap());
        assert_eq!(g.winding_number(Complex64::new(0.2, 0.0)).unwrap(), 0);
        assert_eq!(g.winding_number(Complex64::new(-0.7, 0.1)).unwrap(), 1);
        assert!(matches!(
            g.winding_number(Complex64::new(1.0, 0.0)),
            Err(Error::OnBoundary { .. })
        ));
    }

    #[test]
    fn orientation_is_enforced() {
        // Outer curve clockwise: rejected.
        let d = Domain::simply_connected(Curve::circle(Complex64::default(), 1.0, -1)).unwrap();
        assert!(BoundaryGrid::build(&d, 32).is_err());
        // Inner curve counterclockwise: rejected.
        let d = Domain::new(
            vec![
                Curve::circle(Complex64::default(), 1.0, 1),
                Curve::circle(Complex64::default(), 0.5, 1),
            ],
            0,
        )
        .unwrap();
        assert!(BoundaryGrid::build(&d, 32).is_err());
    }

    #[test]
    fn intersecting_curves_rejected() {
        let d = Domain::new(
            vec![
                Curve::circle(Complex64::default(), 1.0, 1),
                Curve::circle(Complex64::new(0.8, 0.0), 0.5, -1),
            ],
            0,
        )
        .unwrap();
        let err = BoundaryGrid::build(&d, 64).unwrap_err();
        assert!(err.to_string().contains("intersect"), "{err}");
    }

    #[test]
    fn degenerate_curve_named_in_error() {
        // z(t) = e^{2πit} + e^{4πit}/2 has z'(t) = 0 at t = 1/2.
        let bad = Curve::trig(vec![
            (1, Complex64::new(1.0, 0.0)),
            (2, Complex64::new(0.5, 0.0)),
        ]);
        let d = Domain::new(vec![Curve::circle(Complex64::default(), 3.0, 1), bad], 0).unwrap();
        match BoundaryGrid::build(&d, 64) {
            Err(Error::InvalidCurve { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected InvalidCurve, got {other:?}"),
        }
    }

    #[test]
    fn grid_size_preconditions() {
        assert!(BoundaryGrid::build(&unit_circle(), 8).is_err());
        assert!(BoundaryGrid::build(&unit_circle(), 33).is_err());
        // Minimal valid resolution: nodes land on the 16th roots of unity.
        let g = BoundaryGrid::build(&unit_circle(), 16).unwrap();
        assert_eq!(g.len(), 16);
        for w in g.weights() {
            assert_abs_diff_eq!(*w, TAU / 16.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn spectral_derivative_band_limited() {
        let g = BoundaryGrid::build(&unit_circle(), 16).unwrap();
        let n = g.len();
        let sin_samples = BoundaryFunction::new(
            (0..n)
                .map(|k| Complex64::new((TAU * k as f64 / n as f64).sin(), 0.0))
                .collect(),
        );
        let d = spectral_derivative(&sin_samples, &g);
        for k in 0..n {
            let t = k as f64 / n as f64;
            assert_abs_diff_eq!(d.values[k].re, TAU * (TAU * t).cos(), epsilon = 1e-12);
            assert_abs_diff_eq!(d.values[k].im, 0.0, epsilon = 1e-12);
        }

        let constant = BoundaryFunction::new(vec![Complex64::new(3.0, -1.0); n]);
        let d = spectral_derivative(&constant, &g);
        for v in &d.values {
            assert_abs_diff_eq!(v.norm(), 0.0, epsilon = 1e-13);
        }

        let wave = BoundaryFunction::new(
            (0..n)
                .map(|k| Complex64::new(0.0, TAU * k as f64 / n as f64).exp())
                .collect(),
        );
        let d = spectral_derivative(&wave, &g);
        for (k, v) in d.values.iter().enumerate() {
            let t = k as f64 / n as f64;
            let expect = Complex64::new(0.0, TAU) * Complex64::new(0.0, TAU * t).exp();
            assert_abs_diff_eq!((v - expect).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn upsample_is_identity_on_band_limited() {
        let g = BoundaryGrid::build(&unit_circle(), 32).unwrap();
        let f =
            BoundaryFunction::from_fn(&g, |z| z.powi(3) + Complex64::new(0.5, 0.0) * z.powi(-2));
        let fine_grid = g.refined(4).unwrap();
        let fine = fourier_upsample(&f, &g, 4);
        assert_eq!(fine.len(), fine_grid.len());
        for (k, &z) in fine_grid.nodes().iter().enumerate() {
            let expect = z.powi(3) + Complex64::new(0.5, 0.0) * z.powi(-2);
            assert_abs_diff_eq!((fine.values[k] - expect).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn centroid_of_circles() {
        let g = BoundaryGrid::build(&annulus(0.5), 32).unwrap();
        assert_abs_diff_eq!(g.curve_centroid(1).norm(), 0.0, epsilon = 1e-12);
        let d = Domain::simply_connected(Curve::circle(Complex64::new(0.4, -0.3), 0.8, 1)).unwrap();
        let g = BoundaryGrid::build(&d, 32).unwrap();
        assert_abs_diff_eq!(
            (g.curve_centroid(0) - Complex64::new(0.4, -0.3)).norm(),
            0.0,
            epsilon = 1e-12
        );
    }
}
