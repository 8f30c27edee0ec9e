//! Analytic oracles and canonical test domains.
//!
//! Everything in this module is computed by an independent route (closed
//! forms on discs, orthonormal Laurent-monomial series on the annulus) and
//! never calls into the solver machinery, so it can serve as ground truth
//! for the rest of the crate.

use crate::error::{Error, Result};
use crate::geometry::{Curve, Domain};
use num_complex::Complex64;
use std::f64::consts::PI;

const MAX_SERIES_TERMS: usize = 100_000;

/// Szegő kernel of the unit disc: `1/(2π(1−z·conj w))`.
pub fn disc_szego(z: Complex64, w: Complex64) -> Complex64 {
    circle_szego(Complex64::default(), 1.0, z, w)
}

/// Bergman kernel of the unit disc: `1/(π(1−z·conj w)²)`.
pub fn disc_bergman(z: Complex64, w: Complex64) -> Complex64 {
    circle_bergman(Complex64::default(), 1.0, z, w)
}

/// Garabedian kernel of the unit disc: `1/(2π(z−w))`.
pub fn disc_garabedian(z: Complex64, w: Complex64) -> Complex64 {
    1.0 / (2.0 * PI * (z - w))
}

/// Poisson kernel of the unit disc for interior `z` and boundary `w`:
/// `(1−|z|²)/(2π|w−z|²)`.
pub fn disc_poisson(z: Complex64, w: Complex64) -> f64 {
    circle_poisson(Complex64::default(), 1.0, z, w)
}

/// Riemann map of the unit disc with `f(a) = 0`, `f'(a) > 0`: the Möbius
/// factor `(z−a)/(1−conj(a)z)`.
pub fn disc_riemann_map(a: Complex64, z: Complex64) -> Complex64 {
    (z - a) / (1.0 - a.conj() * z)
}

/// Szegő kernel of a round disc of radius `r` centered at `c`.
pub fn circle_szego(c: Complex64, r: f64, z: Complex64, w: Complex64) -> Complex64 {
    r / (2.0 * PI * (r * r - (z - c) * (w - c).conj()))
}

/// Bergman kernel of a round disc of radius `r` centered at `c`.
pub fn circle_bergman(c: Complex64, r: f64, z: Complex64, w: Complex64) -> Complex64 {
    let d = r * r - (z - c) * (w - c).conj();
    r * r / (PI * d * d)
}

/// Poisson kernel (arc-length normalized) of a round disc.
pub fn circle_poisson(c: Complex64, r: f64, z: Complex64, w: Complex64) -> f64 {
    let zc = z - c;
    let wc = w - c;
    (r * r - zc.norm_sqr()) / (2.0 * PI * r * (wc - zc).norm_sqr())
}

fn check_annulus_args(r: f64, z: Complex64, w: Complex64) -> Result<Complex64> {
    if !(0.0 < r && r < 1.0) {
        return Err(Error::Geometry(format!("annulus radius {r} not in (0,1)")));
    }
    // The kernels extend to the closed annulus; allow boundary points up to
    // grid roundoff.
    for p in [z, w] {
        let m = p.norm();
        if m < r * (1.0 - 1e-9) || m > 1.0 + 1e-9 {
            return Err(Error::OutsideDomain { point: p });
        }
    }
    let u = z * w.conj();
    // The Laurent series only converges for r² < |z·conj w| < 1.
    if u.norm() <= r * r || u.norm() >= 1.0 {
        return Err(Error::NearSingular(format!(
            "annulus series does not converge at |z·conj w| = {}",
            u.norm()
        )));
    }
    Ok(u)
}

/// Szegő kernel of the annulus `r < |z| < 1` by the orthonormal
/// Laurent-monomial series `(1/2π) Σ_m (z·conj w)^m / (1 + r^{2m+1})`,
/// truncated once the geometric tail bounds drop below `tol`.
pub fn annulus_szego(r: f64, z: Complex64, w: Complex64, tol: f64) -> Result<Complex64> {
    let u = check_annulus_args(r, z, w)?;
    let au = u.norm();
    let mut sum = Complex64::new(1.0 / (1.0 + r), 0.0); // m = 0

    // m ≥ 1: |term| ≤ |u|^m, tail ≤ |u|^{M+1}/(1−|u|).
    let mut pow = Complex64::new(1.0, 0.0);
    let mut rp = r; // r^{2m+1} carried incrementally
    for m in 1..MAX_SERIES_TERMS {
        pow *= u;
        rp *= r * r;
        sum += pow / (1.0 + rp);
        if au.powi(m as i32 + 1) / (1.0 - au) < tol {
            break;
        }
    }

    // m ≤ −1: |term| ≤ (r²/|u|)^μ / r, tail ≤ (r²/|u|)^{M+1}/(r(1−r²/|u|)).
    let q = r * r / au;
    let mut ipow = Complex64::new(1.0, 0.0);
    for mu in 1..MAX_SERIES_TERMS {
        ipow /= u;
        let rpow = r.powi(2 * (mu as i32) - 1); // r^{-(2m+1)} for m = -mu
        sum += ipow * rpow / (rpow + 1.0);
        if q.powi(mu as i32 + 1) / (r * (1.0 - q)) < tol {
            break;
        }
    }

    Ok(sum / (2.0 * PI))
}

/// Squared Bergman-space norm of the monomial `z^m` on the annulus
/// `r < |z| < 1`.
fn annulus_monomial_norm_sq(r: f64, m: i32) -> f64 {
    if m == -1 {
        -2.0 * PI * r.ln()
    } else {
        let p = 2 * m + 2;
        2.0 * PI * (1.0 - r.powi(p)) / f64::from(p)
    }
}

/// Bergman kernel of the annulus `r < |z| < 1` by the orthonormal
/// Laurent-monomial series `Σ_m (z·conj w)^m / ‖z^m‖²`.
pub fn annulus_bergman(r: f64, z: Complex64, w: Complex64, tol: f64) -> Result<Complex64> {
    let u = check_annulus_args(r, z, w)?;
    let au = u.norm();
    let mut sum = Complex64::new(1.0 / annulus_monomial_norm_sq(r, 0), 0.0);

    // m ≥ 1: |term| ≤ (2m+2)|u|^m/(2π(1−r²));
    // tail ≤ 2(M+2)|u|^{M+1}/(2π(1−r²)(1−|u|)²).
    let mut pow = Complex64::new(1.0, 0.0);
    for m in 1..MAX_SERIES_TERMS {
        pow *= u;
        sum += pow / annulus_monomial_norm_sq(r, m as i32);
        let bound = 2.0 * (m as f64 + 2.0) * au.powi(m as i32 + 1)
            / (2.0 * PI * (1.0 - r * r) * (1.0 - au).powi(2));
        if bound < tol {
            break;
        }
    }

    // m ≤ −1 (μ = −m): ‖z^{-μ}‖² = 2π(r^{2−2μ}−1)/(2μ−2) for μ ≥ 2, so
    // |term| ≤ (2μ−2)(r²/|u|)^μ/(2π r²(1−r²)); bound the tail the same way.
    let q = r * r / au;
    let mut ipow = Complex64::new(1.0, 0.0);
    for mu in 1..MAX_SERIES_TERMS {
        ipow /= u;
        sum += ipow / annulus_monomial_norm_sq(r, -(mu as i32));
        let bound = 2.0 * (mu as f64 + 2.0) * q.powi(mu as i32 + 1)
            / (2.0 * PI * r * r * (1.0 - r * r) * (1.0 - q).powi(2));
        if bound < tol {
            break;
        }
    }

    Ok(sum)
}

/// Harmonic measure of the inner circle of the annulus `r < |z| < 1`:
/// `ω(z) = ln|z| / ln r`.
pub fn annulus_harmonic_measure(r: f64, z: Complex64) -> f64 {
    z.norm().ln() / r.ln()
}

/// The zero of `S(·,a)` on the annulus `r < |z| < 1` located by a 1-D root
/// search of the series oracle along the ray through `−1/conj(a)`.
///
/// (The series terms pair up and cancel exactly at `z·conj(a) = −r`, so the
/// search has a closed-form answer to converge to; the bisection is kept as
/// an independent check of that cancellation.)
pub fn annulus_szego_zero(r: f64, a: Complex64, tol: f64) -> Result<Complex64> {
    let dir = -a.conj() / a.norm(); // unit vector through the expected zero
    let s_at = |rho: f64| -> Result<f64> {
        let v = annulus_szego(r, dir * rho, a, 1e-14)?;
        // S(ρ·dir, a) is real along this ray up to roundoff; use the real
        // part for the sign test.
        Ok((v * 2.0 * PI).re)
    };
    // Bracket by scanning inward from the outer boundary.
    let lo_limit = (r * r / a.norm()) * 1.02;
    let mut rho_prev = 0.985;
    let mut f_prev = s_at(rho_prev)?;
    let mut bracket = None;
    let mut rho = rho_prev - 0.005;
    while rho > lo_limit {
        let f = s_at(rho)?;
        if f_prev.signum() != f.signum() {
            bracket = Some((rho, rho_prev));
            break;
        }
        rho_prev = rho;
        f_prev = f;
        rho -= 0.005;
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| {
        Error::ZeroLocation("no sign change of the annulus series along the search ray".into())
    })?;
    let mut f_lo = s_at(lo)?;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = s_at(mid)?;
        if f_lo.signum() == f_mid.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(dir * 0.5 * (lo + hi))
}

/// A canonical domain with a recommended resolution.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub domain: Domain,
    pub recommended_n: usize,
    pub has_oracle: bool,
}

/// The unit disc.
pub fn disc_domain() -> Domain {
    Domain::simply_connected(Curve::circle(Complex64::default(), 1.0, 1)).unwrap()
}

/// A round disc away from the origin, used to stress base-point selection.
pub fn offset_disc_domain() -> Domain {
    Domain::simply_connected(Curve::circle(Complex64::new(0.3, 0.2), 0.9, 1)).unwrap()
}

/// The annulus `r < |z| < 1`.
pub fn annulus_domain(r: f64) -> Domain {
    Domain::new(
        vec![
            Curve::circle(Complex64::default(), 1.0, 1),
            Curve::circle(Complex64::default(), r, -1),
        ],
        0,
    )
    .unwrap()
}

/// Unit disc with two circular holes of radius 0.15 centered at ±0.45.
pub fn three_connected_domain() -> Domain {
    Domain::new(
        vec![
            Curve::circle(Complex64::default(), 1.0, 1),
            Curve::circle(Complex64::new(-0.45, 0.0), 0.15, -1),
            Curve::circle(Complex64::new(0.45, 0.0), 0.15, -1),
        ],
        0,
    )
    .unwrap()
}

/// A two-connected domain with a trigonometric-polynomial outer curve
/// (non-constant parameterization speed) and one circular hole.
pub fn trig_two_connected_domain() -> Domain {
    let outer = Curve::trig(vec![
        (0, Complex64::new(0.05, 0.0)),
        (1, Complex64::new(1.0, 0.0)),
        (-1, Complex64::new(0.12, 0.03)),
        (2, Complex64::new(0.06, -0.02)),
    ]);
    Domain::new(
        vec![outer, Curve::circle(Complex64::new(-0.1, 0.05), 0.25, -1)],
        0,
    )
    .unwrap()
}

/// The canonical fixtures used by the integration tests and the CLI.
pub fn fixtures() -> Vec<Fixture> {
    vec![
        Fixture {
            name: "disc",
            domain: disc_domain(),
            recommended_n: 128,
            has_oracle: true,
        },
        Fixture {
            name: "offset-disc",
            domain: offset_disc_domain(),
            recommended_n: 128,
            has_oracle: true,
        },
        Fixture {
            name: "annulus-0.5",
            domain: annulus_domain(0.5),
            recommended_n: 256,
            has_oracle: true,
        },
        Fixture {
            name: "3conn",
            domain: three_connected_domain(),
            recommended_n: 256,
            has_oracle: false,
        },
        Fixture {
            name: "trig2",
            domain: trig_two_connected_domain(),
            recommended_n: 256,
            has_oracle: false,
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryGrid;
    use approx::assert_abs_diff_eq;

    #[test]
    fn disc_values() {
        let zero = Complex64::default();
        assert_abs_diff_eq!(disc_szego(zero, zero).re, 1.0 / (2.0 * PI), epsilon = 1e-15);
        assert_abs_diff_eq!(disc_bergman(zero, zero).re, 1.0 / PI, epsilon = 1e-15);
        for k in 0..4 {
            let w = Complex64::from_polar(1.0, 1.7 * k as f64);
            assert_abs_diff_eq!(disc_poisson(zero, w), 1.0 / (2.0 * PI), epsilon = 1e-15);
        }
    }

    #[test]
    fn annulus_series_hermitian_and_positive() {
        let z = Complex64::new(0.62, 0.31);
        let w = Complex64::new(-0.55, 0.48);
        let s_zw = annulus_szego(0.5, z, w, 1e-12).unwrap();
        let s_wz = annulus_szego(0.5, w, z, 1e-12).unwrap();
        assert_abs_diff_eq!((s_zw - s_wz.conj()).norm(), 0.0, epsilon = 1e-12);

        let k = annulus_bergman(
            0.5,
            Complex64::new(0.7, 0.0),
            Complex64::new(0.7, 0.0),
            1e-12,
        )
        .unwrap();
        assert!(k.re > 0.0);
        assert_abs_diff_eq!(k.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn annulus_series_tolerance_converges() {
        let z = Complex64::new(0.8, 0.1);
        let w = Complex64::new(0.6, -0.2);
        for f in [annulus_szego, annulus_bergman] {
            let coarse = f(0.5, z, w, 1e-6).unwrap();
            let fine = f(0.5, z, w, 5e-7).unwrap();
            assert!((coarse - fine).norm() < 1e-6);
        }
    }

    #[test]
    fn annulus_approaches_disc_for_small_hole() {
        // The slowest-decaying Szegő correction is the m = −1 term, of size
        // ~ r·|u|⁻¹/(2π), so the hole must be well below the target
        // closeness. (No such statement holds for the Bergman series, whose
        // m = −1 term only decays like 1/ln(1/r).)
        let z = Complex64::new(0.5, 0.0);
        let s = annulus_szego(1e-4, z, z, 1e-12).unwrap();
        assert!((s - disc_szego(z, z)).norm() < 1e-4);
        let k = annulus_bergman(1e-4, z, z, 1e-12).unwrap();
        let log_term = 1.0 / (z.norm_sqr() * (-2.0 * PI * (1e-4f64).ln()));
        assert!((k - disc_bergman(z, z)).norm() < 1.05 * log_term);
    }

    #[test]
    fn annulus_domain_error() {
        // |z·conj w| < r²: outside the convergence region.
        let r: f64 = 0.5;
        let z = Complex64::new(0.51, 0.0);
        let w = Complex64::new(-0.0, 0.51); // |z w| = 0.26 > 0.25, fine
        assert!(annulus_szego(r, z, w, 1e-10).is_ok());
        let w_far = Complex64::new(0.0, 0.4);
        assert!(annulus_szego(r, z, w_far, 1e-10).is_err());
        assert!(annulus_szego(r, Complex64::new(1.2, 0.0), w, 1e-10).is_err());
    }

    #[test]
    fn annulus_zero_matches_pair_cancellation() {
        // Series terms cancel in pairs at z·conj(a) = −r.
        let r = 0.5;
        let a = Complex64::new(0.7, 0.0);
        let z = annulus_szego_zero(r, a, 1e-12).unwrap();
        assert_abs_diff_eq!(
            (z - Complex64::new(-r / 0.7, 0.0)).norm(),
            0.0,
            epsilon = 1e-9
        );
        let s = annulus_szego(r, z, a, 1e-13).unwrap();
        assert!(s.norm() < 1e-12);
    }

    #[test]
    fn fixtures_build() {
        for f in fixtures() {
            let grid = BoundaryGrid::build(&f.domain, f.recommended_n);
            assert!(grid.is_ok(), "fixture {} failed: {:?}", f.name, grid.err());
        }
        let names: Vec<_> = fixtures().iter().map(|f| f.name).collect();
        assert!(names.contains(&"annulus-0.5"));
        assert!(names.contains(&"3conn"));
        assert!(names.contains(&"trig2"));
        let annulus = fixtures()
            .into_iter()
            .find(|f| f.name == "annulus-0.5")
            .unwrap();
        assert_eq!(annulus.domain.connectivity(), 2);
    }

    #[test]
    fn trig2_speed_is_not_constant() {
        let f = fixtures().into_iter().find(|f| f.name == "trig2").unwrap();
        let grid = BoundaryGrid::build(&f.domain, f.recommended_n).unwrap();
        let speeds: Vec<f64> = grid
            .curve_range(0)
            .map(|k| grid.velocities()[k].norm())
            .collect();
        let min = speeds.iter().cloned().fold(f64::MAX, f64::min);
        let max = speeds.iter().cloned().fold(f64::MIN, f64::max);
        assert!(
            max - min > 0.1,
            "outer curve speed should vary, got [{min}, {max}]"
        );
    }
}
