//! Domain-spec files and cached assembly artifacts, both versioned JSON.
//!
//! A domain spec describes the boundary curves:
//!
//! ```json
//! { "curves": [ {"type": "circle", "center": [0.0, 0.0], "radius": 1.0,
//!                "orientation": 1},
//!               {"type": "trig", "coeffs": [[1, 1.0, 0.0], [-1, 0.1, 0.0]]} ],
//!   "outer": 0 }
//! ```
//!
//! An artifact stores the primary outputs of an assembly (boundary solves,
//! zeros, coefficient matrices); everything derived is recomputed on load by
//! the same deterministic code paths, so a reloaded artifact evaluates
//! bit-identically.

use crate::bergman::BergmanData;
use crate::error::{Error, Result};
use crate::geometry::{BoundaryFunction, Curve, Domain};
use crate::harmonic::PoissonData;
use crate::szego::{BasePoint, SzegoData};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

pub const ARTIFACT_SCHEMA: &str = "szegokit-artifact/1";

/// Serialized curve description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum CurveSpec {
    Circle {
        center: [f64; 2],
        radius: f64,
        orientation: i8,
    },
    Trig {
        coeffs: Vec<(i32, f64, f64)>,
    },
}

/// Serialized domain description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainSpec {
    pub curves: Vec<CurveSpec>,
    pub outer: usize,
}

impl DomainSpec {
    pub fn from_domain(domain: &Domain) -> DomainSpec {
        DomainSpec {
            curves: domain
                .curves()
                .iter()
                .map(|c| match c {
                    Curve::Circle {
                        center,
                        radius,
                        orientation,
                    } => CurveSpec::Circle {
                        center: [center.re, center.im],
                        radius: *radius,
                        orientation: *orientation,
                    },
                    Curve::Trig { coeffs } => CurveSpec::Trig {
                        coeffs: coeffs.iter().map(|&(m, c)| (m, c.re, c.im)).collect(),
                    },
                })
                .collect(),
            outer: domain.outer_index(),
        }
    }

    pub fn to_domain(&self) -> Result<Domain> {
        let curves = self
            .curves
            .iter()
            .enumerate()
            .map(|(i, c)| match c {
                CurveSpec::Circle {
                    center,
                    radius,
                    orientation,
                } => {
                    if *radius <= 0.0 {
                        return Err(Error::InvalidCurve {
                            index: i,
                            reason: format!("radius {radius} must be positive"),
                        });
                    }
                    if orientation.abs() != 1 {
                        return Err(Error::InvalidCurve {
                            index: i,
                            reason: format!("orientation {orientation} must be ±1"),
                        });
                    }
                    Ok(Curve::circle(
                        Complex64::new(center[0], center[1]),
                        *radius,
                        *orientation,
                    ))
                }
                CurveSpec::Trig { coeffs } => {
                    if coeffs.is_empty() {
                        return Err(Error::InvalidCurve {
                            index: i,
                            reason: "trigonometric curve needs coefficients".into(),
                        });
                    }
                    Ok(Curve::trig(
                        coeffs
                            .iter()
                            .map(|&(m, re, im)| (m, Complex64::new(re, im)))
                            .collect(),
                    ))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Domain::new(curves, self.outer)
    }

    pub fn from_json(text: &str) -> Result<DomainSpec> {
        serde_json::from_str(text).map_err(|e| Error::Artifact(format!("domain spec: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("domain spec serializes")
    }

    pub fn load(path: &Path) -> Result<DomainSpec> {
        DomainSpec::from_json(&std::fs::read_to_string(path)?)
    }
}

fn c2a(c: Complex64) -> [f64; 2] {
    [c.re, c.im]
}

fn a2c(a: [f64; 2]) -> Complex64 {
    Complex64::new(a[0], a[1])
}

fn vec_c2a(v: &[Complex64]) -> Vec<[f64; 2]> {
    v.iter().copied().map(c2a).collect()
}

fn vec_a2c(v: &[[f64; 2]]) -> Vec<Complex64> {
    v.iter().copied().map(a2c).collect()
}

fn mat_c2a(m: &DMatrix<Complex64>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| c2a(m[(i, j)])).collect())
        .collect()
}

fn mat_a2c(rows: &[Vec<[f64; 2]>]) -> Result<DMatrix<Complex64>> {
    let n = rows.len();
    for row in rows {
        if row.len() != n {
            return Err(Error::Artifact("coefficient matrix is not square".into()));
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| a2c(rows[i][j])))
}

/// The serialized assembly artifact.
#[derive(Debug, Serialize, Deserialize)]
pub struct Artifact {
    pub schema: String,
    pub domain: DomainSpec,
    pub grid_n: usize,
    pub base: [f64; 2],
    pub zeros: Vec<[f64; 2]>,
    pub szego_boundary: Vec<[f64; 2]>,
    pub szego_boundary_zeros: Vec<Vec<[f64; 2]>>,
    pub c0: f64,
    pub s_at_base: f64,
    pub coeff: Vec<Vec<[f64; 2]>>,
    pub holes: Vec<[f64; 2]>,
    pub log_moments: Vec<Vec<[f64; 2]>>,
    pub lambda: Vec<Vec<[f64; 2]>>,
    pub lambda_companion: Vec<Vec<[f64; 2]>>,
    pub hermitian_defect: f64,
    pub correction_diag: Vec<[f64; 2]>,
    pub periods: Vec<Vec<[f64; 2]>>,
    pub periods_inv: Vec<Vec<[f64; 2]>>,
    pub log_coeffs: Vec<Vec<[f64; 2]>>,
}

/// The full in-memory kernel package: Szegő, Bergman and harmonic data over
/// one grid.
pub struct KernelSuite {
    pub szego: Arc<SzegoData>,
    pub bergman: Arc<BergmanData>,
    pub poisson: Arc<PoissonData>,
}

impl KernelSuite {
    pub fn assemble(domain: &Domain, n: usize, base: BasePoint) -> Result<KernelSuite> {
        let szego = Arc::new(SzegoData::assemble(domain, n, base)?);
        let bergman = Arc::new(BergmanData::assemble(Arc::clone(&szego))?);
        let poisson = Arc::new(PoissonData::assemble(Arc::clone(&szego))?);
        Ok(KernelSuite {
            szego,
            bergman,
            poisson,
        })
    }

    pub fn to_artifact(&self) -> Artifact {
        let s = &self.szego;
        let b = &self.bergman;
        let p = &self.poisson;
        Artifact {
            schema: ARTIFACT_SCHEMA.to_string(),
            domain: DomainSpec::from_domain(s.domain()),
            grid_n: s.grid().nodes_per_curve(),
            base: c2a(s.base()),
            zeros: vec_c2a(s.zeros()),
            szego_boundary: vec_c2a(&s.szego_boundary().values),
            szego_boundary_zeros: (0..s.zeros().len())
                .map(|i| vec_c2a(&s.szego_boundary_at_zero(i).values))
                .collect(),
            c0: s.c0(),
            s_at_base: s.s_at_base(),
            coeff: mat_c2a(s.coefficients()),
            holes: vec_c2a(b.holes()),
            log_moments: mat_c2a(b.log_moments()),
            lambda: mat_c2a(b.lambda()),
            lambda_companion: mat_c2a(b.lambda_companion()),
            hermitian_defect: b.hermitian_defect(),
            correction_diag: vec_c2a(b.correction_diag()),
            periods: mat_c2a(p.periods()),
            periods_inv: mat_c2a(p.periods_inv()),
            log_coeffs: mat_c2a(p.log_coefficients()),
        }
    }

    pub fn from_artifact(artifact: &Artifact) -> Result<KernelSuite> {
        if artifact.schema != ARTIFACT_SCHEMA {
            return Err(Error::Artifact(format!(
                "unsupported schema {:?}, expected {ARTIFACT_SCHEMA:?}",
                artifact.schema
            )));
        }
        let domain = artifact.domain.to_domain()?;
        let szego = Arc::new(SzegoData::from_parts(
            &domain,
            artifact.grid_n,
            a2c(artifact.base),
            vec_a2c(&artifact.zeros),
            BoundaryFunction::new(vec_a2c(&artifact.szego_boundary)),
            artifact
                .szego_boundary_zeros
                .iter()
                .map(|v| BoundaryFunction::new(vec_a2c(v)))
                .collect(),
            artifact.c0,
            mat_a2c(&artifact.coeff)?,
            artifact.s_at_base,
        )?);
        let bergman = Arc::new(BergmanData::from_parts(
            Arc::clone(&szego),
            vec_a2c(&artifact.holes),
            mat_a2c(&artifact.log_moments)?,
            mat_a2c(&artifact.lambda)?,
            mat_a2c(&artifact.lambda_companion)?,
            artifact.hermitian_defect,
            vec_a2c(&artifact.correction_diag),
        )?);
        let poisson = Arc::new(PoissonData::from_parts(
            Arc::clone(&szego),
            vec_a2c(&artifact.holes),
            mat_a2c(&artifact.log_coeffs)?,
            mat_a2c(&artifact.periods)?,
            mat_a2c(&artifact.periods_inv)?,
        )?);
        Ok(KernelSuite {
            szego,
            bergman,
            poisson,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_artifact()).expect("artifact serializes")
    }

    pub fn from_json(text: &str) -> Result<KernelSuite> {
        let artifact: Artifact =
            serde_json::from_str(text).map_err(|e| Error::Artifact(format!("artifact: {e}")))?;
        KernelSuite::from_artifact(&artifact)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<KernelSuite> {
        KernelSuite::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;

    #[test]
    fn domain_spec_round_trip() {
        for fixture in reference::fixtures() {
            let spec = DomainSpec::from_domain(&fixture.domain);
            let text = spec.to_json();
            let back = DomainSpec::from_json(&text).unwrap().to_domain().unwrap();
            assert_eq!(back, fixture.domain, "fixture {}", fixture.name);
        }
    }

    #[test]
    fn domain_spec_json_shape() {
        let text = r#"{
            "curves": [
                {"type": "circle", "center": [0.0, 0.0], "radius": 1.0, "orientation": 1},
                {"type": "trig", "coeffs": [[1, 0.25, 0.0], [0, -0.1, 0.05]]}
            ],
            "outer": 0
        }"#;
        let spec = DomainSpec::from_json(text).unwrap();
        let domain = spec.to_domain().unwrap();
        assert_eq!(domain.connectivity(), 2);
        assert_eq!(domain.outer_index(), 0);
    }

    #[test]
    fn domain_spec_validation_errors_carry_curve_index() {
        let text = r#"{"curves": [{"type": "circle", "center": [0,0], "radius": -1.0,
                       "orientation": 1}], "outer": 0}"#;
        let err = DomainSpec::from_json(text)
            .unwrap()
            .to_domain()
            .unwrap_err();
        match err {
            Error::InvalidCurve { index, .. } => assert_eq!(index, 0),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn artifact_round_trip_is_bit_identical() {
        let suite = KernelSuite::assemble(
            &reference::annulus_domain(0.5),
            64,
            BasePoint::Fixed(Complex64::new(0.7, 0.0)),
        )
        .unwrap();
        let text = suite.to_json();
        let reloaded = KernelSuite::from_json(&text).unwrap();

        // Identical evaluations after a reload, bit for bit.
        let z = Complex64::new(0.72, 0.11);
        let w = Complex64::new(-0.2, 0.61);
        let s1 = suite.szego.szego_eval(z, w).unwrap().value;
        let s2 = reloaded.szego.szego_eval(z, w).unwrap().value;
        assert_eq!(s1, s2);
        let k1 = suite.bergman.bergman_eval(z, w).unwrap().value;
        let k2 = reloaded.bergman.bergman_eval(z, w).unwrap().value;
        assert_eq!(k1, k2);
        let o1 = suite.poisson.omega_all(z).unwrap()[0].value;
        let o2 = reloaded.poisson.omega_all(z).unwrap()[0].value;
        assert_eq!(o1, o2);

        // And the re-serialized artifact is byte-identical.
        assert_eq!(text, reloaded.to_json());
    }

    #[test]
    fn artifact_rejects_unknown_schema() {
        let suite = KernelSuite::assemble(
            &reference::disc_domain(),
            32,
            BasePoint::Fixed(Complex64::new(0.3, 0.0)),
        )
        .unwrap();
        let mut artifact = suite.to_artifact();
        artifact.schema = "something-else/9".into();
        let text = serde_json::to_string(&artifact).unwrap();
        assert!(matches!(
            KernelSuite::from_json(&text),
            Err(Error::Artifact(_))
        ));
    }
}
