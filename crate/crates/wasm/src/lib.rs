//! Interactive browser demo built on the kernel library.
//!
//! One `Demo` holds an assembled kernel package for a parameterized family
//! of domains and exposes three explorable operations: the Ahlfors map as a
//! domain-colored field, harmonic-measure fields, and Poisson-kernel
//! profiles along the boundary for a chosen interior point.

use num_complex::Complex64;
use szegokit::artifact::KernelSuite;
use szegokit::geometry::{Curve, Domain};
use szegokit::szego::BasePoint;
use wasm_bindgen::prelude::*;

fn build_domain(kind: &str, param: f64) -> Result<Domain, String> {
    let p = param.clamp(0.0, 1.0);
    let domain = match kind {
        "disc" => Domain::simply_connected(Curve::circle(Complex64::default(), 1.0, 1)),
        "annulus" => {
            let r = 0.15 + 0.6 * p;
            Domain::new(
                vec![
                    Curve::circle(Complex64::default(), 1.0, 1),
                    Curve::circle(Complex64::default(), r, -1),
                ],
                0,
            )
        }
        "threeconn" => {
            let r = 0.08 + 0.2 * p;
            Domain::new(
                vec![
                    Curve::circle(Complex64::default(), 1.0, 1),
                    Curve::circle(Complex64::new(-0.45, 0.0), r, -1),
                    Curve::circle(Complex64::new(0.45, 0.0), r, -1),
                ],
                0,
            )
        }
        "blob" => {
            let eps = 0.05 + 0.15 * p;
            let outer = Curve::trig(vec![
                (1, Complex64::new(1.0, 0.0)),
                (-1, Complex64::new(eps, 0.3 * eps)),
                (2, Complex64::new(0.5 * eps, -0.2 * eps)),
            ]);
            Domain::new(
                vec![outer, Curve::circle(Complex64::new(-0.1, 0.05), 0.25, -1)],
                0,
            )
        }
        other => return Err(format!("unknown domain kind {other:?}")),
    };
    domain.map_err(|e| e.to_string())
}

/// An assembled domain ready for interactive evaluation.
#[wasm_bindgen]
pub struct Demo {
    suite: KernelSuite,
    bbox: (f64, f64, f64, f64),
}

impl Demo {
    fn build(kind: &str, param: f64, n: usize) -> Result<Demo, String> {
        let domain = build_domain(kind, param)?;
        let n = n.clamp(32, 256) & !1;
        let suite =
            KernelSuite::assemble(&domain, n, BasePoint::Auto).map_err(|e| e.to_string())?;
        let grid = suite.szego.grid();
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for z in grid.nodes() {
            x0 = x0.min(z.re);
            x1 = x1.max(z.re);
            y0 = y0.min(z.im);
            y1 = y1.max(z.im);
        }
        let margin = 0.04 * (x1 - x0).max(y1 - y0);
        Ok(Demo {
            suite,
            bbox: (x0 - margin, x1 + margin, y0 - margin, y1 + margin),
        })
    }

    fn pixel_to_point(&self, i: usize, j: usize, res: usize) -> Complex64 {
        let (x0, x1, y0, y1) = self.bbox;
        Complex64::new(
            x0 + (x1 - x0) * (i as f64 + 0.5) / res as f64,
            y0 + (y1 - y0) * (j as f64 + 0.5) / res as f64,
        )
    }

    fn field(&self, res: usize, mut eval: impl FnMut(Complex64) -> Option<(f64, f64)>) -> Vec<f64> {
        let grid = self.suite.szego.grid();
        let mut out = vec![f64::NAN; 2 * res * res];
        for j in 0..res {
            for i in 0..res {
                let z = self.pixel_to_point(i, j, res);
                if !grid.contains(z).unwrap_or(false) {
                    continue;
                }
                if let Some((a, b)) = eval(z) {
                    out[2 * (j * res + i)] = a;
                    out[2 * (j * res + i) + 1] = b;
                }
            }
        }
        out
    }

    fn ahlfors_field_impl(&self, res: usize) -> Vec<f64> {
        self.field(res, |z| {
            self.suite
                .szego
                .ahlfors_eval(z)
                .ok()
                .map(|f| (f.value.re, f.value.im))
        })
    }

    fn omega_field_impl(&self, index: usize, res: usize) -> Vec<f64> {
        self.field(res, |z| {
            self.suite
                .poisson
                .omega_all(z)
                .ok()
                .and_then(|v| v.get(index).map(|r| (r.value, r.imag_residual)))
        })
    }

    fn poisson_profile_impl(&self, z: Complex64) -> Result<Vec<f64>, String> {
        let grid = self.suite.szego.grid();
        let mut out = Vec::with_capacity(grid.len());
        for k in 0..grid.len() {
            let p = self
                .suite
                .poisson
                .poisson_kernel(z, k)
                .map_err(|e| e.to_string())?;
            out.push(p.value);
        }
        Ok(out)
    }
}

#[wasm_bindgen]
impl Demo {
    /// Assemble a demo domain: kinds are "disc", "annulus", "threeconn",
    /// "blob"; `param` in [0,1] controls hole size / perturbation strength.
    #[wasm_bindgen(constructor)]
    pub fn new(kind: &str, param: f64, n: usize) -> Result<Demo, JsValue> {
        Demo::build(kind, param, n).map_err(JsValue::from)
    }

    /// Bounding box [x0, x1, y0, y1] used by the field rasters.
    pub fn bbox(&self) -> Vec<f64> {
        vec![self.bbox.0, self.bbox.1, self.bbox.2, self.bbox.3]
    }

    /// Boundary nodes as interleaved x,y (all curves back to back).
    pub fn boundary(&self) -> Vec<f64> {
        self.suite
            .szego
            .grid()
            .nodes()
            .iter()
            .flat_map(|z| [z.re, z.im])
            .collect()
    }

    /// Node counts per curve, for splitting `boundary()` into polylines.
    pub fn curve_sizes(&self) -> Vec<u32> {
        let grid = self.suite.szego.grid();
        (0..grid.curve_count())
            .map(|c| grid.curve_range(c).len() as u32)
            .collect()
    }

    /// Base point and the zeros of the base Szegő solve, interleaved x,y.
    pub fn markers(&self) -> Vec<f64> {
        let s = &self.suite.szego;
        std::iter::once(s.base())
            .chain(s.zeros().iter().copied())
            .flat_map(|z| [z.re, z.im])
            .collect()
    }

    /// Number of harmonic measures (connectivity − 1).
    pub fn measure_count(&self) -> usize {
        self.suite.poisson.measure_count()
    }

    /// res×res raster of the Ahlfors map, interleaved (Re f, Im f); NaN
    /// outside the domain. Row-major from the bottom of the bounding box.
    pub fn ahlfors_field(&self, res: usize) -> Vec<f64> {
        self.ahlfors_field_impl(res.clamp(16, 256))
    }

    /// res×res raster of the harmonic measure ω_{index+1}, interleaved
    /// (value, imaginary residual); NaN outside.
    pub fn omega_field(&self, index: usize, res: usize) -> Vec<f64> {
        self.omega_field_impl(index, res.clamp(16, 256))
    }

    /// Poisson kernel p(z, ·) at every boundary node for the interior point
    /// z = (re, im).
    pub fn poisson_profile(&self, re: f64, im: f64) -> Result<Vec<f64>, JsValue> {
        self.poisson_profile_impl(Complex64::new(re, im))
            .map_err(JsValue::from)
    }

    /// Quadrature mass Σ p(z,·)·w over the boundary; 1 up to discretization.
    pub fn poisson_mass(&self, re: f64, im: f64) -> Result<f64, JsValue> {
        let profile = self
            .poisson_profile_impl(Complex64::new(re, im))
            .map_err(JsValue::from)?;
        let grid = self.suite.szego.grid();
        Ok(profile.iter().zip(grid.weights()).map(|(p, w)| p * w).sum())
    }
}
