//! Kernel functions of potential theory on smooth finitely connected plane
//! domains, computed from one-dimensional boundary integrals only.
//!
//! The library assembles the boundary values of a small family of functions
//! of one variable — the Szegő kernel `S(·,a)` at a base point, the same
//! kernel at the zeros of `S(·,a)`, and the Garabedian kernel `L(·,a)` — by
//! solving the Kerzman–Stein integral equation with a Nyström discretization
//! on spectrally accurate trapezoid grids. Everything else is algebra on top
//! of those boundary values and Cauchy integrals:
//!
//! * `S(z,w)` and `L(z,w)` at arbitrary point pairs,
//! * the Ahlfors map `f_a = S(·,a)/L(·,a)`,
//! * the Bergman kernel `K(z,w)` and its companion kernel `Λ(z,w)`,
//! * harmonic measures, the Poisson kernel and a Dirichlet solver.
//!
//! No area integral is ever evaluated; all quadrature is over the boundary.

pub mod artifact;
pub mod bergman;
pub mod error;
pub mod geometry;
pub mod harmonic;
pub mod integral_eq;
pub mod reference;
pub mod szego;

pub use artifact::{DomainSpec, KernelSuite};
pub use error::{Error, Result};
pub use geometry::{BoundaryFunction, BoundaryGrid, Curve, Domain};
pub use szego::{BasePoint, SzegoData};

use num_complex::Complex64;

/// A value together with the flag raised when the evaluation point sits
/// below the Cauchy-quadrature accuracy floor near the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flagged<T> {
    pub value: T,
    pub near_boundary: bool,
}

impl<T> Flagged<T> {
    pub fn new(value: T, near_boundary: bool) -> Flagged<T> {
        Flagged {
            value,
            near_boundary,
        }
    }

    pub fn clean(value: T) -> Flagged<T> {
        Flagged {
            value,
            near_boundary: false,
        }
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Flagged<U> {
        Flagged {
            value: f(self.value),
            near_boundary: self.near_boundary,
        }
    }
}

/// A real-valued result carrying its discarded imaginary part as a
/// discretization-quality diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealValue {
    pub value: f64,
    pub imag_residual: f64,
    pub near_boundary: bool,
}

impl RealValue {
    pub fn from_complex(v: Complex64, near_boundary: bool) -> RealValue {
        RealValue {
            value: v.re,
            imag_residual: v.im.abs(),
            near_boundary,
        }
    }
}

#[cfg(test)]
mod concurrency_tests {
    fn assert_send_sync<T: Send + Sync>() {}

    #[test]
    fn core_types_are_shareable() {
        assert_send_sync::<crate::SzegoData>();
        assert_send_sync::<crate::bergman::BergmanData>();
        assert_send_sync::<crate::harmonic::PoissonData>();
        assert_send_sync::<crate::BoundaryGrid>();
        assert_send_sync::<crate::KernelSuite>();
    }
}
