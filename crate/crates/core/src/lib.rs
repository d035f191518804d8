//! Numerical laboratory for the Hausdorff dimension d(c) of Julia sets of
//! the quadratic family z ↦ z² + c, and for the behaviour of d′(c) near
//! parabolic parameters.
//!
//! The crate is organized around five concerns:
//!
//! * [`dynamics`] — iteration, periodic cycles, Newton continuation,
//!   parabolic-parameter location, parameter classification;
//! * [`pressure`] — topological pressure by preimage trees and periodic
//!   points, the Bowen root solve for d(c), Gibbs-weighted integrals, and
//!   the pressure-derivative formula for d′(c);
//! * [`normal_form`] — the conjugated return map λz + az² + bz³ + …, small
//!   period-2 cycles, Fatou coordinates, and translation checks;
//! * [`cylinders`] — backward-orbit cylinder chains near the parabolic
//!   point, their size laws, and the perturbation functionals ψ̇, β, 𝔇²;
//! * [`special`] — the profile functions Γ, v, Λ, G±, Υ± with semi-infinite
//!   quadrature, plus finite differences and scaling-exponent fits.
//!
//! All numerics are generic over the scalar (`f32`/`f64`) through
//! [`scalar::Real`]; the concrete aliases below fix `f64`, which is what the
//! test suite and the CLI use.

pub mod cylinders;
pub mod dynamics;
pub mod jet;
pub mod normal_form;
pub mod numerics;
pub mod pressure;
pub mod quad;
pub mod scalar;
pub mod special;

pub use scalar::{Real, C};

/// Default scalar for applications.
pub type Scalar = f64;
/// Complex number over the default scalar.
pub type Cplx = C<Scalar>;

pub type Orbit = dynamics::Orbit<Scalar>;
pub type Cycle = dynamics::Cycle<Scalar>;
pub type Classification = dynamics::Classification<Scalar>;
pub type PressureEstimate = pressure::PressureEstimate<Scalar>;
pub type DimensionResult = pressure::DimensionResult<Scalar>;
pub type GibbsEstimate = pressure::GibbsEstimate<Scalar>;
pub type NormalForm = normal_form::NormalForm<Scalar>;
pub type CylinderChain = cylinders::CylinderChain<Scalar>;
pub type PerturbationSample = cylinders::PerturbationSample<Scalar>;
pub type ScalingFit = special::ScalingFit<Scalar>;
pub type QuadratureResult = quad::QuadratureResult<Scalar>;
