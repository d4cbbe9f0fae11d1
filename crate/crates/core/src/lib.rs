//! Numerical laboratory for sharp Hardy inequalities on the orthant cone
//! `R^{n-k} x (R_+)^k`.
//!
//! The crate evaluates the constants, functionals, operator identities,
//! spherical eigenvalues and harmonic decompositions that make up the
//! inequality `∫|∇u|² ≥ (n-2+2k)²/4 ∫u²/|x|²` and its iterated-logarithm
//! improvement on balls. Every numerical routine is generic over the scalar
//! type through [`Real`]; the `*64` aliases below fix it to `f64`, which is
//! what the tolerances in the test-suite are calibrated for.

pub mod cone;
pub mod convergence;
pub mod decompose;
pub mod error;
pub mod functionals;
pub mod operators;
pub mod quadrature;
pub mod scalar;
pub mod spectral;
pub mod trial;

pub use cone::{AngularEigenfunction, ConeSpec, HalfInteger, SharpConstants};
pub use error::{Error, Result};
pub use scalar::Real;

/// Exact rational used for every closed-form constant.
pub type Rational = num_rational::Ratio<i64>;

pub type AngularEigenfunction64 = cone::AngularEigenfunction<f64>;
pub type QuadratureRule64 = quadrature::QuadratureRule<f64>;
pub type ConvergenceTable64 = convergence::ConvergenceTable<f64>;
pub type RadialProfile64 = trial::RadialProfile<f64>;
pub type FunctionalReport64 = functionals::FunctionalReport<f64>;
pub type ResidualSample64 = operators::ResidualSample<f64>;
pub type EigenResult64 = spectral::EigenResult<f64>;
pub type HarmonicCoefficients64 = decompose::HarmonicCoefficients<f64>;
