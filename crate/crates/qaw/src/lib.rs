//! Numerical engine for the Askey-Wilson polynomial transform, the
//! Askey-Wilson function transform, and the family of explicit identities
//! they satisfy, including the one-variable q-Macdonald-Mehta integral.
//!
//! The crate is organized in layers:
//!
//! * [`qseries`] — q-shifted factorials, theta functions, unilateral and
//!   bilateral basic hypergeometric series with certified truncation;
//! * [`awcore`] — parameter algebra (the duality and tau involutions and
//!   their words), Askey-Wilson polynomials, the second-order q-difference
//!   operator, weights, norms, the Gaussian and the quasi-constant;
//! * [`awfunction`] — the Askey-Wilson function through two independent
//!   series representations, and its analytic part;
//! * [`transforms`] — measures on the unit circle with discrete mass
//!   corrections, the polynomial transform pair, the Askey-Wilson function
//!   transform, and the closed-form right-hand sides of the master
//!   formulas;
//! * [`identities`] — the verification suites that certify each identity
//!   numerically and emit machine-readable reports.
//!
//! All numerics are generic over the scalar type through
//! [`QScalar`](scalar::QScalar); the `f64` instantiation used by the CLI
//! and the verification harness is exposed through the aliases below.

pub mod awcore;
pub mod awfunction;
pub mod error;
pub mod identities;
pub mod policy;
pub mod qseries;
pub mod scalar;
pub mod transforms;

pub use error::{Error, Result, Tail};
pub use policy::TruncationPolicy;
pub use scalar::{Cx, QScalar};

/// Default real scalar of the engine.
pub type Real = f64;
/// Double-precision complex scalar used throughout the f64 instantiation.
pub type QComplex = num_complex::Complex<f64>;
/// Four-parameter tuple over `f64`.
pub type ParamQuad64 = awcore::ParamQuad<f64>;
/// Five-parameter tuple over `f64`.
pub type FiveTuple64 = awcore::FiveTuple<f64>;
/// Default truncation policy over `f64`.
pub type Policy64 = TruncationPolicy<f64>;
