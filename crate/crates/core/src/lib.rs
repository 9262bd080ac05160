//! Constructive laminates and level-set certificates for matrix integrands
//! whose quasiconvex envelope is a polyconvex function of the minors, plus a
//! sampled rank-one lamination oracle for cross-checking.
//!
//! The numerical core is generic over the scalar type (see [`scalar`]); the
//! aliases below fix it to `f64`, which is what the verification harness and
//! the CLI use.

pub mod constructor;
pub mod envelope_oracle;
pub mod error;
pub mod harness;
pub mod hexfloat;
pub mod integrands;
pub mod laminate;
pub mod levelset;
pub mod matcore;
pub mod sampling;
pub mod scalar;

pub use error::{Error, Result};
pub use integrands::{CoincidenceQuery, Integrand};
pub use matcore::{Axis, Mat};
pub use scalar::{Real, Scalar};

pub type Mat64 = matcore::Mat<f64>;
pub type Mat32 = matcore::Mat<f32>;
pub type MatQ = matcore::Mat<num_rational::Rational64>;
pub type Laminate64 = laminate::Laminate<f64>;
pub type Laminate32 = laminate::Laminate<f32>;
pub type SegmentCertificate64 = levelset::SegmentCertificate<f64>;
pub type GradedPolynomial64 = levelset::GradedPolynomial<f64>;
pub type EnvelopeEstimate64 = envelope_oracle::EnvelopeEstimate<f64>;
pub type OracleConfig64 = envelope_oracle::OracleConfig<f64>;
