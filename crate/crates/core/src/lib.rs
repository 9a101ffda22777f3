//! Poly-harmonic eigenvalues `(-Δ)^n u = λ (-Δ)^m u` (clamped) on images
//! `φ(Ω)` of the unit disk under polynomial maps, their Hadamard shape
//! derivatives, ball criticality and isovolumetric optimization.
//!
//! The pipeline is: [`geometry::DomainMap`] → [`discretization::Discretization`]
//! → [`spectrum::SpectralResult`] → [`shape_calculus`] / [`optimize`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod discretization;
pub mod error;
pub mod fingerprint;
pub mod geometry;
pub mod jets;
pub mod kv;
pub mod optimize;
pub mod poly;
pub mod quadrature;
pub mod reference;
pub mod shape_calculus;
pub mod spectrum;

pub use discretization::{eigensolve, AssembledForms, Discretization, Problem};
pub use error::{Error, Result};
pub use fingerprint::Fingerprint;
pub use geometry::{DomainMap, PerturbationField};
pub use jets::{Jet, MapJet};
pub use poly::Poly2;
pub use quadrature::QuadratureRule;
pub use spectrum::{Cluster, SpectralResult};
