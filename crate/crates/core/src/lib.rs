//! Discontinuous Galerkin pricing of options under the Heston model.
//!
//! The numerical core is generic over the scalar type (`f32` or `f64`, see
//! [`scalar::Real`]); the aliases below fix it to `f64`, with `F32` variants
//! for single precision.

pub mod adaptivity;
pub mod assembly;
pub mod config;
pub mod dg_space;
pub mod error;
pub mod mesh;
pub mod model;
pub mod pipeline;
pub mod presets;
pub mod quadrature;
pub mod reference;
pub mod scalar;
pub mod sparse;
pub mod timestepping;

pub use error::{Error, Result};

pub type HestonParamsF64 = model::HestonParams<f64>;
pub type DomainF64 = model::Domain<f64>;
pub type OptionKindF64 = model::OptionKind<f64>;
pub type MeshF64 = mesh::Mesh<f64>;
pub type DGSpaceF64 = dg_space::DGSpace<f64>;
pub type DGSolutionF64 = dg_space::DGSolution<f64>;
pub type DiscretizationF64 = assembly::Discretization<f64>;
pub type PricingProblemF64 = pipeline::PricingProblem<f64>;
pub type ErrorIndicatorsF64 = adaptivity::ErrorIndicators<f64>;

pub type HestonParamsF32 = model::HestonParams<f32>;
pub type MeshF32 = mesh::Mesh<f32>;
pub type DGSpaceF32 = dg_space::DGSpace<f32>;
pub type DGSolutionF32 = dg_space::DGSolution<f32>;
pub type PricingProblemF32 = pipeline::PricingProblem<f32>;
