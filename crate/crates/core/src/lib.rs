//! Numerical toolkit for smooth flows that are monotone with respect to
//! rank-k cones.

pub mod classifier;
pub mod cli;
pub mod cone;
pub mod cooperativity;
pub mod domain;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod model;
pub mod prevalence;
pub mod seed;
pub mod spectral;
pub mod zoo;

pub use cone::{Membership, MembershipClass, OrderRelation, QuadraticCone};
pub use domain::BoxDomain;
pub use dynamics::{FundamentalMatrixPath, IntegratorConfig, Trajectory};
pub use error::{Error, Result};
pub use model::{FnModel, Model, ModelSpec, VectorField};
