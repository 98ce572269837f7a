//! Mean curvature flow of isoparametric submanifolds reduced to an ODE in a
//! Weyl chamber: root systems, curvature of the parallel leaves, closed forms
//! for rank-2 families, adaptive integration of the chamber flow, and audits
//! of curvature estimates along ancient solutions.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`). The
//! unsuffixed aliases below fix `f64`; the `*32` aliases fix `f32`.
//!
//! ```
//! use isoflow::{rank2, DihedralFamily, Rank2Config};
//!
//! let cfg = Rank2Config::new(DihedralFamily::new(2, 1, 1)?, 0.5)?;
//! let theta = rank2::spherical_theta(&cfg, -3.0)?;
//! assert!((theta - std::f64::consts::FRAC_PI_4).abs() < 1e-3);
//! # Ok::<(), isoflow::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod curvature;
pub mod error;
pub mod flow;
pub mod invariants;
pub mod linalg;
pub mod ode;
pub mod rank2;
pub mod root_system;
pub mod roots_file;
pub mod sampling;
pub mod scalar;

pub use catalog::{CatalogConfig, CatalogEntry, DocumentedFact, FactSource, Quantity};
pub use curvature::{CurvatureReport, Provenance};
pub use error::{Error, Result};
pub use flow::{CollapseDetection, FlowKind, MinimalMethod, PairAudit, Termination};
pub use invariants::{ConditionId, CurvatureSeries, EstimateAudit, IdentityCheck, Witness};
pub use rank2::{CollapseInfo, DihedralFamily, FocalTarget, LimitConstants};
pub use root_system::ValidationReport;
pub use sampling::Sampler;
pub use scalar::Scalar;

pub type RootSystem = root_system::RootSystemData<f64>;
pub type ChamberPoint = root_system::ChamberPoint<f64>;
pub type Rank2Config = rank2::Rank2Config<f64>;
pub type FlowSpec = flow::FlowSpec<f64>;
pub type FlowTrajectory = flow::FlowTrajectory<f64>;
pub type MinimalPoint = flow::MinimalPoint<f64>;
pub type StepOptions = ode::StepOptions<f64>;

pub type RootSystem32 = root_system::RootSystemData<f32>;
pub type ChamberPoint32 = root_system::ChamberPoint<f32>;
pub type Rank2Config32 = rank2::Rank2Config<f32>;
pub type FlowSpec32 = flow::FlowSpec<f32>;
pub type FlowTrajectory32 = flow::FlowTrajectory<f32>;
pub type MinimalPoint32 = flow::MinimalPoint<f32>;

/// Crate version, echoed in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
