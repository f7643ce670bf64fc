// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod error;
pub mod geometry;
pub mod horopca;
pub mod io;
pub(crate) mod linalg;
pub mod model;
pub(crate) mod optim;
pub mod projections;
pub mod report;
pub mod stats;

pub use baselines::{Method, SubspaceModel};
pub use error::{Error, Result};
pub use geometry::{HyperboloidPoint, IdealPoint, MinkowskiVector, PoincarePoint, Reflection};
pub use horopca::{FitConfig, FittedModel, Whitening};
pub use io::{DistanceMatrix, GeneratorSpec};
pub use model::Model;
pub use projections::{ComponentSet, GeodesicSubmanifold};
pub use report::ReductionReport;
pub use stats::Dataset;
