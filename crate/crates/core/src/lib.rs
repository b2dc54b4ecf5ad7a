//! Disjunctive superstructure models with bilinear, concave-power and log
//! terms: approximation, Big-M flattening and global solution by spatial
//! branch-and-bound.

pub mod approx;
pub mod bnb;
pub mod error;
pub mod interval;
pub mod lp;
pub mod model;
pub mod pipeline;
pub mod relax;
pub mod transform;
pub mod wtn;

pub use error::{Error, Result};
pub use interval::{interval_eval, Interval};
pub use model::{
    BilinearTerm, Constraint, Disjunct, Disjunction, Expression, GdpModel, LinearTerm, Literal,
    LogTerm, LogicClause, PowerTerm, Relation, Sense, ValidationReport, VarId, VarKind, Variable,
    Violation,
};
pub use transform::{bigm_transform, compute_bigm, logic_to_linear, FlatModel, Provenance};
