//! Andersen-style pointer analysis: exact worklist solving, Dyck-graph
//! reachability, bounded solving, and generators for hard instances.

pub mod bench;
pub mod boolmat;
pub mod bounded;
pub mod d1reach;
pub mod dyck;
pub mod error;
pub mod format;
pub mod hardness;
pub mod instance;
pub mod oracle;
pub mod verify;
pub mod worklist;

pub use boolmat::BoolMatrix;
pub use dyck::{DyckGraph, EdgeLabel, ReachRelation};
pub use error::{Error, Result};
pub use instance::{ApaInstance, PointerId, PointsToMap, Statement, StatementKind};
