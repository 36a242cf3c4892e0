//! Allocation of refugee families to places under multi-service capacity
//! quotas.
//!
//! Each family needs some units of every service; each place offers every
//! service between a lower and an upper quota. The crate solves three
//! problems on that model: maximizing total utility, finding a
//! Pareto-optimal assignment under weak preferences, and deciding whether
//! every family can be placed.

pub mod error;
pub mod fixtures;
pub mod io;
pub mod ip;
pub mod model;
pub mod multi_service;
pub mod oracle;
pub mod pareto;
pub mod single_service;

pub use error::{Error, Result};
pub use model::{
    Assignment, Family, FamilyId, Instance, Normalized, Place, PlaceId, PreferenceProfile,
    StructuralParams, UtilityMatrix,
};
