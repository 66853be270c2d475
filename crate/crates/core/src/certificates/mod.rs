//! Finite-volume certificates: safe blocks, blocking structures and good boxes.

pub(crate) mod counter;

pub mod blocking;
pub mod fixtures;
pub mod good;
pub mod safe;

pub use blocking::{
    build_blocking_structure, find_blocking_path, verify_blocking, BlockingPath, BlockingStructure, BlockingVerdict,
};
pub use good::{estimate_good_prob, is_good_box, verify_spread, GoodBoxParams, GoodReport, GoodWitness};
pub use safe::{estimate_safe_prob, is_safe_block, safe_block_field, BlockField, BlockGeometry, SafeCertificate};
