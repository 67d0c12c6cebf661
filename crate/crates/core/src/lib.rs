#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod anisotropy;
pub mod barrier;
pub mod cli;
pub mod curvfun;
pub mod error;
pub mod flow;
pub mod profile;
pub mod spaceform;
pub mod verify;
