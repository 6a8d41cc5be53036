#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angular;
pub mod atom;
pub mod bbr;
pub mod cache;
pub mod error;
pub mod fw;
pub mod kv;
pub mod lattice;
pub mod numerics;
pub mod output;
pub mod polarizability;
pub mod radial;
pub mod species;
pub mod thermometry;
pub mod units;

pub use error::{Error, Result};
