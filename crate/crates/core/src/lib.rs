//! Workbench for finite relational structures and the classes they form:
//! declarative class membership, level-by-level enumeration, disjoint
//! amalgamation checking and solving, random model generation, and seeded
//! zero-one-law experiments.

pub mod amalgamation;
pub mod class;
pub mod enumeration;
pub mod error;
pub mod harness;
pub mod logic;
pub mod partitions;
pub mod sampler;
pub mod structure;

pub use crate::class::{catalog, parse_class_ref, CatalogParams, ClassSpec, Constraint};
pub use crate::enumeration::Levels;
pub use crate::error::{Error, Result};
pub use crate::structure::{FinStructure, Signature};
