//! Access control that falls back from role-based policy to a fuzzy trust
//! score computed over each principal's hash-chained interaction history.

pub mod bench;
pub mod decision;
pub mod fuzzy;
pub mod policy;
pub mod provenance;
pub mod service;
