//! Cultural-affinity association between survey candidates.
//!
//! Candidates answer a questionnaire of multiple-choice and free-text
//! questions. Their answers become weighted star graphs (MCQ features and
//! text context terms), pairs of graphs are scored node by node, and the
//! resulting association matrix drives clustering and team formation.

pub mod association;
pub mod cluster;
pub mod error;
pub mod survey;
pub mod synthetic;
pub mod graph;
pub mod text;

pub use error::{Error, Result, Stage};
