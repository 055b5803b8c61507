//! Path recommendation with retrieval-augmented generation over historical
//! trajectories.
//!
//! The pipeline: [`corpus`] turns map-matched trajectories on a
//! [`roadnet::RoadNetwork`] into one document per origin-destination pair,
//! [`retrieval`] finds the documents relevant to a query, [`llm`] prompts a
//! language model with them, [`validate`] checks the answer against the
//! network and [`eval`] scores the result.

pub mod corpus;
pub mod eval;
pub mod llm;
pub mod retrieval;
pub mod roadnet;
pub mod synth;
pub mod validate;
