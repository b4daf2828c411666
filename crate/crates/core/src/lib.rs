//! Procedural persona modelling for MiniDungeons 2.
//!
//! [`engine`] simulates the game, [`personas`] plays it with A* agents,
//! [`trace`] records and featurizes playtraces, [`labeling`] produces
//! ground-truth labels and [`learn`] trains the classifiers.

pub mod engine;
pub mod labeling;
pub mod learn;
pub mod personas;
pub mod trace;
