//! Command-line front end for the henon toolkit: flag/config parsing,
//! dispatch into the core routines, artifact rendering and the sweep cache.

pub mod args;
pub mod cache;
pub mod run;
