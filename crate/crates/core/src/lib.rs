pub mod demo;
pub mod error;
pub mod graph;
pub mod matcher;
pub mod model;
pub mod orbits;
pub mod search;
pub mod synthetic;
pub mod templates;
