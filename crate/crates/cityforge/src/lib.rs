//! Command-line tool and HTTP service for the cityforge pipeline.

pub mod cli;
pub mod config;
pub mod load;
pub mod service;
