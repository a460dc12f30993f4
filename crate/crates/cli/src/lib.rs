//! Command-line and HTTP front ends for the causeway workbench.

pub mod openapi;
pub mod server;
