//! Independent oracles shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

pub mod ami_oracle;
pub mod dip_oracle;
pub mod graph_oracle;
pub mod simplex;
