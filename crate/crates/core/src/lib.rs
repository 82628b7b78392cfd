//! Register relocation for sequential circuits at the IR level.

pub mod cli;
pub mod delay_model;
pub mod ir;
pub mod lowering;
pub mod random;
pub mod relocation;
pub mod simulator;
pub mod timing;
pub mod wgraph;
