//! Analog crossbar tiles.
//!
//! A tile stores a `rows × cols` weight matrix as device states, with rows
//! driven by the input vector and columns summing the output currents. Reads
//! are noise-free. Weights are signed and stored on a single device each.

mod program;
mod tile;

pub use program::{
    map_weights_to_targets, program_and_verify, program_tolerance, ProgramRecord, ProgramReport, ProgramSummary, WeightMapping,
};
pub use tile::{AnalogTile, TileSnapshot, UpdateStats};

/// Mapped weights occupy `[-MAP_MARGIN, MAP_MARGIN]` of the nominal range.
pub const MAP_MARGIN: f64 = 0.9;

/// Absolute programming tolerance floor as a fraction of the nominal range.
pub const EPSILON_FLOOR_FRACTION: f64 = 0.005;
