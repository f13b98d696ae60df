//! Model presets, the path/tiling dictionaries and the exhaustive
//! enumeration oracle.

pub mod enumerate;
pub mod grid;
pub mod presets;
pub mod tiles;

pub use enumerate::{
    enumerate_aztec_tilings, enumerate_measure, AztecTilingTable, CorrelationTable, DominoKind,
    OccupancyEvent, PathGraphInstance,
};
pub use grid::{density_grid, DensityGrid};
pub use presets::{preset, ModelPreset};
pub use tiles::{
    aztec_tile_probability, cylinder_probability, lozenge_probability, tile_event, CylinderEvent,
    LozengeKind,
};
