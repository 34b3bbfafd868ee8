//! Extended hierarchical equations of motion for the spin-boson model.

pub mod checkpoint;
pub mod generator;
pub mod propagate;
pub mod space;
pub mod state;

pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointHeader};
pub use generator::{Generator, Rescaling, SystemSpec};
pub use propagate::{
    propagate, propagate_with, Propagation, Span, Trajectory, RK4_STABILITY_MARGIN,
};
pub use space::{ado_count, enumerate_space, AdoIndex, HierarchySpace, DEFAULT_ADO_BUDGET};
pub use state::{commute_z, AdoState, Block, Role};
