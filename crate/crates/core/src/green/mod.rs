//! Green's functions of constant-coefficient operators on a flat torus.

pub mod construct;
pub mod giraud;
pub mod grid;
pub mod hardy_potential;
pub mod kernel;

pub use construct::{
    extract_mass, fourier_green_oracle, neumann_green, parametrix, parametrix_remainder, representation_check, verify_table, Cutoff,
    Sampling, TrigPoly,
};
pub use grid::{GridFft, HardyPotential, OperatorSpec, Shape, TorusGrid};
pub use kernel::KernelTable;
