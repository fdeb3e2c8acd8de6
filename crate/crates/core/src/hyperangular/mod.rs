//! Adiabatic hyperangular eigenproblem, diagonal correction and channel tables.

pub mod correction;
pub mod mesh;
pub mod solver;
pub mod table;

pub use correction::diagonal_correction;
pub use mesh::{feature_width, AngularMesh, MeshDiagnostics, MeshPolicy};
pub use solver::{adiabatic_solve, AdiabaticSolution, FreeOperators, SolveOptions};
pub use table::{channel_table, channel_table_cached, log_grid, ChannelSample, ChannelTable, TableOptions};
