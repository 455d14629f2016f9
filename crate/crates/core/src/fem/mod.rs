//! P1 finite elements on graph-like meshes plus the sparse linear-algebra
//! kernel shared with the one-dimensional metric-graph systems.

pub mod assembly;
pub mod eigen;
pub mod skyline;
pub mod sparse;

pub use assembly::{assemble_neumann, assemble_regions, FemError, FemSystem, RegionSelector};
pub use eigen::{dense_path, smallest_eigenpairs, EigError, EigOptions, EigResult};
pub use skyline::{FactorError, SkylineFactor};
pub use sparse::{CooBuilder, CsrMatrix};
