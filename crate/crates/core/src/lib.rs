//! Orthogonal product sets, plane-structure checks for strong nonlocality,
//! a POVM nullspace oracle and an LOCC protocol simulator.

pub mod construct;
pub mod error;
pub mod plane;
pub mod povm;
pub mod protocol;
pub mod render;
pub mod state;

pub use construct::{build, check_symmetric, expected_size, max_block_statistic, OpsFamilyId, OpsInstance, Subset};
pub use error::{Error, Result};
pub use state::{
    dft_local_vector, group_vector, inner_product, omega_power, pm_local_vector, Bipartition, LocalVector,
    ProductState, RootOfUnity, StateTag, SystemDims, ORTHO_TOL, ungroup,
};
pub use protocol::{builtin_tree, run_protocol, BuiltinTheorem, ProtocolTree};
pub use render::{render_grid, GridRendering};
