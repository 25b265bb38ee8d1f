//! One-step solution operators: Crank–Nicolson and exact sub-steps on the
//! finite-difference backend, and dense-matrix ground-truth flows.

mod commutator;
mod expm;
mod oracle;
mod pde;

pub use commutator::{
    commutator_bound_check, fractional_power, gaussian_matrix, gaussian_vectors, CommutatorReport,
    MatrixInstance,
};
pub use expm::matrix_expm;
pub use oracle::{oracle_apply, oracle_evolution, MatrixGenerator, OracleOptions};
pub use pde::{
    cn_diffusion_step, cn_reference_step, potential_step_exact, ExactDiffusion,
};
