//! Finite-difference discretization of the magnetic Laplacian on a
//! Dirichlet box and the lowest-eigenpair solver.

mod assemble;
mod csr;
mod dense;
mod eigen;
mod forms;
mod grid;
pub mod io;

pub use assemble::{assemble, assemble_with, AssemblyOptions, DiscreteOperator};
pub use csr::CsrMatrix;
pub use dense::hermitian_eigen;
pub use eigen::{lowest_eigenpairs, lowest_eigenpairs_of, EigenResult, Pcg, SolverOptions, DEFAULT_SEED};
pub use forms::{
    flat_landau_calibration, montgomery_check, quadratic_form, rayleigh_quotient, residual_norm, LandauCalibration,
    MontgomeryReport, QuadraticForm,
};
pub use grid::GridSpec;
