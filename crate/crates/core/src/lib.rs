//! Numerical toolkit for the integer-valued spectral shift: indices of pairs
//! of spectral projections, spectral shift functions, scattering matrices of
//! one-dimensional lattice Schrödinger operators and the spectral flow of
//! unitary families.

pub mod error;
pub mod linalg;
pub mod projections;
pub mod quadrature;
pub mod random;
pub mod scattering;
pub mod specflow;
pub mod ssf;
pub mod xi;

pub use error::{Error, Result};
pub use linalg::{
    eig_unitary, eigh, eigvalsh, spectral_projection, ComplexMatrix, EigenDecomposition, HermitianMatrix,
    Matrix, RealMatrix, SymTridiagonal,
};
pub use projections::{fredholm_index, pair_spectrum, trace_identity_check, xi_finite, IndexResult, ProjectionPair};
pub use random::SeededRng;
pub use scattering::{
    bound_states, free_resolvent_kernel, momentum, s_matrix, s_matrix_stationary, smooth_kernel_z,
    transfer_matrix, BandInterval, LatticePotential, ScatteringPoint,
};
pub use specflow::{counting_between, find_gap_angle, FlowOptions, FlowResult, UnitaryFamily, UnitaryFamilySample};
pub use ssf::{counting, ssf_finite, trace_formula_residual, CountingFunction, TestFunction};
