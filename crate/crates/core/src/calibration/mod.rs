//! Additive entropy constants across reaction networks.

mod network;
mod solve;
mod tables;

pub use network::{Edge, NodeEntropy, NodeKind, ProcessWitness, ReactionNetwork, SpaceNode};
pub use solve::{element_basis_constant, find_calibrators, solve_constants, CalibrationSolution, Calibrators, ConstantStatus, SolveStatus};
pub use tables::{check_f_properties, check_theorem6, compute_d, compute_e, compute_f, FTable};
