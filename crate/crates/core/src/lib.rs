//! Discrete anisotropic perimeter-type variational problems on masked grids.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod certify;
pub mod error;
pub mod grid;
pub mod levelset;
pub mod norm;
pub mod oracle;
pub mod par;
pub mod problem;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{BoundaryFace, BoundaryMode, Dir, GridDomain, Lattice, ScalarField, VectorField};
pub use norm::{NormKind, NormSpec, Sym2};
pub use par::Parallelism;
pub use problem::{
    energy_parts, energy_primal, existence_condition_check, heisenberg_drift, pairing_lower_bound,
    substitute_dirichlet, BoundaryCondition, EnergyParts, ExistenceCheck, ProblemSpec,
};
pub use solver::{
    dual_feasibility_residuals, duality_gap, pdhg_step, solve, DualityGap, GapRecord, PrimalDualState, Residuals,
    Solution, SolveReport, SolverParams,
};
pub use certify::{certify, check_boundary_contact, check_dual_feasible, check_structure, Certificate, CertifyTolerances};
pub use levelset::{
    ball, check_barrier_condition, check_barrier_condition_with, level_energy, psi_perimeter, smoothed_indicator,
    superlevel, truncate, verify_superlevel_minimality, verify_superlevel_minimality_with, BarrierCell, CellSet,
    MinimalityCheck, Region, Window,
};
pub use oracle::{
    brute_force_primal, brute_force_primal_with, brute_force_set_min, convexity_probe, convexity_probe_with,
    QuantizedMin, QuantizedSearchSpec,
};
