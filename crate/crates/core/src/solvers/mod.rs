//! Global solution construction: shooting, the even-solution family for the
//! non-compact model, and the non-existence scan.

pub mod noncompact;
pub mod nonexistence;
pub mod shooting;

pub use noncompact::{continuation_in_t, solve_noncompact_bvp, ContinuationReport, GreenSolver, NoncompactOptions, NoncompactSolution, WeightedFunction};
pub use nonexistence::{defect_scan, log_grid, nonexistence_scan, ScanPoint, ScanReport};
pub use shooting::{find_global_solution, shoot, GlobalSolution, ShootOptions, ShootResult, SolutionChecks};
