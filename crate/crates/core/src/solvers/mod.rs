//! Fast-slow systems `φ' = (f(ψ) − φ)/τ`, `ψ' = g(φ, ψ)`: a heterogeneous
//! multiscale solver whose cost does not depend on `τ`, an explicit
//! fine-step reference whose cost grows like `1/τ`, and a cost comparison
//! between the two.

mod cost;
mod hmm;
mod reference;
mod system;

pub use cost::{
    cost_comparison, cost_comparison_with, hmm_cost, reference_cost, CostOutcome, CostRow, CostSettings, CostTable,
    MethodCost, Truth,
};
pub use hmm::{hmm_solve, micro_contraction, HmmSettings};
pub use reference::{reference_stiff_solve, reference_stiff_solve_with, Scheme};
pub use system::{linear_exact, FastMap, FastSlowSystem, FastSlowTrajectory, SlowMap};
