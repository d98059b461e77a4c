//! The Long Expressive Memory cell.
//!
//! Each step updates a fast state `z` and a slow state `y` with two learned,
//! state-dependent time-step gates:
//!
//! ```text
//! Δt_n  = Δt σ̂(W1 y_{n-1} + V1 u_n + b1)
//! Δt̄_n  = Δt σ̂(W2 y_{n-1} + V2 u_n + b2)
//! z_n   = (1 - Δt_n) ⊙ z_{n-1} + Δt_n ⊙ tanh(Wz y_{n-1} + Vz u_n + bz)
//! y_n   = (1 - Δt̄_n) ⊙ y_{n-1} + Δt̄_n ⊙ tanh(Wy z_n + Vy u_n + by)
//! ω_n   = W_out y_n
//! ```

mod cell;
mod params;

pub use cell::{forward_sequence, forward_step, state_trajectory, LemState, StepCache};
pub use params::{param_count, LemGrads, LemParams, LEM_TENSOR_NAMES};
pub(crate) use params::check_dims;
