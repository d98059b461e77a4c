//! Dense linear algebra, activations, seeded randomness and log-log
//! regression shared by the rest of the crate. All 64-bit.

mod activation;
mod matrix;
mod power_law;
mod rng;
mod tensor_set;

pub use activation::{
    saturation_bias, sigma_hat, sigma_hat_inverse, sigma_hat_prime, sigma_hat_prime_from_value,
    tanh_prime_from_value,
};
pub use matrix::{axpy, dot, hadamard, max_abs, norm_inf, norm_one, norm_two, Matrix};
pub use power_law::{
    fit_power_law, fit_power_law_with, least_squares_slope, weighted_least_squares, PowerLawFit,
    DEFAULT_BINS,
};
pub use tensor_set::{max_relative_error, TensorSet};
pub use rng::{derive_seed, rng_from_seed, seeded_uniform, SeededRng};
pub(crate) use rng::uniform_from;
