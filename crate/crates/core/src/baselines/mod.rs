//! LSTM baseline with hand-written BPTT, and the constructive LEM/LSTM
//! equivalence pair.

mod equivalence;
mod lstm;

pub use equivalence::{compare_trajectories, construct_equivalent_pair, EquivalenceReport};
pub use lstm::{
    lstm_backward, lstm_forward_sequence, lstm_forward_step, lstm_step_jacobian, LstmCache, LstmGrads, LstmParams,
    LstmState, LSTM_TENSOR_NAMES,
};
