//! Dense vector math with reverse-mode gradients.

mod gradcheck;
mod graph;
mod lstm;
mod optim;
mod params;
mod tensor;

pub use gradcheck::{grad_check, relative_error, GradCheckReport};
pub use graph::{Graph, NodeId};
pub use lstm::{bilstm, lstm_cell, lstm_run, LstmParams};
pub use optim::{sgd_step, SgdConfig};
pub use params::{Gradients, Param, ParamId, ParamStore};
pub use tensor::Tensor;

/// `log Σ exp(v_i)` with max shift. Returns `-inf` when every entry is `-inf`.
pub fn logsumexp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
