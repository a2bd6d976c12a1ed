use super::params::ParamStore;
use crate::error::{Error, Result};

/// Plain SGD with the L2 term folded into the gradient and an
/// optional global-norm clip.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SgdConfig {
    pub lr: f64,
    pub l2: f64,
    pub clip: Option<f64>,
}

/// Applies one update from the accumulated gradients and zeroes them.
///
/// Returns the global gradient norm measured before clipping.
pub fn sgd_step(store: &mut ParamStore, cfg: SgdConfig) -> Result<f64> {
    let ids: Vec<_> = store.iter().map(|(id, _)| id).collect();
    let mut sq = 0.0;
    for &id in &ids {
        let p = store.param(id);
        if !p.trainable {
            continue;
        }
        if let Some(pos) = p.grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite gradient in `{}` at index {pos}",
                p.name
            )));
        }
        sq += p.grad.iter().map(|g| g * g).sum::<f64>();
    }
    let norm = sq.sqrt();
    let scale = match cfg.clip {
        Some(c) if norm > c => c / norm,
        _ => 1.0,
    };
    for &id in &ids {
        let p = store.param_mut(id);
        if p.trainable {
            let grads = std::mem::take(&mut p.grad);
            for (v, g) in p.value.data_mut().iter_mut().zip(&grads) {
                *v -= cfg.lr * (g * scale + cfg.l2 * *v);
            }
            p.grad = grads;
        }
        p.grad.iter_mut().for_each(|g| *g = 0.0);
    }
    Ok(norm)
}
