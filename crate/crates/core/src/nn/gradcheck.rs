use super::graph::{Graph, NodeId};
use super::params::ParamStore;
use crate::error::{Error, Result};

/// Denominator floor for [`relative_error`]; below it the comparison is
/// effectively absolute.
const REL_FLOOR: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_param: String,
    pub worst_index: usize,
    /// Analytic and numeric derivative at the worst entry.
    pub worst_analytic: f64,
    pub worst_numeric: f64,
    pub checked: usize,
}

/// `|a - n| / max(|a|, |n|, 1e-4)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

fn evaluate<F>(loss_fn: &F, store: &ParamStore) -> Result<f64>
where
    F: Fn(&mut Graph<'_>) -> Result<NodeId>,
{
    let mut g = Graph::new(store);
    let root = loss_fn(&mut g)?;
    if g.dim(root) != 1 {
        return Err(Error::invalid("loss must be a scalar node"));
    }
    Ok(g.scalar(root))
}

/// Compares analytic gradients of every trainable scalar against central
/// differences `(f(p+eps) - f(p-eps)) / 2eps`.
///
/// `loss_fn` must build the same computation on every call; it receives a
/// fresh graph over a (possibly perturbed) copy of `store`.
pub fn grad_check<F>(loss_fn: F, store: &ParamStore, eps: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph<'_>) -> Result<NodeId>,
{
    let grads = {
        let mut g = Graph::new(store);
        let root = loss_fn(&mut g)?;
        g.backward(root)?
    };
    let mut work = store.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        worst_analytic: 0.0,
        worst_numeric: 0.0,
        checked: 0,
    };
    let ids: Vec<_> = store.iter().map(|(id, _)| id).collect();
    for id in ids {
        let p = store.param(id);
        if !p.trainable {
            continue;
        }
        let analytic = grads.param(id);
        for i in 0..p.value.len() {
            let orig = p.value.data()[i];
            work.value_mut(id).data_mut()[i] = orig + eps;
            let up = evaluate(&loss_fn, &work)?;
            work.value_mut(id).data_mut()[i] = orig - eps;
            let down = evaluate(&loss_fn, &work)?;
            work.value_mut(id).data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let a = analytic.map_or(0.0, |g| g[i]);
            let err = relative_error(a, numeric);
            report.checked += 1;
            if err > report.max_rel_error || report.worst_param.is_empty() {
                report.max_rel_error = err;
                report.worst_param = p.name.clone();
                report.worst_index = i;
                report.worst_analytic = a;
                report.worst_numeric = numeric;
            }
        }
    }
    Ok(report)
}
