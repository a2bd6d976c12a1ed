use super::graph::{Graph, NodeId};
use super::params::{ParamId, ParamStore};
use crate::error::{Error, Result};

/// Weights of one LSTM direction, gates packed in `i, f, g, o` order.
#[derive(Clone, Copy, Debug)]
pub struct LstmParams {
    pub w_ih: ParamId,
    pub w_hh: ParamId,
    pub bias: ParamId,
    pub input: usize,
    pub hidden: usize,
}

impl LstmParams {
    /// Registers `{prefix}.w_ih`, `{prefix}.w_hh` and `{prefix}.bias`.
    pub fn new(store: &mut ParamStore, prefix: &str, input: usize, hidden: usize) -> Result<Self> {
        if input == 0 || hidden == 0 {
            return Err(Error::config(format!(
                "lstm `{prefix}` needs positive sizes (input {input}, hidden {hidden})"
            )));
        }
        let w_ih = store.add_xavier(&format!("{prefix}.w_ih"), 4 * hidden, input)?;
        let w_hh = store.add_xavier(&format!("{prefix}.w_hh"), 4 * hidden, hidden)?;
        let bias = store.add_zeros(&format!("{prefix}.bias"), vec![4 * hidden])?;
        Ok(LstmParams {
            w_ih,
            w_hh,
            bias,
            input,
            hidden,
        })
    }

    /// Looks up an existing set of weights by prefix.
    pub fn lookup(store: &ParamStore, prefix: &str) -> Result<Self> {
        let get = |suffix: &str| {
            store
                .id(&format!("{prefix}.{suffix}"))
                .ok_or_else(|| Error::config(format!("missing parameter `{prefix}.{suffix}`")))
        };
        let w_ih = get("w_ih")?;
        let w_hh = get("w_hh")?;
        let bias = get("bias")?;
        let shape = store.value(w_ih).shape();
        Ok(LstmParams {
            w_ih,
            w_hh,
            bias,
            input: shape[1],
            hidden: shape[0] / 4,
        })
    }
}

/// One recurrence step; returns `(h_t, c_t)`.
pub fn lstm_cell(
    g: &mut Graph<'_>,
    x: NodeId,
    h_prev: NodeId,
    c_prev: NodeId,
    p: &LstmParams,
) -> Result<(NodeId, NodeId)> {
    let h = p.hidden;
    if g.dim(x) != p.input || g.dim(h_prev) != h || g.dim(c_prev) != h {
        return Err(Error::config(format!(
            "lstm cell expects input {} and state {}, got {}/{}/{}",
            p.input,
            h,
            g.dim(x),
            g.dim(h_prev),
            g.dim(c_prev)
        )));
    }
    let from_x = g.linear(p.w_ih, x, Some(p.bias))?;
    let from_h = g.linear(p.w_hh, h_prev, None)?;
    let pre = g.add(from_x, from_h)?;
    let i = g.slice(pre, 0, h)?;
    let f = g.slice(pre, h, h)?;
    let cand = g.slice(pre, 2 * h, h)?;
    let o = g.slice(pre, 3 * h, h)?;
    let i = g.sigmoid(i);
    let f = g.sigmoid(f);
    let cand = g.tanh(cand);
    let o = g.sigmoid(o);
    let keep = g.mul(f, c_prev)?;
    let write = g.mul(i, cand)?;
    let c = g.add(keep, write)?;
    let tc = g.tanh(c);
    let h_t = g.mul(o, tc)?;
    Ok((h_t, c))
}

/// Runs one direction over `seq` from a zero state. Hidden states are
/// returned in sequence order regardless of direction.
pub fn lstm_run(
    g: &mut Graph<'_>,
    seq: &[NodeId],
    p: &LstmParams,
    reverse: bool,
) -> Result<Vec<NodeId>> {
    let mut h = g.zeros(p.hidden);
    let mut c = g.zeros(p.hidden);
    let mut out = vec![h; seq.len()];
    let order: Box<dyn Iterator<Item = usize>> = if reverse {
        Box::new((0..seq.len()).rev())
    } else {
        Box::new(0..seq.len())
    };
    for t in order {
        let (nh, nc) = lstm_cell(g, seq[t], h, c, p)?;
        h = nh;
        c = nc;
        out[t] = h;
    }
    Ok(out)
}

/// Bidirectional pass: `out[i] = [forward_i; backward_i]`.
pub fn bilstm(
    g: &mut Graph<'_>,
    seq: &[NodeId],
    fwd: &LstmParams,
    bwd: &LstmParams,
) -> Result<Vec<NodeId>> {
    if seq.is_empty() {
        return Err(Error::invalid("bilstm over an empty sequence"));
    }
    let f = lstm_run(g, seq, fwd, false)?;
    let b = lstm_run(g, seq, bwd, true)?;
    Ok(f.into_iter()
        .zip(b)
        .map(|(f, b)| g.concat(&[f, b]))
        .collect())
}
