use super::config::Interaction;
use crate::error::{Error, Result};
use crate::nn::{lstm_run, Graph, LstmParams, NodeId, ParamId};

/// Final forward and backward states of a character BiLSTM. An empty word
/// gives the zero vector.
pub fn char_rep(
    g: &mut Graph<'_>,
    chars: &[usize],
    emb: ParamId,
    fwd: &LstmParams,
    bwd: &LstmParams,
) -> Result<NodeId> {
    if chars.is_empty() {
        return Ok(g.zeros(fwd.hidden + bwd.hidden));
    }
    let seq = chars
        .iter()
        .map(|&c| g.param_row(emb, c))
        .collect::<Result<Vec<_>>>()?;
    let f = lstm_run(g, &seq, fwd, false)?;
    let b = lstm_run(g, &seq, bwd, true)?;
    Ok(g.concat(&[f[seq.len() - 1], b[0]]))
}

/// Combines a hidden state with its parent's. `mlp` supplies `(W1, W2)` for
/// [`Interaction::Mlp`].
pub fn interact(
    g: &mut Graph<'_>,
    h: NodeId,
    parent: NodeId,
    kind: Interaction,
    mlp: Option<(ParamId, ParamId)>,
) -> Result<NodeId> {
    if g.dim(h) != g.dim(parent) {
        return Err(Error::config(format!(
            "interaction inputs differ in width ({} vs {})",
            g.dim(h),
            g.dim(parent)
        )));
    }
    match kind {
        Interaction::SelfConnection => Ok(h),
        Interaction::Concat => Ok(g.concat(&[h, parent])),
        Interaction::Add => g.add(h, parent),
        Interaction::Mlp => {
            let (w1, w2) = mlp.ok_or_else(|| Error::config("mlp interaction without weights"))?;
            let a = g.linear(w1, h, None)?;
            let b = g.linear(w2, parent, None)?;
            let s = g.add(a, b)?;
            Ok(g.relu(s))
        }
    }
}

/// One graph-convolution layer. `relation` holds `(W2, w_r)` for the
/// relation-weighted variant, where `w_r` has one entry per relation id.
#[derive(Clone, Copy, Debug)]
pub struct GcnParams {
    pub w: ParamId,
    pub b: ParamId,
    pub relation: Option<(ParamId, ParamId)>,
}

/// Undirected neighbour `target` of a node, with the relation id of the
/// connecting arc (or the self-loop id).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GcnEdge {
    pub target: usize,
    pub relation: usize,
}

/// Symmetric adjacency with self-loops for a tree given by `parents`
/// (root points at itself). The self-loop uses relation `self_loop`; the
/// arc between a token and its head uses the token's own relation.
pub fn gcn_edges(parents: &[usize], relations: &[usize], self_loop: usize) -> Vec<Vec<GcnEdge>> {
    let mut edges: Vec<Vec<GcnEdge>> = (0..parents.len())
        .map(|i| {
            vec![GcnEdge {
                target: i,
                relation: self_loop,
            }]
        })
        .collect();
    for (i, &p) in parents.iter().enumerate() {
        if p != i {
            edges[i].push(GcnEdge {
                target: p,
                relation: relations[i],
            });
            edges[p].push(GcnEdge {
                target: i,
                relation: relations[i],
            });
        }
    }
    edges
}

/// `h'_i = ReLU(sum_j A_ij (W h_j [+ W2 h_j w_r]) + b)`.
pub fn gcn_layer(
    g: &mut Graph<'_>,
    h: &[NodeId],
    edges: &[Vec<GcnEdge>],
    p: &GcnParams,
) -> Result<Vec<NodeId>> {
    if edges.len() != h.len() {
        return Err(Error::config("adjacency size does not match the sequence"));
    }
    let wh = h
        .iter()
        .map(|&x| g.linear(p.w, x, None))
        .collect::<Result<Vec<_>>>()?;
    let rel = match p.relation {
        Some((w2, weights)) => {
            let w2h = h
                .iter()
                .map(|&x| g.linear(w2, x, None))
                .collect::<Result<Vec<_>>>()?;
            Some((w2h, g.param(weights)))
        }
        None => None,
    };
    let bias = g.param(p.b);
    let mut out = Vec::with_capacity(h.len());
    for node_edges in edges {
        let mut terms = vec![bias];
        for e in node_edges {
            terms.push(wh[e.target]);
            if let Some((w2h, weights)) = &rel {
                let r = g.pick(*weights, e.relation)?;
                terms.push(g.scale(w2h[e.target], r)?);
            }
        }
        let s = g.sum(&terms)?;
        out.push(g.relu(s));
    }
    Ok(out)
}
