use rand_chacha::ChaCha8Rng;

use super::config::Architecture;
use super::layers::{char_rep, gcn_edges, gcn_layer, interact};
use super::{dropout_mask, Model, Prepared};
use crate::crf::{crf_nll_graph, viterbi, Emissions};
use crate::data::Tag;
use crate::error::{Error, Result};
use crate::nn::{bilstm, Graph, NodeId};

impl Model {
    /// `w_i` for every token: word embedding and character representation.
    pub fn word_reps(&self, g: &mut Graph<'_>, s: &Prepared) -> Result<Vec<NodeId>> {
        (0..s.len())
            .map(|i| {
                let word = g.param_row(self.layout.word_emb, s.words[i])?;
                match &self.layout.chars {
                    Some((emb, f, b)) => {
                        let c = char_rep(g, &s.chars[i], *emb, f, b)?;
                        Ok(g.concat(&[word, c]))
                    }
                    None => Ok(word),
                }
            })
            .collect()
    }

    /// Encoder inputs `u_i`. With `dropout`, inverted dropout is applied to
    /// each `u_i` using the given stream.
    pub fn inputs(
        &self,
        g: &mut Graph<'_>,
        s: &Prepared,
        dropout: Option<&mut ChaCha8Rng>,
    ) -> Result<Vec<NodeId>> {
        let w = self.word_reps(g, s)?;
        let mut u = Vec::with_capacity(s.len());
        for i in 0..s.len() {
            let mut parts = vec![w[i]];
            if let Some(rel) = self.layout.rel_emb {
                parts.push(w[s.parents[i]]);
                parts.push(g.param_row(rel, s.relations[i])?);
            }
            if let Some(ctx) = &s.context {
                parts.push(g.constant(ctx[i].clone()));
            }
            u.push(g.concat(&parts));
        }
        if let Some(rng) = dropout {
            let p = self.config.dropout;
            if p > 0.0 {
                for x in &mut u {
                    let mask = dropout_mask(rng, g.dim(*x), p);
                    *x = g.scale_const(*x, mask)?;
                }
            }
        }
        Ok(u)
    }

    /// Final encoder features before the emission projection.
    pub fn features(
        &self,
        g: &mut Graph<'_>,
        s: &Prepared,
        dropout: Option<&mut ChaCha8Rng>,
    ) -> Result<Vec<NodeId>> {
        if s.is_empty() {
            return Err(Error::invalid("cannot encode an empty sentence"));
        }
        let mut h = self.inputs(g, s, dropout)?;
        let layers = self.layout.lstm.len();
        for (l, (fwd, bwd)) in self.layout.lstm.iter().enumerate() {
            h = bilstm(g, &h, fwd, bwd)?;
            if self.config.architecture == Architecture::Dglstm && l + 1 < layers {
                let mlp = self.layout.mlp.get(l).copied();
                h = (0..s.len())
                    .map(|i| interact(g, h[i], h[s.parents[i]], self.config.interaction, mlp))
                    .collect::<Result<Vec<_>>>()?;
            }
        }
        if !self.layout.gcn.is_empty() {
            let edges = gcn_edges(&s.parents, &s.relations, self.vocab.relations.len());
            for p in &self.layout.gcn {
                h = gcn_layer(g, &h, &edges, p)?;
            }
        }
        Ok(h)
    }

    /// One length-`K` emission node per token.
    pub fn emissions(
        &self,
        g: &mut Graph<'_>,
        s: &Prepared,
        dropout: Option<&mut ChaCha8Rng>,
    ) -> Result<Vec<NodeId>> {
        self.features(g, s, dropout)?
            .into_iter()
            .map(|x| g.linear(self.layout.emit_w, x, Some(self.layout.emit_b)))
            .collect()
    }

    /// CRF negative log-likelihood of the gold labels.
    pub fn loss(
        &self,
        g: &mut Graph<'_>,
        s: &Prepared,
        dropout: Option<&mut ChaCha8Rng>,
    ) -> Result<NodeId> {
        let gold = s
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                l.ok_or_else(|| {
                    Error::invalid(format!(
                        "gold label at token {} is not in the label set",
                        i + 1
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let em = self.emissions(g, s, dropout)?;
        crf_nll_graph(
            g,
            &em,
            self.layout.trans,
            self.layout.mask.as_deref(),
            &gold,
        )
    }

    /// Emission table without dropout.
    pub fn emission_table(&self, s: &Prepared) -> Result<Emissions> {
        let mut g = Graph::new(&self.store);
        let em = self.emissions(&mut g, s, None)?;
        let data = em.iter().flat_map(|&e| g.value(e).to_vec()).collect();
        Emissions::new(s.len(), self.num_labels(), data)
    }

    /// Viterbi label ids.
    pub fn predict_ids(&self, s: &Prepared) -> Result<Vec<usize>> {
        let f = self.emission_table(s)?;
        Ok(viterbi(&f, &self.crf())?.0)
    }

    pub fn predict(&self, s: &Prepared) -> Result<Vec<Tag>> {
        Ok(self
            .predict_ids(s)?
            .into_iter()
            .map(|id| self.vocab.label(id))
            .collect())
    }
}
