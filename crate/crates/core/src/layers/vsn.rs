use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dropout, Grn};
use crate::autograd::{ParamStore, Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Per-position selection weights over the input streams.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionWeights {
    pub rows: Vec<Vec<f64>>,
}

impl SelectionWeights {
    pub fn from_tensor(t: &Tensor) -> Self {
        Self {
            rows: (0..t.rows()).map(|r| t.row(r).to_vec()).collect(),
        }
    }
}

/// Variable selection network. A selection GRN over the concatenated streams
/// (conditioned on the static context) yields softmax weights; each stream is
/// refined by its own GRN and the results are mixed by those weights.
#[derive(Clone, Debug)]
pub struct Vsn {
    pub selector: Grn,
    pub streams: Vec<Grn>,
    d: usize,
}

impl Vsn {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        m_x: usize,
        d: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if m_x == 0 {
            return Err(Error::Config("variable selection needs at least one stream".into()));
        }
        let selector = Grn::new(store, &format!("{name}.select"), m_x * d, d, m_x, Some(d), rng)?;
        let streams = (0..m_x)
            .map(|j| Grn::square(store, &format!("{name}.stream{j}"), d, false, rng))
            .collect::<Result<_>>()?;
        Ok(Self { selector, streams, d })
    }

    pub fn m_x(&self) -> usize {
        self.streams.len()
    }

    /// `streams` are `m_x` matrices of shape `N × d`; `context` is `N × d`
    /// (the static context repeated per row). Returns the fused `N × d`
    /// representation and the `N × m_x` selection weights.
    pub fn forward(
        &self,
        tape: &mut Tape,
        streams: &[Var],
        context: Option<Var>,
        dropout: &mut Dropout,
    ) -> Result<(Var, Var)> {
        if streams.len() != self.m_x() {
            return Err(Error::dim("vsn", &[streams.len()], &[self.m_x()]));
        }
        let rows = tape.value(streams[0]).rows();
        for &s in streams {
            let shape = tape.value(s).shape();
            if tape.value(s).rows() != rows || tape.value(s).cols() != self.d {
                return Err(Error::dim("vsn stream", shape, &[rows, self.d]));
            }
        }
        let xi = tape.concat_cols(streams)?;
        let logits = self.selector.forward(tape, xi, context, dropout)?;
        let weights = tape.softmax(logits, 1)?;
        let mut fused = None;
        for (j, (&s, grn)) in streams.iter().zip(&self.streams).enumerate() {
            let refined = grn.forward(tape, s, None, dropout)?;
            let w = tape.slice_cols(weights, j, 1)?;
            let term = tape.mul_col(refined, w)?;
            fused = Some(match fused {
                None => term,
                Some(acc) => tape.add(acc, term)?,
            });
        }
        Ok((fused.expect("at least one stream"), weights))
    }
}
