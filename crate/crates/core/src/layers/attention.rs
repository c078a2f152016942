use rand_chacha::ChaCha8Rng;

use super::glorot;
use crate::autograd::{ParamId, ParamStore, Tape, Var};
use crate::error::{Error, Result};

/// A contiguous run of rows forming one sequence inside a stacked batch.
/// Only the first `valid` rows are real tokens; the rest are padding and are
/// never attended to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Block {
    pub start: usize,
    pub len: usize,
    pub valid: usize,
}

/// Bidirectional multi-head self-attention without biases. Head `h` uses
/// columns `h·d_attn..(h+1)·d_attn` of the query/key projections and
/// `h·d_val..(h+1)·d_val` of the value projection.
#[derive(Clone, Debug)]
pub struct MultiHeadAttention {
    pub w_q: ParamId,
    pub w_k: ParamId,
    pub w_v: ParamId,
    pub w_h: ParamId,
    pub heads: usize,
    pub d_attn: usize,
    pub d_val: usize,
}

impl MultiHeadAttention {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        d_m: usize,
        heads: usize,
        d_attn: usize,
        d_val: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        Ok(Self {
            w_q: store.insert(format!("{name}.w_q"), glorot(rng, d_m, heads * d_attn))?,
            w_k: store.insert(format!("{name}.w_k"), glorot(rng, d_m, heads * d_attn))?,
            w_v: store.insert(format!("{name}.w_v"), glorot(rng, d_m, heads * d_val))?,
            w_h: store.insert(format!("{name}.w_h"), glorot(rng, heads * d_val, d_m))?,
            heads,
            d_attn,
            d_val,
        })
    }

    /// Attention over a single unpadded sequence.
    pub fn forward_single(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let n = tape.value(x).rows();
        self.forward(tape, x, &[Block { start: 0, len: n, valid: n }])
    }

    /// `blocks` must tile the rows of `x` in order. Attention never crosses
    /// block boundaries; a block with no valid rows outputs zeros.
    pub fn forward(&self, tape: &mut Tape, x: Var, blocks: &[Block]) -> Result<Var> {
        let n = tape.value(x).rows();
        let mut next = 0;
        for b in blocks {
            if b.start != next || b.valid > b.len || b.len == 0 {
                return Err(Error::Contract(format!("malformed attention block {b:?}")));
            }
            next += b.len;
        }
        if next != n {
            return Err(Error::dim("attention blocks", &[next], &[n]));
        }

        let (wq, wk, wv, wh) = (
            tape.param(self.w_q),
            tape.param(self.w_k),
            tape.param(self.w_v),
            tape.param(self.w_h),
        );
        let q = tape.matmul(x, wq)?;
        let k = tape.matmul(x, wk)?;
        let v = tape.matmul(x, wv)?;
        let scale = 1.0 / (self.d_attn as f64).sqrt();

        let mut outs = Vec::with_capacity(blocks.len());
        for b in blocks {
            let rows: Vec<usize> = (b.start..b.start + b.len).collect();
            let mask: Vec<bool> = (0..b.len).map(|j| j < b.valid).collect();
            let single = blocks.len() == 1;
            let (qb, kb, vb) = if single {
                (q, k, v)
            } else {
                (
                    tape.gather_rows(q, &rows)?,
                    tape.gather_rows(k, &rows)?,
                    tape.gather_rows(v, &rows)?,
                )
            };
            let mut heads = Vec::with_capacity(self.heads);
            for h in 0..self.heads {
                let qh = tape.slice_cols(qb, h * self.d_attn, self.d_attn)?;
                let kh = tape.slice_cols(kb, h * self.d_attn, self.d_attn)?;
                let vh = tape.slice_cols(vb, h * self.d_val, self.d_val)?;
                let kt = tape.transpose(kh);
                let scores = tape.matmul(qh, kt)?;
                let scores = tape.scale(scores, scale);
                let attn = tape.masked_softmax_rows(scores, Some(&mask))?;
                heads.push(tape.matmul(attn, vh)?);
            }
            outs.push(if heads.len() == 1 {
                heads[0]
            } else {
                tape.concat_cols(&heads)?
            });
        }
        let cat = if outs.len() == 1 {
            outs[0]
        } else {
            tape.concat_rows(&outs)?
        };
        tape.matmul(cat, wh)
    }
}
