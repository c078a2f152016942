use rand_chacha::ChaCha8Rng;

use super::{glorot, Dropout, LayerNorm, Linear};
use crate::autograd::{ParamId, ParamStore, Tape, Var};
use crate::error::{Error, Result};

/// Gated linear unit: `sigmoid(γ W4 + b4) ⊙ (γ W5 + b5)`.
#[derive(Clone, Debug)]
pub struct Glu {
    pub gate: Linear,
    pub value: Linear,
}

impl Glu {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        d_in: usize,
        d_out: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        Ok(Self {
            gate: Linear::new(store, &format!("{name}.gate"), d_in, d_out, rng)?,
            value: Linear::new(store, &format!("{name}.value"), d_in, d_out, rng)?,
        })
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let g = self.gate.forward(tape, x)?;
        let g = tape.sigmoid(g);
        let v = self.value.forward(tape, x)?;
        tape.mul(g, v)
    }
}

/// Gated residual network:
/// `LayerNorm(skip(a) + GLU(W1 · ELU(W2 a + W3 c + b2) + b1))`.
///
/// `skip` is the identity when input and output widths agree, otherwise a
/// learned projection. The context path exists only when the network is
/// built with a context width and is skipped when no context is passed.
#[derive(Clone, Debug)]
pub struct Grn {
    pub primary: Linear,
    pub context: Option<ParamId>,
    pub hidden: Linear,
    pub glu: Glu,
    pub skip: Option<Linear>,
    pub norm: LayerNorm,
    d_in: usize,
    d_out: usize,
}

impl Grn {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        d_in: usize,
        d_hidden: usize,
        d_out: usize,
        d_context: Option<usize>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let primary = Linear::new(store, &format!("{name}.w2"), d_in, d_hidden, rng)?;
        let context = d_context
            .map(|dc| store.insert(format!("{name}.w3"), glorot(rng, dc, d_hidden)))
            .transpose()?;
        let hidden = Linear::new(store, &format!("{name}.w1"), d_hidden, d_hidden, rng)?;
        let glu = Glu::new(store, &format!("{name}.glu"), d_hidden, d_out, rng)?;
        let skip = (d_in != d_out)
            .then(|| Linear::new(store, &format!("{name}.skip"), d_in, d_out, rng))
            .transpose()?;
        let norm = LayerNorm::new(store, &format!("{name}.norm"), d_out)?;
        Ok(Self {
            primary,
            context,
            hidden,
            glu,
            skip,
            norm,
            d_in,
            d_out,
        })
    }

    /// Square GRN of width `d` with an optional context of width `d`.
    pub fn square(
        store: &mut ParamStore,
        name: &str,
        d: usize,
        with_context: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        Self::new(store, name, d, d, d, with_context.then_some(d), rng)
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        a: Var,
        c: Option<Var>,
        dropout: &mut Dropout,
    ) -> Result<Var> {
        if tape.value(a).cols() != self.d_in {
            return Err(Error::dim("grn", tape.value(a).shape(), &[self.d_in]));
        }
        let mut pre = self.primary.forward(tape, a)?;
        if let (Some(w3), Some(c)) = (self.context, c) {
            let w3 = tape.param(w3);
            let cw = tape.matmul(c, w3)?;
            pre = tape.add(pre, cw)?;
        }
        let eta2 = tape.elu(pre);
        let eta1 = self.hidden.forward(tape, eta2)?;
        let eta1 = dropout.apply(tape, eta1)?;
        let gated = self.glu.forward(tape, eta1)?;
        let residual = match &self.skip {
            Some(s) => s.forward(tape, a)?,
            None => a,
        };
        let sum = tape.add(residual, gated)?;
        self.norm.forward(tape, sum)
    }
}
