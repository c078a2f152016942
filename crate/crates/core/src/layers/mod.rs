//! Trainable building blocks: affine maps, gated residual networks, variable
//! selection, and multi-head self-attention.

mod attention;
mod grn;
mod vsn;

pub use attention::{Block, MultiHeadAttention};
pub use grn::{Glu, Grn};
pub use vsn::{SelectionWeights, Vsn};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::autograd::{ParamId, ParamStore, Tape, Var};
use crate::error::Result;
use crate::tensor::Tensor;

/// Glorot-uniform initialized matrix.
pub fn glorot(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out)
        .map(|_| rng.gen_range(-limit..limit))
        .collect();
    Tensor::matrix(fan_in, fan_out, data).expect("positive dims")
}

pub fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, limit: f64) -> Tensor {
    let data = (0..rows * cols).map(|_| rng.gen_range(-limit..limit)).collect();
    Tensor::matrix(rows, cols, data).expect("positive dims")
}

/// Inverted dropout. `Off` is the identity.
pub enum Dropout<'r> {
    Off,
    On { rate: f64, rng: &'r mut ChaCha8Rng },
}

impl Dropout<'_> {
    pub fn apply(&mut self, tape: &mut Tape, x: Var) -> Result<Var> {
        match self {
            Dropout::Off => Ok(x),
            Dropout::On { rate, rng } => {
                if *rate <= 0.0 {
                    return Ok(x);
                }
                let keep = 1.0 - *rate;
                let shape = tape.value(x).shape().to_vec();
                let mut mask = Tensor::zeros(&shape);
                for m in mask.data_mut() {
                    *m = if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 };
                }
                let m = tape.leaf(mask);
                tape.mul(x, m)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
}

impl Linear {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        d_in: usize,
        d_out: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        Ok(Self {
            weight: store.insert(format!("{name}.weight"), glorot(rng, d_in, d_out))?,
            bias: store.insert(format!("{name}.bias"), Tensor::zeros(&[d_out]))?,
        })
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let (w, b) = (tape.param(self.weight), tape.param(self.bias));
        tape.linear(x, w, b)
    }
}

#[derive(Clone, Debug)]
pub struct LayerNorm {
    pub gain: ParamId,
    pub bias: ParamId,
}

pub const LAYER_NORM_EPS: f64 = 1e-5;

impl LayerNorm {
    pub fn new(store: &mut ParamStore, name: &str, d: usize) -> Result<Self> {
        Ok(Self {
            gain: store.insert(format!("{name}.gain"), Tensor::filled(&[d], 1.0))?,
            bias: store.insert(format!("{name}.bias"), Tensor::zeros(&[d]))?,
        })
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let (g, b) = (tape.param(self.gain), tape.param(self.bias));
        tape.layer_norm(x, g, b, LAYER_NORM_EPS)
    }
}
