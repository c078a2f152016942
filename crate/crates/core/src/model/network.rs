use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use crate::autograd::{ParamId, ParamStore, Tape, Var};
use crate::data::sequence::{DaySequence, MODE_CODES, STATIC_LEVELS, TIME_BINS};
use crate::data::ActivityCategory;
use crate::error::{Error, Result};
use crate::layers::{uniform, Block, Dropout, Grn, LayerNorm, Linear, MultiHeadAttention, Vsn};
use crate::tensor::Tensor;

pub const BOS: usize = ActivityCategory::COUNT;
pub const EOS: usize = ActivityCategory::COUNT + 1;
pub const TOKEN_VOCAB: usize = ActivityCategory::COUNT + 2;
/// Slot class meaning "nothing more goes here".
pub const NO_INSERT: usize = ActivityCategory::COUNT;
pub const SLOT_CLASSES: usize = ActivityCategory::COUNT + 1;

const EMBED_INIT: f64 = 0.1;

#[derive(Clone, Debug)]
struct CovariateEncoder {
    arrival: ParamId,
    departure: ParamId,
    mode: ParamId,
    dist_weight: ParamId,
    dist_bias: ParamId,
    dist_missing: ParamId,
    weekday: ParamId,
    holiday: ParamId,
    statics: Vec<ParamId>,
    static_grn: Grn,
    vsn: Vsn,
}

#[derive(Clone, Debug)]
struct EncoderLayer {
    attn: MultiHeadAttention,
    norm: LayerNorm,
    ffn: Grn,
}

/// The insertion network. With `use_vsn` the per-position input is the
/// selection-network fusion of the token stream and six covariate streams;
/// without it, the token embedding plus positional encoding alone.
#[derive(Clone, Debug)]
pub struct Model {
    pub config: ModelConfig,
    pub store: ParamStore,
    token: ParamId,
    covariates: Option<CovariateEncoder>,
    layers: Vec<EncoderLayer>,
    slot_proj: Linear,
    slot_out: Linear,
}

/// Result of a batched forward pass. `slots[b]` are the logit rows that
/// belong to sample `b`.
pub struct Forward {
    pub logits: Var,
    pub slots: Vec<Range<usize>>,
    pub selection: Option<Var>,
    pub blocks: Vec<Block>,
}

/// Per-slot probabilities over the nine activities and `NO_INSERT`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotDistribution {
    pub probs: Vec<[f64; SLOT_CLASSES]>,
}

impl SlotDistribution {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Argmax per slot, lowest class index on ties.
    pub fn argmax(&self) -> Vec<usize> {
        self.probs
            .iter()
            .map(|p| {
                let mut best = 0;
                for k in 1..SLOT_CLASSES {
                    if p[k] > p[best] {
                        best = k;
                    }
                }
                best
            })
            .collect()
    }
}

/// Sinusoidal position table with `rows` rows of width `d`.
pub fn positional_encoding(positions: &[usize], d: usize) -> Tensor {
    let mut t = Tensor::zeros(&[positions.len(), d]);
    for (r, &pos) in positions.iter().enumerate() {
        let row = t.row_mut(r);
        for i in 0..d {
            let freq = 10000f64.powf((2 * (i / 2)) as f64 / d as f64);
            let angle = pos as f64 / freq;
            row[i] = if i % 2 == 0 { angle.sin() } else { angle.cos() };
        }
    }
    t
}

// Row-level inputs for a stacked batch.
#[derive(Default)]
struct Rows {
    token: Vec<usize>,
    position: Vec<usize>,
    arrival: Vec<usize>,
    departure: Vec<usize>,
    mode: Vec<usize>,
    dist: Vec<f64>,
    dist_missing: Vec<f64>,
    weekday: Vec<usize>,
    holiday: Vec<usize>,
    sample: Vec<usize>,
}

impl Rows {
    fn push_sentinel(&mut self, token: usize, pos: usize, day: &DaySequence, b: usize) {
        self.token.push(token);
        self.position.push(pos);
        self.arrival.push(0);
        self.departure.push(0);
        self.mode.push(0);
        self.dist.push(0.0);
        self.dist_missing.push(1.0);
        self.weekday.push(day.weekday as usize - 1);
        self.holiday.push(day.holiday as usize);
        self.sample.push(b);
    }
}

impl Model {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let d = config.d_m;
        let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
        let mut store = ParamStore::new();
        let token = store.insert("embed.token", uniform(&mut rng, TOKEN_VOCAB, d, EMBED_INIT))?;

        let covariates = if config.use_vsn {
            let bins = TIME_BINS as usize + 1;
            let mut table = |store: &mut ParamStore, name: &str, rows: usize| {
                store.insert(format!("embed.{name}"), uniform(&mut rng, rows, d, EMBED_INIT))
            };
            let arrival = table(&mut store, "arrival", bins)?;
            let departure = table(&mut store, "departure", bins)?;
            let mode = table(&mut store, "mode", MODE_CODES as usize + 1)?;
            let dist_weight = table(&mut store, "distance.weight", 1)?;
            let dist_missing = table(&mut store, "distance.missing", 1)?;
            let dist_bias = store.insert("embed.distance.bias", Tensor::zeros(&[d]))?;
            let weekday = table(&mut store, "weekday", 7)?;
            let holiday = table(&mut store, "holiday", 2)?;
            let statics = (0..config.covariates.d_s)
                .map(|k| table(&mut store, &format!("static{k}"), STATIC_LEVELS as usize))
                .collect::<Result<_>>()?;
            let static_grn = Grn::square(&mut store, "static_context", d, false, &mut rng)?;
            let vsn = Vsn::new(&mut store, "vsn", config.m_x(), d, &mut rng)?;
            Some(CovariateEncoder {
                arrival,
                departure,
                mode,
                dist_weight,
                dist_bias,
                dist_missing,
                weekday,
                holiday,
                statics,
                static_grn,
                vsn,
            })
        } else {
            None
        };

        let layers = (0..config.n_layers)
            .map(|l| {
                Ok(EncoderLayer {
                    attn: MultiHeadAttention::new(
                        &mut store,
                        &format!("layer{l}.attn"),
                        d,
                        config.heads,
                        config.d_attn,
                        config.d_val,
                        &mut rng,
                    )?,
                    norm: LayerNorm::new(&mut store, &format!("layer{l}.attn_norm"), d)?,
                    ffn: Grn::square(&mut store, &format!("layer{l}.ffn"), d, false, &mut rng)?,
                })
            })
            .collect::<Result<_>>()?;
        let slot_proj = Linear::new(&mut store, "slot.proj", 2 * d, d, &mut rng)?;
        let slot_out = Linear::new(&mut store, "slot.out", d, SLOT_CLASSES, &mut rng)?;
        Ok(Self {
            config,
            store,
            token,
            covariates,
            layers,
            slot_proj,
            slot_out,
        })
    }

    pub fn slot_out_bias(&self) -> ParamId {
        self.slot_out.bias
    }

    fn rows(&self, days: &[&DaySequence], pad_to: Option<usize>) -> Result<(Rows, Vec<Block>)> {
        let max_tokens = days.iter().map(|d| d.len()).max().unwrap_or(0);
        let width = match pad_to {
            Some(p) if p < max_tokens + 2 => {
                return Err(Error::Contract(format!(
                    "pad length {p} shorter than {} positions",
                    max_tokens + 2
                )))
            }
            Some(p) => Some(p),
            None => None,
        };
        let mut rows = Rows::default();
        let mut blocks = Vec::with_capacity(days.len());
        for (b, day) in days.iter().enumerate() {
            if day.len() > self.config.max_len {
                return Err(Error::Capacity {
                    len: day.len(),
                    max: self.config.max_len,
                });
            }
            day.validate()?;
            let start = rows.token.len();
            let valid = day.len() + 2;
            let len = width.unwrap_or(valid);
            rows.push_sentinel(BOS, 0, day, b);
            for (i, a) in day.activities.iter().enumerate() {
                rows.token.push(a.label.index());
                rows.position.push(i + 1);
                if a.observed {
                    rows.arrival.push(a.arr as usize);
                    rows.departure.push(a.dep as usize);
                    rows.mode.push(a.mode as usize);
                    rows.dist.push(a.dist.ln_1p());
                    rows.dist_missing.push(0.0);
                } else {
                    rows.arrival.push(0);
                    rows.departure.push(0);
                    rows.mode.push(0);
                    rows.dist.push(0.0);
                    rows.dist_missing.push(1.0);
                }
                rows.weekday.push(day.weekday as usize - 1);
                rows.holiday.push(day.holiday as usize);
                rows.sample.push(b);
            }
            for p in day.len() + 1..len {
                rows.push_sentinel(EOS, p, day, b);
            }
            blocks.push(Block { start, len, valid });
        }
        Ok((rows, blocks))
    }

    /// Stacked forward pass over several decoder states. With `pad_to`, every
    /// state occupies exactly that many positions (BOS and EOS included) and
    /// the extra positions are masked out of attention and of the slot head.
    pub fn forward(
        &self,
        tape: &mut Tape,
        days: &[&DaySequence],
        pad_to: Option<usize>,
        dropout: &mut Dropout,
    ) -> Result<Forward> {
        if days.is_empty() {
            return Err(Error::UndefinedInput("empty batch".into()));
        }
        let d = self.config.d_m;
        let (rows, blocks) = self.rows(days, pad_to)?;
        let n = rows.token.len();

        let table = tape.param(self.token);
        let tok = tape.gather_rows(table, &rows.token)?;
        let pe = tape.leaf(positional_encoding(&rows.position, d));
        let tok = tape.add(tok, pe)?;

        let (mut h, selection) = match &self.covariates {
            None => (tok, None),
            Some(cov) => {
                let lookup = |tape: &mut Tape, id: ParamId, idx: &[usize]| {
                    let t = tape.param(id);
                    tape.gather_rows(t, idx)
                };
                let arr = lookup(tape, cov.arrival, &rows.arrival)?;
                let dep = lookup(tape, cov.departure, &rows.departure)?;
                let mode = lookup(tape, cov.mode, &rows.mode)?;
                let wd = lookup(tape, cov.weekday, &rows.weekday)?;
                let hol = lookup(tape, cov.holiday, &rows.holiday)?;

                let x = tape.leaf(Tensor::matrix(n, 1, rows.dist.clone())?);
                let f = tape.leaf(Tensor::matrix(n, 1, rows.dist_missing.clone())?);
                let (w, e, bias) = (
                    tape.param(cov.dist_weight),
                    tape.param(cov.dist_missing),
                    tape.param(cov.dist_bias),
                );
                let dist = tape.linear(x, w, bias)?;
                let miss = tape.matmul(f, e)?;
                let dist = tape.add(dist, miss)?;

                let mut s = None;
                for (k, &id) in cov.statics.iter().enumerate() {
                    let idx: Vec<usize> =
                        days.iter().map(|day| day.static_codes[k] as usize - 1).collect();
                    let e = lookup(tape, id, &idx)?;
                    s = Some(match s {
                        None => e,
                        Some(acc) => tape.add(acc, e)?,
                    });
                }
                let cs = cov
                    .static_grn
                    .forward(tape, s.expect("static covariates"), None, dropout)?;
                let ctx = tape.gather_rows(cs, &rows.sample)?;

                let streams = [tok, arr, dep, mode, dist, wd, hol];
                let (fused, w) = cov.vsn.forward(tape, &streams, Some(ctx), dropout)?;
                (fused, Some(w))
            }
        };

        for layer in &self.layers {
            let a = layer.attn.forward(tape, h, &blocks)?;
            let a = dropout.apply(tape, a)?;
            let r = tape.add(h, a)?;
            let r = layer.norm.forward(tape, r)?;
            h = layer.ffn.forward(tape, r, None, dropout)?;
        }

        let mut left = Vec::new();
        let mut slots = Vec::with_capacity(days.len());
        for b in &blocks {
            let from = left.len();
            left.extend(b.start..b.start + b.valid - 1);
            slots.push(from..left.len());
        }
        let right: Vec<usize> = left.iter().map(|i| i + 1).collect();
        let l = tape.gather_rows(h, &left)?;
        let r = tape.gather_rows(h, &right)?;
        let pair = tape.concat_cols(&[l, r])?;
        let s = self.slot_proj.forward(tape, pair)?;
        let s = tape.elu(s);
        let logits = self.slot_out.forward(tape, s)?;
        Ok(Forward {
            logits,
            slots,
            selection,
            blocks,
        })
    }

    /// Slot distributions for one decoder state, dropout disabled.
    pub fn slot_distribution(&self, day: &DaySequence) -> Result<SlotDistribution> {
        Ok(self.slot_distributions(&[day])?.remove(0))
    }

    /// Slot distributions for several states at once, dropout disabled.
    pub fn slot_distributions(&self, days: &[&DaySequence]) -> Result<Vec<SlotDistribution>> {
        let mut tape = Tape::new(&self.store);
        let fwd = self.forward(&mut tape, days, None, &mut Dropout::Off)?;
        let probs = tape.softmax(fwd.logits, 1)?;
        let p = tape.value(probs);
        Ok(fwd
            .slots
            .iter()
            .map(|range| SlotDistribution {
                probs: range
                    .clone()
                    .map(|r| p.row(r).try_into().expect("slot width"))
                    .collect(),
            })
            .collect())
    }

    /// Selection weights per position (BOS and EOS included), or `None` for
    /// the baseline.
    pub fn selection_weights(&self, day: &DaySequence) -> Result<Option<crate::layers::SelectionWeights>> {
        let mut tape = Tape::new(&self.store);
        let fwd = self.forward(&mut tape, &[day], None, &mut Dropout::Off)?;
        Ok(fwd
            .selection
            .map(|w| crate::layers::SelectionWeights::from_tensor(tape.value(w))))
    }
}
