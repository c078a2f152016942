use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts of static, known and unknown covariates. The encoder is built for
/// the fixed schema of four demographic codes, two day-level codes (weekday,
/// holiday) and four per-activity features (arrival, departure, mode,
/// distance).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CovariateSchema {
    pub d_s: usize,
    pub d_u: usize,
    pub d_v: usize,
}

impl CovariateSchema {
    pub const N_C: usize = 10;

    pub const STANDARD: Self = Self {
        d_s: 4,
        d_u: 2,
        d_v: 4,
    };

    pub fn total(&self) -> usize {
        self.d_s + self.d_u + self.d_v
    }
}

impl Default for CovariateSchema {
    fn default() -> Self {
        Self::STANDARD
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub d_m: usize,
    pub heads: usize,
    pub d_attn: usize,
    pub d_val: usize,
    pub n_layers: usize,
    pub covariates: CovariateSchema,
    /// `false` gives the covariate-free baseline.
    pub use_vsn: bool,
    pub dropout: f64,
    pub max_rounds: usize,
    /// Maximum number of activity tokens in a decoder state (sentinels excluded).
    pub max_len: usize,
    /// Seed for parameter initialization.
    pub init_seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d_m: 64,
            heads: 4,
            d_attn: 16,
            d_val: 16,
            n_layers: 2,
            covariates: CovariateSchema::STANDARD,
            use_vsn: true,
            dropout: 0.1,
            max_rounds: 8,
            max_len: 32,
            init_seed: 0,
        }
    }
}

const MAX_HEAD_WIDTH: usize = 4096;

impl ModelConfig {
    pub fn baseline() -> Self {
        Self {
            use_vsn: false,
            ..Self::default()
        }
    }

    /// Number of per-position input streams fed to the selection network.
    pub fn m_x(&self) -> usize {
        if self.use_vsn {
            1 + self.covariates.d_u + self.covariates.d_v
        } else {
            1
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.d_m == 0 || self.heads == 0 || self.d_attn == 0 || self.d_val == 0 {
            return bad("d_m, heads, d_attn and d_val must be positive".into());
        }
        if self.heads * self.d_attn > MAX_HEAD_WIDTH || self.heads * self.d_val > MAX_HEAD_WIDTH {
            return bad(format!("heads x head width exceeds {MAX_HEAD_WIDTH}"));
        }
        if self.covariates.total() != CovariateSchema::N_C {
            return bad(format!(
                "covariate counts sum to {}, expected {}",
                self.covariates.total(),
                CovariateSchema::N_C
            ));
        }
        if self.covariates != CovariateSchema::STANDARD {
            return bad(format!(
                "unsupported covariate schema {:?}; the encoder expects {:?}",
                self.covariates,
                CovariateSchema::STANDARD
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if self.max_len == 0 {
            return bad("max_len must be positive".into());
        }
        Ok(())
    }

    /// Names of fields that differ from `other`.
    pub fn diff(&self, other: &Self) -> Vec<String> {
        let mut out = Vec::new();
        macro_rules! cmp {
            ($($f:ident),*) => {$(
                if self.$f != other.$f {
                    out.push(stringify!($f).to_string());
                }
            )*};
        }
        cmp!(d_m, heads, d_attn, d_val, n_layers, covariates, use_vsn, dropout, max_rounds, max_len, init_seed);
        out
    }

    /// Fields that change the parameter layout.
    pub fn structural_diff(&self, other: &Self) -> Vec<String> {
        let mut out = Vec::new();
        macro_rules! cmp {
            ($($f:ident),*) => {$(
                if self.$f != other.$f {
                    out.push(stringify!($f).to_string());
                }
            )*};
        }
        cmp!(d_m, heads, d_attn, d_val, n_layers, covariates, use_vsn);
        out
    }
}
