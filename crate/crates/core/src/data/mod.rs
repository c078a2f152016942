//! Activity vocabulary, person-day records, the synthetic generator, masking,
//! alignment, and JSON-lines persistence.

pub mod activity;
pub mod align;
pub mod generator;
pub mod io;
pub mod masking;
pub mod sequence;

pub use activity::{category_for_naics, ActivityCategory, NAICS_CATEGORIES};
pub use align::{align_subsequence, check_anchors, is_subsequence};
pub use generator::{generate_population, GeneratorConfig, Regime, RegimeConfig, Regimes};
pub use masking::{build_samples, mask_sequence, split_samples};
pub use sequence::{Activity, DaySequence, RecoverySample, SampleRecord};
