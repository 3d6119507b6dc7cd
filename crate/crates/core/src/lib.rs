//! Zero-shot scene classification over precomputed contrastive image/text
//! embeddings, with late fusion of captions and the tooling to validate the
//! result by hand: frequency and coverage reports, seeded per-class sampling,
//! threshold sweeps and a small annotation service.

pub mod classifier;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod labels;
pub mod numeric;
pub mod report;
pub mod serve;
pub mod synth;

pub use error::{Error, Result};
