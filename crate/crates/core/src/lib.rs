//! Evaluation of frame-level voice-activity scores against reference
//! speaker annotations, and few-instance adaptation of the speech/non-speech
//! threshold from the first labelled minutes of a recording.

pub mod adapt;
pub mod analysis;
pub mod binarize;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod synth;

pub use error::{Error, Result};
