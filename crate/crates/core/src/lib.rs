//! Quality-aware adaptive OCR pipeline and benchmark harness for retail bill
//! images.

pub mod clock;
pub mod cnn;
pub mod ensemble;
pub mod feedback;
pub mod harness;
pub mod imagecore;
pub mod metrics;
pub mod ocr;
pub mod postcorrect;
pub mod router;
pub mod synth;
