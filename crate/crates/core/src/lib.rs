//! Forensic decision toolkit: provenance manifest verification, watermark
//! score adapters, Dempster–Shafer fusion with regime-specific decisions,
//! weight calibration and the statistics behind the evaluation tables.

pub mod audit;
pub mod benchmark;
pub mod calibrate;
pub mod canonical;
pub mod decide;
pub mod detect;
pub mod manifest;
pub mod model;
pub mod par;
pub mod report;
pub mod seed;
pub mod stats;
