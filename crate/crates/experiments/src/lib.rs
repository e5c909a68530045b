//! Command-line front end and figure-data pipeline built on `shortcut_core`.
//!
//! Every command produces one or more [`table::Table`]s. Tables are written as
//! CSV (optionally mirrored as JSON) together with a [`manifest::RunManifest`]
//! that records every value that affected the output.

pub mod cli;
pub mod commands;
pub mod error;
pub mod manifest;
pub mod preset;
pub mod table;

pub use commands::{RunOutput, Settings};
pub use error::AppError;
pub use preset::{Preset, PresetName, DEFAULT_SEED};
pub use table::{Cell, Table};
