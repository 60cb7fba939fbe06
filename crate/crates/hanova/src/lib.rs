//! Command-line companion of `hanova-core`: CSV ingestion, run orchestration,
//! the classical table, the variance-component display (text and SVG) and
//! JSON/CSV exports.

pub mod export;
pub mod io;
pub mod render;
pub mod run;

pub use export::{render, write_csv, write_json};
pub use io::{read_csv, read_csv_from, InputError};
pub use render::{render_classical_table, render_vc_svg, render_vc_text};
pub use run::{analyze, run, Method, OutputFormat, RunConfig, RunError, RunResults};
