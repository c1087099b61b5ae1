//! Files in and out: the JSON weight format, the dataset CSV, report CSVs,
//! SVG plots, and the run helpers the CLI calls.

mod dataset;
mod model;
mod report;
mod run;
mod svg;

pub use dataset::{load_dataset, load_reference_logits, parse_dataset, write_dataset};
pub use model::{load_model, model_to_json, parse_model, save_model, sha256_hex};
pub use report::{
    format_float, parse_records_csv, records_csv, summary_csv, tradeoff_csv, write_report,
};
pub use run::{
    run_attack, run_clever, run_evaluate, run_tradeoff, CleverRow, RunConfig, SecondChoice,
};
pub use svg::{distances_svg, tradeoff_svg};
