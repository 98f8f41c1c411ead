//! File formats, batch execution and reports.

pub mod compare;
pub mod model;
pub mod query;
pub mod slice;
pub mod stats;

pub use compare::{compare_methods, CompareReport, Method, MethodResult, Oracle, Reference};
pub use model::{load_model, parse_model, save_model, serialize_model, ModelDoc, ValidationReport};
pub use query::{
    parse_queries, run_queries, run_queries_with_threads, write_records, OutputRecord, Rule,
};
pub use slice::{write_pgm, write_values, SliceSpec};
pub use stats::{StatsReport, TABLE_ROWS};
