//! Experiment grids: variant expansion, repetition loop, derived seeds, aggregation and
//! the machine-readable outputs.

mod grid;
mod seed;
mod spec;
mod table;

pub use grid::{prepare_corpus, run_experiment, run_grid, Corpus};
pub use seed::{splitmix64, sub_seed, DATA_STREAM, SEED_DERIVATION};
pub use spec::{DataSource, ExperimentSpec, Variant, VariantKind};
pub use table::{
    boxplot, boxplot_csv, emit_boxplot_data, mean_sd, quantile, summarize, summary_csv, write_outputs,
    BoxplotRecord, ResultRow, ResultsTable, SummaryRow, METRICS, SCHEMA_VERSION,
};
