//! Data ingestion, preprocessing, synthetic data, metrics and grid export.

pub mod grid;
pub mod io;
pub mod metrics;
pub mod preprocess;
pub mod synth;

pub use grid::{density_grid, GridCell};
pub use io::{load_csv, read_csv, write_dataset_csv, write_grid_csv, write_scores_csv, LabelColumn};
pub use metrics::roc_auc;
pub use preprocess::{minmax_scale, shingle, shingle_labels};
pub use synth::{gen_synthetic, SyntheticSet};
