//! Loss-surface bookkeeping and the analysis statistics: edit distance,
//! Spearman rank correlation, curve-shape statistics, CSV and SVG export.

mod curves;
mod levenshtein;
mod spearman;
mod surface;
mod svg;

pub use curves::{argmin_iteration, first_rise, is_non_decreasing, median3, onset_iterations, rebound_ratio};
pub use levenshtein::levenshtein;
pub use spearman::{
    average_ranks, final_loss_vs_history, spearman, spearman_with, CorrelationResult, DEFAULT_LEVELS,
    DEFAULT_PERMUTATIONS, DEFAULT_PERMUTATION_SEED,
};
pub use surface::{
    export_surface_csv, import_surface_csv, row_sum, sum_over_history, write_csv_row, LossSurface, SUM_LOSS_CSV_HEADER,
    SURFACE_CSV_HEADER,
};
pub use svg::{loss_surface_svg, render_loss_svg, render_series_svg, Series};
