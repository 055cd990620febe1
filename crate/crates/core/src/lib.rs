//! Two-layer synergy-area screening of adverse-event (AE) safety data.
//!
//! AE variables are grouped into clinically meaningful synergy areas (SAs).
//! Inside each SA the raw p-values are Holm-adjusted and the SA is summarised
//! by its `l`-th smallest adjusted p-value, so an SA can only signal when at
//! least `l` of its AEs do. Across SAs the summaries are turned into
//! Benjamini–Hochberg (or Benjamini–Yekutieli) q-values and thresholded at
//! the nominal FDR level.
//!
//! Module map:
//!
//! - [`stats`]: normal tail probabilities and the pooled two-proportion test.
//! - [`multiplicity`]: Holm, BH and BY adjustments.
//! - [`engine`]: the screening pipeline and the direct (single-layer) comparators.
//! - [`sim`]: Monte Carlo laboratory for error-rate studies under compound symmetry.
//! - [`data_io`]: incidence-table ingestion, reports and plot tables.

pub mod data_io;
pub mod engine;
mod error;
pub mod linalg;
pub mod multiplicity;
pub mod sim;
pub mod stats;

pub use error::{Result, SafeError};
