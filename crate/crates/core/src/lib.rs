//! Leak-free forecasting of annual series: moving-front empirical wavelet
//! decomposition feeding an LSTM, with walk-forward validation.

pub mod emd;
pub mod error;
pub mod ewt;
pub mod framing;
pub mod lstm;
pub mod modes;
pub mod moving_front;
pub mod pipeline;
pub mod series;
pub mod synthetic;

pub use error::{Error, ErrorClass, Result};
pub use framing::{frame, last_window, split, SplitSpec, SupervisedSet, YearRange};
pub use modes::{mode_sd_profile, ModeMatrix, SdProfile};
pub use moving_front::{build_endpoint_matrix, extend_endpoint_matrix, leak_demo, DecomposerConfig, EndpointMatrix, LeakReport};
pub use series::{compute_metrics, descriptive_stats, load_csv, Metrics, Scaler, Stats, TimeSeries};
pub use pipeline::{PipelineConfig, RunReport};
