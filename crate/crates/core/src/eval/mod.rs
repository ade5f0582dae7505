//! Forecast metrics, model cost accounting, and the ablation / horizon harness.

mod cost;
mod harness;
mod metrics;

pub use cost::{cost_report, count_macs, count_macs_at, count_params, CostReport};
pub use harness::*;
pub use metrics::{mae, mape, mse, LotMetrics, MetricsAccumulator, MetricsReport, DEFAULT_MAPE_EPS};
