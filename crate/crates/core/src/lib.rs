//! Batch analytics for county-level epidemic case data: profile loading and
//! clustering, first-digit (Benford) audits of reported counts, seasonal
//! ARIMA forecasting, and a pipeline tying them together.

pub mod benford;
pub mod cluster;
pub mod dataset;
pub mod error;
pub mod pipeline;
pub mod sarima;
pub mod stats;

pub use error::{Error, Result};
