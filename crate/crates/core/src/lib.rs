//! Audits for endogenous bias in spatial analysis.
//!
//! Each audit targets one stage of a spatial-analysis workflow:
//!
//! | level          | module      | question                                                      |
//! |----------------|-------------|---------------------------------------------------------------|
//! | data           | [`simpson`] | does pooling spatially heterogeneous groups hide or flip a trend? |
//! | modeling       | [`gwr`]     | do GWR errors pile up where the fitted coefficients jump?      |
//! | modeling       | [`kde`]     | does the bandwidth bend gradients or invent density centres?   |
//! | interpretation | [`maup`]    | does the top-quantile map survive a change of zoning?          |
//! | interpretation | [`access`]  | do group averages of 3SFCA accessibility hide disparities?     |
//!
//! [`synth`] generates seeded test data for every audit, [`report`] and
//! [`svg`] turn results into `report.json` plus figures, and [`cli`] wires
//! it all into the `geobias` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod access;
pub mod cli;
pub mod data;
pub mod error;
pub mod gwr;
pub mod kde;
pub mod maup;
pub mod pipeline;
pub mod report;
pub mod simpson;
pub mod stats;
pub mod svg;
pub mod synth;

pub use error::{Error, Result};
