//! Sweep driver for `optomech-core`: JSON run configurations, task dispatch with
//! row-level parallelism, and CSV / JSON result tables.

pub mod config;
pub mod error;
pub mod table;
pub mod tasks;

pub use config::{load_config, parse_config, Format, RunConfig, Task};
pub use error::{QptError, Result};
pub use table::ResultTable;
pub use tasks::run;

/// Process exit codes.
pub mod exit {
    pub const COMPLETE: i32 = 0;
    pub const FAILED: i32 = 1;
    pub const FLAGGED: i32 = 3;
}
