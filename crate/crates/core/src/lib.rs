//! Small-file metadata scalability benchmark.
//!
//! Creates a `folders x subfolders x files` tree of checksummed files on a
//! target filesystem, reads it back, and reports per-file latency
//! statistics, folder throughput trends and storage overheads.
//!
//! Module map:
//! - [`workload`]: schedule, size law, frame format
//! - [`backend`]: real and in-memory storage targets
//! - [`creator`] / [`reader`]: the two timed phases
//! - [`metrics`]: trackers, histograms, trend sampling, derived metrics
//! - [`storage`]: before/after space accounting
//! - [`report`]: JSON, tables and CSV
//! - [`advise`]: filesystem preparation hints

pub mod advise;
pub mod backend;
pub mod batch;
pub mod creator;
pub mod metrics;
pub mod pipeline;
pub mod reader;
pub mod reference;
pub mod report;
pub mod sink;
pub mod storage;
pub mod workload;

pub use backend::{FsBackend, MockConfig, MockFs, RealFs};
pub use creator::{run_create, CreatePhaseResult};
pub use metrics::{compute_derived, DerivedMetrics};
pub use reader::{run_read, ReadPhaseResult};
pub use report::RunReport;
pub use workload::{plan_schedule, FileSizeDistribution, RunSchedule};
