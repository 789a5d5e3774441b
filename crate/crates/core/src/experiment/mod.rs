//! Configuration, scenario runners, reports and self-validation.

pub mod config;
pub mod record;
pub mod scenario;
pub mod validate;

pub use config::{Correction, ExperimentConfig, InputSpec, OutputFormat, OutputSpec, Scenario, Shots, SCHEMA_VERSION};
pub use record::{ExperimentRecord, Metadata, RecordErrors, TeleportValues};
pub use scenario::{measure, run_characterize, run_fit, run_teleport, write_fit};
pub use validate::{run_validate, CheckResult, ValidationReport};
