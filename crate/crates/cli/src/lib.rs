//! Configuration, snapshot I/O and the driver behind the `nsk` binary.

pub mod config;
pub mod driver;
pub mod output;
pub mod snapshot;
pub mod verify;

pub use config::{build_initial, parse_config, Config, ConfigError, RunConfig, StudyConfig};
pub use driver::CliError;
pub use snapshot::{read_snapshot, write_snapshot, Snapshot, SnapshotFormat};
