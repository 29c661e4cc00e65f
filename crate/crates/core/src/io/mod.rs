//! Run configuration, initial data and field files.

pub mod config;
pub mod field_io;
pub mod initial;

pub use config::{parse_config, parse_config_with, RunConfig};
pub use field_io::{read_field, read_field_for, write_field};
pub use initial::{make_initial_data, InitialKind};
