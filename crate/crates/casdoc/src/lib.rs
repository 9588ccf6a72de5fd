//! File, HTTP and command-line front end for `casdoc-core`.

pub mod analyze;
pub mod config;
pub mod convert;
pub mod files;
pub mod lint;
pub mod serve;

/// Process exit codes shared by every command.
pub mod exit {
    pub const OK: i32 = 0;
    /// Some input had errors; the others were still processed.
    pub const FAILURES: i32 = 1;
    /// The command could not run at all.
    pub const FATAL: i32 = 2;
}
