//! Command-line frontend: configuration loading, per-command drivers,
//! run manifests, and the small amount of plotting the report command
//! needs. The statistics live in replyscope-core; this crate only
//! wires corpora and settings into it and formats what comes back.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod plot;
pub mod trend;

pub use config::RunConfig;

/// Environment variable that caps the worker pool.
pub const WORKERS_ENV: &str = "REPLYSCOPE_WORKERS";

/// Sizes the global worker pool from REPLYSCOPE_WORKERS when set to a
/// positive integer. Later calls (or an unset variable) keep whatever
/// pool already exists, so this is safe to call once at startup.
pub fn init_workers() {
    if let Ok(raw) = std::env::var(WORKERS_ENV) {
        if let Ok(n) = raw.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}
