//! Configuration loading: TOML overlay on the solver defaults plus an
//! environment override for the cache directory.

use std::path::{Path, PathBuf};

use warp_soliton_core::SolverConfig;

use crate::{CliError, CliResult};

/// Environment variable overriding the profile-cache directory.
pub const CACHE_DIR_ENV: &str = "WARP_SOLITON_CACHE_DIR";

/// Builds the effective solver configuration: defaults, overridden by the
/// optional TOML file (unknown keys rejected), with the cache directory
/// overridable by `WARP_SOLITON_CACHE_DIR`.
pub fn load(config_path: Option<&Path>) -> CliResult<SolverConfig> {
    let mut config = match config_path {
        None => SolverConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            // SolverConfig deserializes with serde defaults, so a partial
            // TOML file overlays only the keys it names.
            toml::from_str(&text).map_err(|e| {
                CliError::Usage(format!("invalid config {}: {e}", path.display()))
            })?
        }
    };
    if let Some(dir) = std::env::var_os(CACHE_DIR_ENV) {
        config.cache_dir = Some(PathBuf::from(dir));
    }
    config.validate().map_err(CliError::from)?;
    Ok(config)
}
