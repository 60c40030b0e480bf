//! Content-addressed cache for ground-state profiles.
//!
//! Entries are keyed by a digest of (schema, n_max, d, p, tolerances), so a
//! resolution or tolerance change is a cache miss by construction.  A stored
//! entry carries a digest of its own coefficients and is re-validated
//! against the collocation residual before reuse; any corruption falls back
//! to recomputation with a warning.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use warp_soliton_core::cheb_basis::{collocation_nodes, SpectralFunction, SPECTRAL_SCHEMA};
use warp_soliton_core::ground_state::{residual_at, solve_ground_state, GroundState};
use warp_soliton_core::SolverConfig;

use crate::CliResult;

/// Residual ceiling for accepting a cached profile: a genuine solution sits
/// at the Newton tolerance (≤ 1e-12), so anything above this is corrupt.
const CACHE_RESIDUAL_CEILING: f64 = 1e-6;

#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    schema: String,
    d: usize,
    p: f64,
    profile: SpectralFunction,
    residual_norm: f64,
    newton_iters: usize,
    residual_history: Vec<f64>,
    /// Hex SHA-256 of the serialized profile, guarding against tampering.
    digest: String,
}

const ENTRY_SCHEMA: &str = "warp-soliton/profile-cache-v1";

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

fn profile_digest(profile: &SpectralFunction) -> String {
    let ser = serde_json::to_string(profile).expect("profile serialization cannot fail");
    sha256_hex(ser.as_bytes())
}

/// Cache path for the given problem and resolution, or None when caching is
/// disabled.
fn entry_path(config: &SolverConfig, n_max: usize, d: usize, p: f64) -> Option<PathBuf> {
    let dir = config.cache_dir.as_ref()?;
    let key = format!(
        "schema={SPECTRAL_SCHEMA};n_max={n_max};d={d};p={p:e};newton_tol={:e};fixedpoint_tol={:e};eig_tol={:e}",
        config.newton_tol, config.fixedpoint_tol, config.eig_tol
    );
    Some(dir.join(format!("{}.json", sha256_hex(key.as_bytes()))))
}

/// Validates and unpacks a cache entry; `None` means "treat as miss".
fn validate(entry: CacheEntry, n_max: usize, d: usize, p: f64) -> Option<GroundState> {
    if entry.schema != ENTRY_SCHEMA || entry.d != d || entry.p != p {
        eprintln!("warning: cached profile metadata does not match; recomputing");
        return None;
    }
    if entry.profile.n_max() != n_max {
        eprintln!("warning: cached profile resolution does not match; recomputing");
        return None;
    }
    if entry.digest != profile_digest(&entry.profile) {
        eprintln!("warning: cached profile digest mismatch; recomputing");
        return None;
    }
    let nodes = collocation_nodes(n_max - 2);
    let worst = nodes
        .nodes()
        .iter()
        .map(|&x| residual_at(&entry.profile, x).abs())
        .fold(0.0f64, f64::max);
    if !(worst < CACHE_RESIDUAL_CEILING) {
        eprintln!("warning: cached profile fails residual validation ({worst:.3e}); recomputing");
        return None;
    }
    Some(GroundState {
        profile: entry.profile,
        d,
        p,
        residual_norm: entry.residual_norm,
        newton_iters: entry.newton_iters,
        residual_history: entry.residual_history,
    })
}

fn try_load(config: &SolverConfig, n_max: usize, d: usize, p: f64) -> Option<GroundState> {
    let path = entry_path(config, n_max, d, p)?;
    let text = std::fs::read_to_string(&path).ok()?;
    match serde_json::from_str::<CacheEntry>(&text) {
        Ok(entry) => validate(entry, n_max, d, p),
        Err(e) => {
            eprintln!("warning: corrupt cache entry {}: {e}; recomputing", path.display());
            None
        }
    }
}

fn store(config: &SolverConfig, gs: &GroundState) {
    let Some(path) = entry_path(config, gs.profile.n_max(), gs.d, gs.p) else {
        return;
    };
    let entry = CacheEntry {
        schema: ENTRY_SCHEMA.to_string(),
        d: gs.d,
        p: gs.p,
        digest: profile_digest(&gs.profile),
        profile: gs.profile.clone(),
        residual_norm: gs.residual_norm,
        newton_iters: gs.newton_iters,
        residual_history: gs.residual_history.clone(),
    };
    let write = || -> std::io::Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let text = serde_json::to_string_pretty(&entry).expect("entry serialization cannot fail");
        std::fs::write(&path, text)
    };
    if let Err(e) = write() {
        eprintln!("warning: cannot write cache entry {}: {e}", path.display());
    }
}

/// Returns the ground state for (d, p) at the configured resolution, served
/// from the cache when possible.
pub fn obtain_ground_state(config: &SolverConfig, d: usize, p: f64) -> CliResult<GroundState> {
    if let Some(gs) = try_load(config, config.n_max, d, p) {
        return Ok(gs);
    }
    let gs = solve_ground_state(d, p, config)?;
    store(config, &gs);
    Ok(gs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use warp_soliton_core::cheb_basis::Prefactor;

    #[test]
    fn digest_round_trips_through_serialization() {
        let profile = SpectralFunction::new(
            5,
            vec![-0.018030432084215325, 0.11063948332824558, 0.0009015172835784254],
            Prefactor::GroundStateForm,
        );
        let before = profile_digest(&profile);
        let text = serde_json::to_string(&profile).unwrap();
        let back: SpectralFunction = serde_json::from_str(&text).unwrap();
        let after = profile_digest(&back);
        println!("text: {text}");
        println!("re-serialized: {}", serde_json::to_string(&back).unwrap());
        assert_eq!(before, after);
    }

}
