//! Implementations of the subcommands: each builds its pipeline from the
//! core library, prints a JSON summary to standard output, and (for
//! commands with file outputs) writes a run manifest referencing every
//! output by digest.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use warp_soliton_core::cheb_basis::SPECTRAL_SCHEMA;
use warp_soliton_core::geometry::{estimate_v0d, WarpingFunction, WARP_SCHEMA};
use warp_soliton_core::ground_state::{mass, GroundState};
use warp_soliton_core::linearized::{
    build_l, essential_edge, low_spectrum, Alpha, GradedGrid, Variant,
};
use warp_soliton_core::manifold_soliton::{
    curved_residual, fixed_point_rho, manifold_mass, strauss_check, vk_pair_for, vk_sign,
};
use warp_soliton_core::stability::{self, StabilityWorkspace};
use warp_soliton_core::SolverConfig;

use crate::{cache, config, Cli, CliError, CliResult, Command, VariantArg};

/// Schema tag of the ρ-profile output file.
pub const RHO_SCHEMA: &str = "warp-soliton/rho-v1";
/// Schema tag of the run manifest.
pub const MANIFEST_SCHEMA: &str = "warp-soliton/manifest-v1";

/// First grid step of the graded finite-difference grid (matches the
/// operator-module default).
const FIRST_STEP: f64 = 1e-4;

pub fn run(cli: &Cli, argv: &[OsString]) -> CliResult<()> {
    let started = Instant::now();
    let cfg = config::load(cli.config.as_deref())?;
    let (mut summary, outputs) = match &cli.command {
        Command::GroundState { nmax, out } => ground_state_cmd(&cfg, *nmax, out.as_deref())?,
        Command::Constants => constants_cmd(&cfg)?,
        Command::Kappa { c1, c2 } => kappa_cmd(&cfg, *c1, *c2)?,
        Command::Scan {
            c1,
            c2,
            steps,
            out,
            jobs,
        } => scan_cmd(&cfg, c1, c2, *steps, out, *jobs)?,
        Command::Rho { alpha, warp, out } => rho_cmd(&cfg, *alpha, warp, out.as_deref())?,
        Command::Vk { warp, alpha } => vk_cmd(&cfg, warp, *alpha)?,
        Command::Spectrum {
            variant,
            alpha,
            warp,
            k,
        } => spectrum_cmd(&cfg, *variant, alpha, warp, *k)?,
        Command::Geometry { warp, d } => geometry_cmd(warp, *d)?,
    };
    if let Some(first) = outputs.first() {
        let manifest_path = manifest_path_for(first);
        write_manifest(&manifest_path, argv, &cfg, started.elapsed().as_secs_f64(), &outputs)?;
        if let Value::Object(map) = &mut summary {
            map.insert("manifest".into(), json!(display(&manifest_path)));
        }
    }
    println!("{}", pretty(&summary));
    Ok(())
}

// ---------------------------------------------------------------------------
// shared plumbing
// ---------------------------------------------------------------------------

fn pretty(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("JSON serialization cannot fail")
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn load_warp(path: &Path) -> CliResult<WarpingFunction> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read warp file {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("malformed warp file {}: {e}", path.display())))
}

fn graded_grid(cfg: &SolverConfig) -> Arc<GradedGrid> {
    Arc::new(GradedGrid::new(cfg.grid_points, FIRST_STEP, cfg.r_max))
}

fn ground_state(cfg: &SolverConfig) -> CliResult<GroundState> {
    cache::obtain_ground_state(cfg, 2, 3.0)
}

fn workspace(cfg: &SolverConfig) -> CliResult<(GroundState, StabilityWorkspace)> {
    let gs = ground_state(cfg)?;
    let ws = stability::prepare(&gs, cfg)?;
    Ok((gs, ws))
}

fn manifest_path_for(out: &Path) -> PathBuf {
    let mut os = out.as_os_str().to_os_string();
    os.push(".manifest.json");
    PathBuf::from(os)
}

#[derive(Serialize)]
struct OutputRef {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    schema: &'a str,
    command: Vec<String>,
    config: &'a SolverConfig,
    schema_versions: Value,
    wall_time_seconds: f64,
    outputs: Vec<OutputRef>,
}

fn write_manifest(
    path: &Path,
    argv: &[OsString],
    cfg: &SolverConfig,
    wall_time_seconds: f64,
    outputs: &[PathBuf],
) -> CliResult<()> {
    let refs = outputs
        .iter()
        .map(|p| -> CliResult<OutputRef> {
            let bytes = std::fs::read(p)
                .map_err(|e| CliError::Usage(format!("cannot digest {}: {e}", p.display())))?;
            Ok(OutputRef {
                path: display(p),
                sha256: sha256_hex(&bytes),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let manifest = RunManifest {
        schema: MANIFEST_SCHEMA,
        command: argv.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
        config: cfg,
        schema_versions: json!({
            "manifest": MANIFEST_SCHEMA,
            "rho": RHO_SCHEMA,
            "spectral": SPECTRAL_SCHEMA,
            "warp": WARP_SCHEMA,
        }),
        wall_time_seconds,
        outputs: refs,
    };
    write_text(path, &format!("{}\n", pretty(&manifest)))
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

type CommandOutput = (Value, Vec<PathBuf>);

fn ground_state_cmd(
    cfg: &SolverConfig,
    nmax: Option<usize>,
    out: Option<&Path>,
) -> CliResult<CommandOutput> {
    let mut cfg = cfg.clone();
    if let Some(n) = nmax {
        cfg.n_max = n;
        cfg.validate()?;
    }
    let gs = ground_state(&cfg)?;
    let total_mass = mass(&gs)?;
    let f0 = gs.profile.to_radial(0.0);
    let mut outputs = Vec::new();
    if let Some(path) = out {
        let mut file = serde_json::to_value(&gs.profile).expect("profile serialization");
        if let Value::Object(map) = &mut file {
            map.insert("mass".into(), json!(total_mass));
            map.insert("residual_norm".into(), json!(gs.residual_norm));
            map.insert("f0".into(), json!(f0));
        }
        write_text(path, &format!("{}\n", pretty(&file)))?;
        outputs.push(path.to_path_buf());
    }
    let summary = json!({
        "command": "ground-state",
        "n_max": gs.profile.n_max(),
        "f0": f0,
        "mass": total_mass,
        "residual_norm": gs.residual_norm,
        "newton_iters": gs.newton_iters,
        "out": out.map(display),
    });
    Ok((summary, outputs))
}

fn constants_cmd(cfg: &SolverConfig) -> CliResult<CommandOutput> {
    let (_, ws) = workspace(cfg)?;
    let c = &ws.constants;
    let summary = json!({
        "command": "constants",
        "b1": c.b1,
        "b1_over_2pi": c.b1 / std::f64::consts::TAU,
        "b1_fd": c.b1_fd,
        "b2_direct": c.b2_direct,
        "b2_ibp": c.b2_ibp,
        "diagnostics": serde_json::to_value(&c.diagnostics).expect("diagnostics serialization"),
    });
    Ok((summary, Vec::new()))
}

fn kappa_cmd(cfg: &SolverConfig, c1: f64, c2: f64) -> CliResult<CommandOutput> {
    if !(c1.is_finite() && c2.is_finite()) {
        return Err(CliError::Usage("c1 and c2 must be finite".into()));
    }
    let (_, ws) = workspace(cfg)?;
    let report = ws.kappa(c1, c2);
    let summary = json!({
        "command": "kappa",
        "c1": c1,
        "c2": c2,
        "kappa": report.kappa,
        "b1": report.b1,
        "b2_direct": report.b2_direct,
        "b2_ibp": report.b2_ibp,
        "classification": serde_json::to_value(report.classification).expect("classification"),
    });
    Ok((summary, Vec::new()))
}

fn parse_range(s: &str, name: &str) -> CliResult<(f64, f64)> {
    let err = || {
        CliError::Usage(format!(
            "--{name} expects a range A:B of finite numbers, got {s:?}"
        ))
    };
    let (lo, hi) = s.split_once(':').ok_or_else(err)?;
    let lo: f64 = lo.trim().parse().map_err(|_| err())?;
    let hi: f64 = hi.trim().parse().map_err(|_| err())?;
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(err());
    }
    Ok((lo, hi))
}

fn scan_cmd(
    cfg: &SolverConfig,
    c1: &str,
    c2: &str,
    steps: usize,
    out: &Path,
    jobs: Option<usize>,
) -> CliResult<CommandOutput> {
    let c1_range = parse_range(c1, "c1")?;
    let c2_range = parse_range(c2, "c2")?;
    if jobs == Some(0) {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let (_, ws) = workspace(cfg)?;
    let rows = match jobs {
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot build worker pool: {e}")))?;
            pool.install(|| ws.scan(c1_range, c2_range, steps))?
        }
        None => ws.scan(c1_range, c2_range, steps)?,
    };

    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["c1", "c2", "kappa", "classification"])
        .and_then(|_| {
            rows.iter().try_for_each(|row| {
                writer.write_record([
                    row.warp_params.0.to_string(),
                    row.warp_params.1.to_string(),
                    row.kappa.to_string(),
                    row.classification.to_string(),
                ])
            })
        })
        .map_err(|e| CliError::Usage(format!("cannot encode CSV: {e}")))?;
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Usage(format!("cannot encode CSV: {e}")))?;
    std::fs::write(out, &bytes)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", out.display())))?;

    let count = |c: stability::Classification| rows.iter().filter(|r| r.classification == c).count();
    // the boundary curve c₂ = −c₁²·b₁/b₂ sampled over the scanned c₁ values
    let boundary_samples: Vec<Value> = (0..steps)
        .map(|i| {
            let c1v = c1_range.0 + (c1_range.1 - c1_range.0) * i as f64 / (steps - 1) as f64;
            json!({"c1": c1v, "c2": ws.stability_boundary_c2(c1v)})
        })
        .collect();
    let summary = json!({
        "command": "scan",
        "steps": steps,
        "rows": rows.len(),
        "counts": {
            "unstable": count(stability::Classification::Unstable),
            "stable_candidate": count(stability::Classification::StableCandidate),
            "degenerate": count(stability::Classification::Degenerate),
        },
        "stability_boundary": {
            "c2_over_c1_squared": ws.stability_boundary_c2(1.0),
            "samples": boundary_samples,
        },
        "out": display(out),
    });
    Ok((summary, vec![out.to_path_buf()]))
}

fn rho_cmd(
    cfg: &SolverConfig,
    alpha: f64,
    warp_path: &Path,
    out: Option<&Path>,
) -> CliResult<CommandOutput> {
    let warp = load_warp(warp_path)?;
    let gs = ground_state(cfg)?;
    let grid = graded_grid(cfg);
    let cs = fixed_point_rho(&gs, &warp, alpha, cfg, &grid)?;
    let strauss = strauss_check(&cs);
    let curved_mass = manifold_mass(&cs);
    let equation_residual = curved_residual(&gs, &cs);
    let mut outputs = Vec::new();
    if let Some(path) = out {
        let file = json!({
            "schema": RHO_SCHEMA,
            "alpha": alpha,
            "d": cs.d,
            "p": cs.p,
            "warp": serde_json::to_value(warp).expect("warp serialization"),
            "radii": cs.grid().radii(),
            "rho": cs.rho,
        });
        write_text(path, &format!("{}\n", pretty(&file)))?;
        outputs.push(path.to_path_buf());
    }
    let summary = json!({
        "command": "rho",
        "alpha": alpha,
        "warp": serde_json::to_value(warp).expect("warp serialization"),
        "iterations": cs.iterations,
        "contraction_factor": cs.contraction_factor,
        "sup_norm": cs.sup_norm,
        "h2_proxy": cs.h2_proxy,
        "fixed_point_residual": cs.fixed_point_residual,
        "equation_residual": equation_residual,
        "mass": curved_mass,
        "decay_check": serde_json::to_value(&strauss).expect("decay serialization"),
        "out": out.map(display),
    });
    Ok((summary, outputs))
}

fn vk_cmd(cfg: &SolverConfig, warp_path: &Path, alpha: f64) -> CliResult<CommandOutput> {
    let warp = load_warp(warp_path)?;
    let gs = ground_state(cfg)?;
    let grid = graded_grid(cfg);
    let report = vk_sign(&gs, &warp, vk_pair_for(alpha), cfg, &grid)?;
    let mut summary = serde_json::to_value(&report).expect("report serialization");
    if let Value::Object(map) = &mut summary {
        map.insert("command".into(), json!("vk"));
        map.insert("alpha".into(), json!(alpha));
        map.insert(
            "warp".into(),
            serde_json::to_value(warp).expect("warp serialization"),
        );
    }
    Ok((summary, Vec::new()))
}

fn spectrum_cmd(
    cfg: &SolverConfig,
    variant: VariantArg,
    alpha: &str,
    warp_path: &Path,
    k: usize,
) -> CliResult<CommandOutput> {
    if !(1..=10).contains(&k) {
        return Err(CliError::Usage(format!("--k must lie in 1..=10, got {k}")));
    }
    let warp = load_warp(warp_path)?;
    let alpha_value = match alpha.to_ascii_lowercase().as_str() {
        "inf" | "infinity" => Alpha::Infinity,
        other => {
            let a: f64 = other.parse().map_err(|_| {
                CliError::Usage(format!("--alpha expects a number or 'inf', got {alpha:?}"))
            })?;
            if !(a.is_finite() && a > 0.0) {
                return Err(CliError::Usage(format!(
                    "--alpha must be positive and finite, got {a}"
                )));
            }
            Alpha::Finite(a)
        }
    };
    let gs = ground_state(cfg)?;
    let grid = graded_grid(cfg);
    // the operator linearizes around Q at α = ∞ and around Q + ρ_α at
    // finite α, so the finite case runs the fixed point first
    let profile = match alpha_value {
        Alpha::Infinity => grid.sample(|r| gs.profile.to_radial(r)),
        Alpha::Finite(a) => fixed_point_rho(&gs, &warp, a, cfg, &grid)?.profile(),
    };
    let op = build_l(
        match variant {
            VariantArg::Plus => Variant::Plus,
            VariantArg::Minus => Variant::Minus,
        },
        alpha_value,
        &warp,
        2,
        3.0,
        &profile,
        &grid,
    );
    let slice = low_spectrum(&op, k, cfg.eig_tol)?;
    let edge = match alpha_value {
        Alpha::Infinity => 1.0,
        Alpha::Finite(a) => essential_edge(a, warp.exact_v0d(2)),
    };
    let summary = json!({
        "command": "spectrum",
        "variant": match variant { VariantArg::Plus => "plus", VariantArg::Minus => "minus" },
        "alpha": match alpha_value { Alpha::Infinity => json!("inf"), Alpha::Finite(a) => json!(a) },
        "warp": serde_json::to_value(warp).expect("warp serialization"),
        "k": k,
        "eigenvalues": slice.eigenvalues,
        "neg_count": slice.neg_count,
        "near_zero": slice.near_zero,
        "essential_edge": edge,
    });
    Ok((summary, Vec::new()))
}

fn geometry_cmd(warp_path: &Path, d: usize) -> CliResult<CommandOutput> {
    if d < 2 {
        return Err(CliError::Usage(format!("--d must be at least 2, got {d}")));
    }
    let warp = load_warp(warp_path)?;
    let report = estimate_v0d(&warp, d);
    let summary = json!({
        "command": "geometry",
        "d": d,
        "warp": serde_json::to_value(warp).expect("warp serialization"),
        "v0d": report.v0d,
        "exact_v0d": warp.exact_v0d(d),
        "hypothesis_ok": report.hypothesis_ok,
        "curvature_samples": serde_json::to_value(&report.curvature_samples)
            .expect("sample serialization"),
    });
    Ok((summary, Vec::new()))
}
