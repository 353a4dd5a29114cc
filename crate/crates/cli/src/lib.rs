//! Command-line front end: configuration parsing, pipeline orchestration
//! (validate → discretize → solve → tighten → build → verify → export),
//! and a machine-readable run report.
//!
//! Exit codes, kept stable for CI scripting:
//! 0 ok · 1 infeasible ell · 2 input error · 3 solver stalled ·
//! 4 verification failure · 5 oracle mismatch

pub mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use biref_core::grid::{
    assemble_cost_matrix, build_source_grid, build_target_grid, normalize_masses, CostMatrix,
    DiscreteMeasure, SourceMeasure, TargetMeasure,
};
use biref_core::io::{mesh_to_obj, plan_from_csv, plan_to_csv, potentials_from_csv, potentials_to_csv};
use biref_core::optics::{minimal_ell, validate_config, Direction, OpticalConfig, TargetPoint};
use biref_core::raytrace::{verify_all, VerificationReport};
use biref_core::reflector::{
    build_reflector_pair, export_meshes, lipschitz_report, reflector_map, LipschitzReport,
    ReflectorPair,
};
use biref_core::transport::{
    brute_force_oracle, solve_kantorovich, tighten_potentials, transport_cost, DualPotentials,
    OptimalityCertificate, SolverOptions, TransportPlan, TransportSolution,
};
use biref_core::Error as CoreError;

use config::JobConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_STALLED: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;
pub const EXIT_ORACLE: i32 = 5;

const PROBE_RES: usize = 33;

#[derive(Parser)]
#[command(name = "biref", about = "Two-reflector beam shaping toolkit", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check kernel positivity for the configured geometry
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Full pipeline: solve, tighten, build, verify, export artifacts
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Override the output directory from the config
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override mesh resolution, e.g. 64x48
        #[arg(long, value_name = "NxM")]
        mesh_res: Option<String>,
        /// Override the dual gauge value
        #[arg(long)]
        gauge: Option<f64>,
        /// Override the certificate tolerance
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Re-verify previously written artifacts against the config
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Artifacts directory (defaults to the config's output directory)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-check the solver against brute force on a random instance
    Oracle {
        /// Instance size n (2..=6): n sources, n targets, uniform weights
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Validate { config } => cmd_validate(&config),
        Cmd::Solve {
            config,
            out,
            mesh_res,
            gauge,
            tol,
        } => cmd_solve(
            &config,
            &Overrides {
                out,
                mesh_res,
                gauge,
                tol,
            },
        ),
        Cmd::Verify { config, out } => cmd_verify(&config, out.as_deref()),
        Cmd::Oracle { n, seed } => cmd_oracle(n, seed),
    }
}

#[derive(Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub mesh_res: Option<String>,
    pub gauge: Option<f64>,
    pub tol: Option<f64>,
}

/// Everything a run leaves behind besides the geometry artifacts.
#[derive(Serialize)]
pub struct RunReport {
    pub config: JobConfig,
    pub gauge: f64,
    pub positivity_margin: f64,
    pub mass_scale: f64,
    pub pivots: usize,
    pub certificate: OptimalityCertificate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<LipschitzReport>,
    pub timings_ms: Timings,
}

#[derive(Serialize, Default)]
pub struct Timings {
    pub validate: f64,
    pub discretize: f64,
    pub cost: f64,
    pub solve: f64,
    pub tighten: f64,
    pub build: f64,
    pub verify: f64,
    pub export: f64,
}

fn exit_for(err: &CoreError) -> i32 {
    match err {
        CoreError::InfeasibleEll { .. }
        | CoreError::NoFeasibleEll { .. }
        | CoreError::NonPositiveKernel { .. } => EXIT_INFEASIBLE,
        CoreError::Stalled { .. } => EXIT_STALLED,
        CoreError::NotTight(_) | CoreError::NotSupporting { .. } | CoreError::NotOnSurface(_) => {
            EXIT_VERIFICATION
        }
        _ => EXIT_INPUT,
    }
}

fn load_config(path: &Path) -> Result<JobConfig, i32> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("cannot read {}: {e}", path.display());
        EXIT_INPUT
    })?;
    JobConfig::from_json(&text).map_err(|e| {
        eprintln!("bad config {}: {e}", path.display());
        EXIT_INPUT
    })
}

fn optics_of(cfg: &JobConfig) -> OpticalConfig {
    // already validated in JobConfig::from_json
    OpticalConfig::from_parts(
        cfg.optical.ell,
        cfg.optical.delta,
        cfg.optical.d,
        cfg.optical.gauge,
    )
    .expect("config invariants checked at parse time")
}

pub fn cmd_validate(config_path: &Path) -> i32 {
    let cfg = match load_config(config_path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let optics = optics_of(&cfg);
    match validate_config(&optics, &cfg.source.aperture, &cfg.target.aperture, PROBE_RES) {
        Ok(margin) => {
            println!("positivity margin: {margin:.6e}");
            EXIT_OK
        }
        Err(CoreError::InfeasibleEll { margin }) => {
            let suggestion = minimal_ell(&cfg.source.aperture, &cfg.target.aperture, 1e-3)
                .map(|l| format!("{l:.4}"))
                .unwrap_or_else(|_| "unknown".into());
            eprintln!(
                "infeasible: margin {margin:.6e} <= 0 at ell = {}; need ell >= {suggestion}",
                optics.ell
            );
            EXIT_INFEASIBLE
        }
        Err(e) => {
            eprintln!("validation error: {e}");
            exit_for(&e)
        }
    }
}

struct Discretized {
    src: SourceMeasure,
    tgt: TargetMeasure,
    scale: f64,
}

fn discretize(cfg: &JobConfig) -> Result<Discretized, CoreError> {
    let src = build_source_grid(
        &cfg.source.aperture,
        cfg.source.resolution.n_mz,
        cfg.source.resolution.n_phi,
        &cfg.source.intensity,
    )?;
    let tgt = build_target_grid(
        &cfg.target.aperture,
        cfg.target.resolution.nx,
        cfg.target.resolution.ny,
        &cfg.target.intensity,
    )?;
    let (src, tgt, scale) = normalize_masses(&src, &tgt, cfg.solver.normalization, 1e-9)?;
    Ok(Discretized { src, tgt, scale })
}

fn write_artifacts(
    dir: &Path,
    plan: &TransportPlan,
    pot: &DualPotentials,
    pair: &ReflectorPair,
    mesh_res: [usize; 2],
    report: &RunReport,
) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    fs::write(dir.join("plan.csv"), plan_to_csv(plan)).map_err(|e| e.to_string())?;
    fs::write(dir.join("potentials.csv"), potentials_to_csv(pot)).map_err(|e| e.to_string())?;
    let (m1, m2) = export_meshes(pair, mesh_res[0], mesh_res[1]).map_err(|e| e.to_string())?;
    fs::write(dir.join("reflector1.obj"), mesh_to_obj(&m1, "reflector1"))
        .map_err(|e| e.to_string())?;
    fs::write(dir.join("reflector2.obj"), mesh_to_obj(&m2, "reflector2"))
        .map_err(|e| e.to_string())?;
    write_report(dir, report)
}

fn write_report(dir: &Path, report: &RunReport) -> Result<(), String> {
    let value = serde_json::to_value(report).map_err(|e| e.to_string())?;
    if !json_numbers_finite(&value) {
        return Err("non-finite numeric field in report".into());
    }
    let text = serde_json::to_string_pretty(&value).map_err(|e| e.to_string())?;
    fs::write(dir.join("report.json"), text).map_err(|e| e.to_string())
}

fn json_numbers_finite(v: &serde_json::Value) -> bool {
    match v {
        serde_json::Value::Number(n) => n.as_f64().map(f64::is_finite).unwrap_or(true),
        serde_json::Value::Array(a) => a.iter().all(json_numbers_finite),
        serde_json::Value::Object(o) => o.values().all(json_numbers_finite),
        _ => true,
    }
}

fn ms(from: Instant) -> f64 {
    from.elapsed().as_secs_f64() * 1e3
}

pub fn cmd_solve(config_path: &Path, ov: &Overrides) -> i32 {
    let mut cfg = match load_config(config_path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Some(g) = ov.gauge {
        cfg.optical.gauge = g;
    }
    if let Some(t) = ov.tol {
        cfg.solver.tolerance = t;
    }
    if let Some(res) = &ov.mesh_res {
        match parse_mesh_res(res) {
            Ok(r) => cfg.outputs.mesh_resolution = r,
            Err(e) => {
                eprintln!("bad --mesh-res: {e}");
                return EXIT_INPUT;
            }
        }
    }
    let dir = ov
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.outputs.directory));

    let optics = optics_of(&cfg);
    let mut timings = Timings::default();

    let t = Instant::now();
    let margin = match validate_config(
        &optics,
        &cfg.source.aperture,
        &cfg.target.aperture,
        PROBE_RES,
    ) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("validate: {e}");
            return exit_for(&e);
        }
    };
    timings.validate = ms(t);

    let t = Instant::now();
    let disc = match discretize(&cfg) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("discretize: {e}");
            return exit_for(&e);
        }
    };
    timings.discretize = ms(t);

    let t = Instant::now();
    let cost = match assemble_cost_matrix(&disc.src, &disc.tgt, &optics) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("cost assembly: {e}");
            return exit_for(&e);
        }
    };
    timings.cost = ms(t);

    let opts = SolverOptions {
        tol: cfg.solver.tolerance,
        gauge: cfg.optical.gauge,
        ..SolverOptions::default()
    };
    let t = Instant::now();
    let (sol, stalled): (TransportSolution, bool) =
        match solve_kantorovich(&disc.src.weights, &disc.tgt.weights, &cost, &opts) {
            Ok(s) => (s, false),
            Err(CoreError::Stalled { pivots, solution }) => {
                eprintln!("solver stalled after {pivots} pivots; writing best-effort report");
                (*solution, true)
            }
            Err(e) => {
                eprintln!("solve: {e}");
                return exit_for(&e);
            }
        };
    timings.solve = ms(t);

    let t = Instant::now();
    let tight = tighten_potentials(&sol.potentials, &cost);
    timings.tighten = ms(t);

    let t = Instant::now();
    let built = build_reflector_pair(&tight, &optics, &disc.src.nodes, &disc.tgt.nodes)
        .and_then(|pair| reflector_map(&pair, 1e-9).map(|map| (pair, map)));
    let (pair, map) = match built {
        Ok(pm) => pm,
        Err(e) => {
            eprintln!("reflector build: {e}");
            return exit_for(&e);
        }
    };
    timings.build = ms(t);

    let t = Instant::now();
    let verification = match verify_all(&pair, &map, &sol.plan, &disc.tgt.weights) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("verify: {e}");
            return exit_for(&e);
        }
    };
    let lipschitz = match lipschitz_report(&pair, 200) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("lipschitz: {e}");
            return exit_for(&e);
        }
    };
    timings.verify = ms(t);

    let t = Instant::now();
    let mut report = RunReport {
        config: cfg.clone(),
        gauge: cfg.optical.gauge,
        positivity_margin: margin,
        mass_scale: disc.scale,
        pivots: sol.pivots,
        certificate: sol.certificate,
        verification: Some(verification),
        lipschitz: Some(lipschitz),
        timings_ms: Timings::default(),
    };
    timings.export = ms(t);
    report.timings_ms = timings;

    if let Err(e) = write_artifacts(
        &dir,
        &sol.plan,
        &tight,
        &pair,
        cfg.outputs.mesh_resolution,
        &report,
    ) {
        eprintln!("artifact write: {e}");
        return EXIT_INPUT;
    }

    println!(
        "cost {:.12e}  gap {:.3e}  pivots {}  single-valued {:.3}",
        report.certificate.transport_cost,
        report.certificate.duality_gap,
        report.pivots,
        report
            .verification
            .as_ref()
            .map(|v| v.single_valued_fraction)
            .unwrap_or(f64::NAN),
    );

    if stalled {
        EXIT_STALLED
    } else if report.certificate.satisfied(cfg.solver.tolerance) {
        EXIT_OK
    } else {
        eprintln!("certificate outside tolerance {}", cfg.solver.tolerance);
        EXIT_VERIFICATION
    }
}

pub fn cmd_verify(config_path: &Path, artifacts_dir: Option<&Path>) -> i32 {
    let cfg = match load_config(config_path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let dir = artifacts_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&cfg.outputs.directory));
    let optics = optics_of(&cfg);

    let pot_text = match fs::read_to_string(dir.join("potentials.csv")) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("missing potentials.csv in {}: {e}", dir.display());
            return EXIT_INPUT;
        }
    };
    let plan_text = match fs::read_to_string(dir.join("plan.csv")) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("missing plan.csv in {}: {e}", dir.display());
            return EXIT_INPUT;
        }
    };
    let pot = match potentials_from_csv(&pot_text) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("bad potentials.csv: {e}");
            return EXIT_INPUT;
        }
    };
    let plan = match plan_from_csv(&plan_text) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("bad plan.csv: {e}");
            return EXIT_INPUT;
        }
    };

    let disc = match discretize(&cfg) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("discretize: {e}");
            return exit_for(&e);
        }
    };
    if pot.r.len() != disc.src.nodes.len() || pot.zeta.len() != disc.tgt.nodes.len() {
        eprintln!(
            "potentials shape {}x{} does not match config grids {}x{}",
            pot.r.len(),
            pot.zeta.len(),
            disc.src.nodes.len(),
            disc.tgt.nodes.len()
        );
        return EXIT_INPUT;
    }

    let pair = match build_reflector_pair(&pot, &optics, &disc.src.nodes, &disc.tgt.nodes) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("reflector rebuild: {e} (feasibility/tightness violated)");
            return exit_for(&e);
        }
    };
    let map = match reflector_map(&pair, 1e-9) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("reflector map: {e}");
            return exit_for(&e);
        }
    };
    let verification = match verify_all(&pair, &map, &plan, &disc.tgt.weights) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("verify: {e}");
            return exit_for(&e);
        }
    };
    let lip = match lipschitz_report(&pair, 200) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("lipschitz: {e}");
            return exit_for(&e);
        }
    };

    update_report_json(&dir, &verification, &lip);

    let ok = verification.passes() && lip.bounds_hold(1e-6);
    println!(
        "parallel {:.3e}  opl {:.3e}  exit_x {:.3e}  marginal {:.3e}  mismatches {}  ratios ({:.6}, {:.6})",
        verification.max_parallel_err_rad,
        verification.max_opl_rel_err,
        verification.max_exit_x_err,
        verification.max_marginal_err,
        verification.map_plan_mismatches,
        lip.max_ratio_x,
        lip.max_ratio_m,
    );
    if ok {
        EXIT_OK
    } else {
        eprintln!("verification thresholds breached");
        EXIT_VERIFICATION
    }
}

/// Rewrites the verification and lipschitz sections of an existing
/// report.json, or creates a minimal one if none exists.
fn update_report_json(dir: &Path, v: &VerificationReport, l: &LipschitzReport) {
    let path = dir.join("report.json");
    let mut root = fs::read_to_string(&path)
        .ok()
        .and_then(|t| serde_json::from_str::<serde_json::Value>(&t).ok())
        .unwrap_or_else(|| serde_json::json!({}));
    if let Some(obj) = root.as_object_mut() {
        obj.insert(
            "verification".into(),
            serde_json::to_value(v).expect("serializable"),
        );
        obj.insert(
            "lipschitz".into(),
            serde_json::to_value(l).expect("serializable"),
        );
    }
    if let Ok(text) = serde_json::to_string_pretty(&root) {
        let _ = fs::write(&path, text);
    }
}

/// Draws a uniform-weight n-by-n instance from the canonical geometry and
/// compares the simplex optimum against exhaustive permutation search.
pub fn cmd_oracle(n: usize, seed: u64) -> i32 {
    if !(2..=6).contains(&n) {
        eprintln!("oracle size must satisfy 2 <= n <= 6, got {n}");
        return EXIT_INPUT;
    }
    let optics = OpticalConfig::new(8.0, 3.0, 0.0).expect("canonical config");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let src_nodes: Vec<Direction> = (0..n)
        .map(|_| {
            Direction::from_band(
                rng.gen_range(-0.5..0.5),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let tgt_nodes: Vec<TargetPoint> = (0..n)
        .map(|_| TargetPoint::new([rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]))
        .collect();
    let w = vec![1.0 / n as f64; n];
    let src = DiscreteMeasure::new(src_nodes, w.clone()).expect("positive weights");
    let tgt = DiscreteMeasure::new(tgt_nodes, w.clone()).expect("positive weights");

    let cost: CostMatrix = match assemble_cost_matrix(&src, &tgt, &optics) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("cost assembly: {e}");
            return exit_for(&e);
        }
    };
    let sol = match solve_kantorovich(&w, &w, &cost, &SolverOptions::default()) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("solve: {e}");
            return exit_for(&e);
        }
    };
    let best = match brute_force_oracle(&w, &w, &cost) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("oracle: {e}");
            return exit_for(&e);
        }
    };
    let got = transport_cost(&sol.plan, &cost);
    let err = (got - best).abs();
    if err <= 1e-9 * (1.0 + best.abs()) {
        println!("n={n} seed={seed}: solver {got:.15e} == brute force {best:.15e}");
        EXIT_OK
    } else {
        eprintln!("MISMATCH n={n} seed={seed}: solver {got:.17e} vs brute force {best:.17e}");
        eprintln!("cost matrix (row-major): {:?}", cost.as_slice());
        EXIT_ORACLE
    }
}

fn parse_mesh_res(s: &str) -> Result<[usize; 2], String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NxM, got {s:?}"))?;
    let n: usize = a.trim().parse().map_err(|_| format!("bad N in {s:?}"))?;
    let m: usize = b.trim().parse().map_err(|_| format!("bad M in {s:?}"))?;
    if n < 2 || m < 2 {
        return Err("mesh resolution must be at least 2x2".into());
    }
    Ok([n, m])
}
