//! Command-line pipelines.
//!
//! Five subcommands share one configuration (JSON file or built-in
//! sheet name plus `--tol`/`--grid` overrides):
//!
//! * `validate`  — admissibility sweep, writes `validate.json`;
//! * `curvature` — curvature sweep, writes `curvature.csv` and
//!   `curvature_summary.json`;
//! * `front`     — big-wave-front sweep, writes `front.csv`, `front.obj`
//!   (ambient dimension 3 or 4), and `front_summary.json`;
//! * `singular`  — front sweep plus discriminant extraction, writes
//!   `singular.json` (full caustic / Maxwell / space-critical data);
//! * `verify`    — seeded self-checks of the geometric identities,
//!   writes `verify.json` (byte-identical across runs of the same
//!   build and configuration).
//!
//! Exit codes: 0 success (and all checks passed), 1 a check failed
//! (inadmissible sheet, failed verify suite), 2 usage or runtime error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{load_config, GridConfig, RunConfig, Tolerances};
use crate::curvature::{
    classify_point, gauss_map_constancy, lightcone_gauss, shape_and_curvatures, weingarten_residual,
    CurvatureData, PointClassification,
};
use crate::error::{Error, Result};
use crate::frame::{NormalFrame, SphereAngles};
use crate::front::{
    discriminant_extract, front_mesh, pedal_point, singular_scan, write_front_csv,
    write_front_obj, FrontGrid, FrontMesh,
};
use crate::height::{
    default_charts, extended_height, height, hessian_identity_check, morse_family_rank,
};
use crate::worldsheet::{evaluate, validate, GridSpec, WorldSheetSpec};

/// Seed for the probe points of `verify` (fixed: the report must be
/// reproducible byte for byte).
pub const VERIFY_SEED: u64 = 0x4c49_4748_5443_4f4e;

/// Probe points per verify suite.
pub const VERIFY_PROBES: usize = 64;

#[derive(Parser, Debug)]
#[command(
    name = "lightcone",
    version,
    about = "Lightcone geometry of world sheets: curvature sweeps, wave fronts, singular loci"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// JSON run configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Built-in sheet (cyl, flt, sph, sph5, cylline); alternative to --config.
    #[arg(long, global = true, value_name = "NAME")]
    fixture: Option<String>,

    /// Output directory (overrides the config).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Tolerance override, repeatable (e.g. --tol fd_step=1e-5).
    #[arg(long = "tol", global = true, value_name = "KEY=VALUE")]
    tol: Vec<String>,

    /// Grid override, repeatable (axes u1..u<s>, xi, t; e.g. --grid t=9).
    #[arg(long = "grid", global = true, value_name = "AXIS=COUNT")]
    grid: Vec<String>,

    /// Worker threads (also honors LIGHTCONE_THREADS; default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Check admissibility (spacelike metric, timelike sweep) on a grid.
    Validate,
    /// Sweep curvature invariants over the grid and normal charts.
    Curvature,
    /// Sample the big wave front and export it.
    Front,
    /// Scan the front for singular samples and extract discriminants.
    Singular,
    /// Run the built-in identity checks at seeded probe points.
    Verify,
}

/// Entry point behind `main`; returns the process exit code.
pub fn cli_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints its own help/usage text
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn split_kv(arg: &str, what: &str) -> Result<(String, String)> {
    match arg.split_once('=') {
        Some((k, v)) if !k.is_empty() && !v.is_empty() => Ok((k.to_string(), v.to_string())),
        _ => Err(Error::Validation(format!(
            "{what} override `{arg}` must look like KEY=VALUE"
        ))),
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match (&cli.config, &cli.fixture) {
        (Some(_), Some(_)) => {
            return Err(Error::Validation(
                "give either --config or --fixture, not both".into(),
            ))
        }
        (Some(path), None) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Config {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            load_config(&text)?
        }
        (None, Some(name)) => {
            let cfg = RunConfig::for_fixture(name);
            cfg.sheet_spec()?; // reject unknown names before going further
            cfg
        }
        (None, None) => {
            return Err(Error::Validation(
                "a run needs --config FILE or --fixture NAME".into(),
            ))
        }
    };
    let s = cfg.sheet_spec()?.space_dims();
    for arg in &cli.grid {
        let (k, v) = split_kv(arg, "grid")?;
        let count: usize = v
            .parse()
            .map_err(|_| Error::Validation(format!("grid axis {k} needs an integer, got `{v}`")))?;
        cfg.grid.set(&k, count, s)?;
    }
    for arg in &cli.tol {
        let (k, v) = split_kv(arg, "tolerance")?;
        cfg.tolerances.set(&k, &v)?;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.display().to_string();
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    } else if cfg.threads.is_none() {
        if let Ok(v) = std::env::var("LIGHTCONE_THREADS") {
            let n: usize = v.parse().map_err(|_| {
                Error::Validation(format!("LIGHTCONE_THREADS must be an integer, got `{v}`"))
            })?;
            if n == 0 {
                return Err(Error::Validation("LIGHTCONE_THREADS must be at least 1".into()));
            }
            cfg.threads = Some(n);
        }
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<i32> {
    let cfg = build_config(&cli)?;
    let body = || -> Result<i32> {
        let out_dir = PathBuf::from(&cfg.output.dir);
        fs::create_dir_all(&out_dir)?;
        match cli.command {
            Cmd::Validate => run_validate(&cfg, &out_dir),
            Cmd::Curvature => run_curvature(&cfg, &out_dir),
            Cmd::Front => run_front(&cfg, &out_dir),
            Cmd::Singular => run_singular(&cfg, &out_dir),
            Cmd::Verify => run_verify(&cfg, &out_dir),
        }
    };
    match cfg.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
            pool.install(body)
        }
        None => body(),
    }
}

/// Serializes through `serde_json::Value` so object keys come out
/// sorted: reports must not depend on struct field order.
fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let v = serde_json::to_value(value)?;
    let mut text = serde_json::to_string_pretty(&v)?;
    text.push('\n');
    fs::write(path, text)?;
    println!("wrote {}", path.display());
    Ok(())
}

// ---------------------------------------------------------------- validate

fn run_validate(cfg: &RunConfig, out_dir: &Path) -> Result<i32> {
    let spec = cfg.sheet_spec()?;
    let grid = GridSpec {
        u_counts: cfg.grid.u_counts(spec.space_dims())?,
        t_count: cfg.grid.t,
    };
    let report = validate(&spec, &grid);
    write_json(&out_dir.join("validate.json"), &report)?;
    println!(
        "validate {}: {} ({} points, {} issues)",
        report.sheet,
        if report.passed { "PASS" } else { "FAIL" },
        report.points_checked,
        report.issue_count
    );
    Ok(if report.passed { 0 } else { 1 })
}

// --------------------------------------------------------------- curvature

#[derive(Serialize)]
struct CurvatureSummary {
    sheet: String,
    ambient_dim: usize,
    space_dims: usize,
    normal_rank: usize,
    samples: usize,
    parabolic_count: usize,
    umbilic_count: usize,
    flat_umbilic_count: usize,
    kappa_min: f64,
    kappa_max: f64,
    k_ell_min: f64,
    k_ell_max: f64,
    k_ell_normalized_min: f64,
    k_ell_normalized_max: f64,
    grid: GridConfig,
    tolerances: Tolerances,
}

fn chart_columns(k: usize) -> Vec<String> {
    if k == 2 {
        vec!["branch".into()]
    } else {
        (1..k - 1).map(|i| format!("xi{i}")).collect()
    }
}

fn chart_cells(chart: &SphereAngles) -> Vec<String> {
    match chart {
        SphereAngles::Sign(b) => vec![b.to_string()],
        SphereAngles::Angles(a) => a.iter().map(|v| format!("{v:.16e}")).collect(),
    }
}

fn run_curvature(cfg: &RunConfig, out_dir: &Path) -> Result<i32> {
    let spec = cfg.sheet_spec()?;
    let s = spec.space_dims();
    let k = spec.normal_rank();
    let u_counts = cfg.grid.u_counts(s)?;
    let u_axes: Vec<Vec<f64>> = spec
        .domain()
        .u
        .iter()
        .zip(&u_counts)
        .map(|(r, &c)| r.samples(c))
        .collect();
    let t_axis = spec.domain().t.samples(cfg.grid.t);
    let charts = default_charts(k, cfg.grid.angles);

    let (items, _counts) = crate::front::aligned_point_frames(&spec, &u_axes, &t_axis)?;
    let rows: Vec<(Vec<f64>, SphereAngles, f64, CurvatureData, PointClassification)> = items
        .par_iter()
        .map(|(pe, frame)| {
            let mut out = Vec::with_capacity(charts.len());
            for chart in &charts {
                let gauss = lightcone_gauss(frame, chart)?;
                let curv = shape_and_curvatures(pe, &gauss)?;
                let class =
                    classify_point(&curv, cfg.tolerances.parabolic_tol, cfg.tolerances.umbilic_tol);
                out.push((pe.u.clone(), chart.clone(), pe.t, curv, class));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    if cfg.output.csv {
        let mut csv = String::new();
        let mut header: Vec<String> = (1..=s).map(|i| format!("u{i}")).collect();
        header.extend(chart_columns(k));
        header.push("t".into());
        header.extend((1..=s).map(|i| format!("kappa_{i}")));
        header.extend((1..=s).map(|i| format!("kappa_norm_{i}")));
        header.extend(["k_ell", "k_ell_norm", "ell0"].map(String::from));
        header.extend(["parabolic", "umbilic", "flat_umbilic"].map(String::from));
        csv.push_str(&header.join(","));
        csv.push('\n');
        for (u, chart, t, curv, class) in &rows {
            let mut cells: Vec<String> = u.iter().map(|v| format!("{v:.16e}")).collect();
            cells.extend(chart_cells(chart));
            cells.push(format!("{t:.16e}"));
            cells.extend(curv.kappas.iter().map(|v| format!("{v:.16e}")));
            cells.extend(curv.kappas_normalized.iter().map(|v| format!("{v:.16e}")));
            cells.push(format!("{:.16e}", curv.k_ell));
            cells.push(format!("{:.16e}", curv.k_ell_normalized));
            cells.push(format!("{:.16e}", curv.ell0));
            cells.push((class.parabolic as u8).to_string());
            cells.push((class.umbilic as u8).to_string());
            cells.push((class.flat_umbilic as u8).to_string());
            csv.push_str(&cells.join(","));
            csv.push('\n');
        }
        let path = out_dir.join("curvature.csv");
        fs::write(&path, csv)?;
        println!("wrote {}", path.display());
    }

    let mut summary = CurvatureSummary {
        sheet: spec.name().to_string(),
        ambient_dim: spec.ambient_dim(),
        space_dims: s,
        normal_rank: k,
        samples: rows.len(),
        parabolic_count: 0,
        umbilic_count: 0,
        flat_umbilic_count: 0,
        kappa_min: f64::INFINITY,
        kappa_max: f64::NEG_INFINITY,
        k_ell_min: f64::INFINITY,
        k_ell_max: f64::NEG_INFINITY,
        k_ell_normalized_min: f64::INFINITY,
        k_ell_normalized_max: f64::NEG_INFINITY,
        grid: cfg.grid.clone(),
        tolerances: cfg.tolerances.clone(),
    };
    for (_, _, _, curv, class) in &rows {
        summary.parabolic_count += class.parabolic as usize;
        summary.umbilic_count += class.umbilic as usize;
        summary.flat_umbilic_count += class.flat_umbilic as usize;
        for &kp in &curv.kappas {
            summary.kappa_min = summary.kappa_min.min(kp);
            summary.kappa_max = summary.kappa_max.max(kp);
        }
        summary.k_ell_min = summary.k_ell_min.min(curv.k_ell);
        summary.k_ell_max = summary.k_ell_max.max(curv.k_ell);
        summary.k_ell_normalized_min = summary.k_ell_normalized_min.min(curv.k_ell_normalized);
        summary.k_ell_normalized_max = summary.k_ell_normalized_max.max(curv.k_ell_normalized);
    }
    write_json(&out_dir.join("curvature_summary.json"), &summary)?;
    println!(
        "curvature {}: {} samples ({} parabolic, {} umbilic, {} flat)",
        summary.sheet,
        summary.samples,
        summary.parabolic_count,
        summary.umbilic_count,
        summary.flat_umbilic_count
    );
    Ok(0)
}

// ------------------------------------------------------------------- front

#[derive(Serialize)]
struct DiscriminantCounts {
    caustic_count: usize,
    maxwell_pairs_reported: usize,
    maxwell_total: usize,
    delta_count: usize,
    match_delta: f64,
}

#[derive(Serialize)]
struct FrontSummary {
    sheet: String,
    ambient_dim: usize,
    space_dims: usize,
    normal_rank: usize,
    counts: Vec<usize>,
    samples: usize,
    degenerate_count: usize,
    legendrian_count: usize,
    space_singular_count: usize,
    seam_flip: bool,
    segments: usize,
    triangles: usize,
    discriminant: DiscriminantCounts,
    files: Vec<String>,
    grid: GridConfig,
    tolerances: Tolerances,
}

fn scanned_mesh(cfg: &RunConfig, spec: &WorldSheetSpec) -> Result<FrontMesh> {
    let grid = FrontGrid {
        u_counts: cfg.grid.u_counts(spec.space_dims())?,
        angle_count: cfg.grid.angles,
        t_count: cfg.grid.t,
    };
    let mut mesh = front_mesh(spec, &grid)?;
    singular_scan(&mut mesh, cfg.tolerances.fd_rank_sigma);
    Ok(mesh)
}

fn run_front(cfg: &RunConfig, out_dir: &Path) -> Result<i32> {
    let spec = cfg.sheet_spec()?;
    let mesh = scanned_mesh(cfg, &spec)?;
    let report = discriminant_extract(
        &mesh,
        cfg.tolerances.match_delta,
        cfg.tolerances.sep_cells,
        cfg.tolerances.max_pairs,
    )?;
    let mut files = Vec::new();
    if cfg.output.csv {
        let path = out_dir.join("front.csv");
        let mut buf = Vec::new();
        write_front_csv(&mesh, &mut buf)?;
        fs::write(&path, buf)?;
        println!("wrote {}", path.display());
        files.push("front.csv".to_string());
    }
    if cfg.output.obj {
        if mesh.ambient_dim <= 4 {
            let path = out_dir.join("front.obj");
            let mut buf = Vec::new();
            write_front_obj(&mesh, &mut buf)?;
            fs::write(&path, buf)?;
            println!("wrote {}", path.display());
            files.push("front.obj".to_string());
        } else {
            println!(
                "note: skipping OBJ export (ambient dimension {} > 4)",
                mesh.ambient_dim
            );
        }
    }
    let summary = FrontSummary {
        sheet: mesh.sheet.clone(),
        ambient_dim: mesh.ambient_dim,
        space_dims: mesh.space_dims,
        normal_rank: mesh.normal_rank,
        counts: mesh.counts.clone(),
        samples: mesh.samples.len(),
        degenerate_count: report.degenerate_count,
        legendrian_count: report.legendrian_count,
        space_singular_count: report.space_singular_count,
        seam_flip: mesh.seam_flip,
        segments: mesh.segments.len(),
        triangles: mesh.triangles.len(),
        discriminant: DiscriminantCounts {
            caustic_count: report.caustic_points.len(),
            maxwell_pairs_reported: report.maxwell_pairs.len(),
            maxwell_total: report.maxwell_total,
            delta_count: report.delta_points.len(),
            match_delta: report.match_delta,
        },
        files,
        grid: cfg.grid.clone(),
        tolerances: cfg.tolerances.clone(),
    };
    write_json(&out_dir.join("front_summary.json"), &summary)?;
    println!(
        "front {}: {} samples, {} Legendrian-singular, {} degenerate",
        summary.sheet, summary.samples, summary.legendrian_count, summary.degenerate_count
    );
    Ok(0)
}

// ---------------------------------------------------------------- singular

fn run_singular(cfg: &RunConfig, out_dir: &Path) -> Result<i32> {
    let spec = cfg.sheet_spec()?;
    let mesh = scanned_mesh(cfg, &spec)?;
    let report = discriminant_extract(
        &mesh,
        cfg.tolerances.match_delta,
        cfg.tolerances.sep_cells,
        cfg.tolerances.max_pairs,
    )?;
    write_json(&out_dir.join("singular.json"), &report)?;
    println!(
        "singular {}: caustic {}, Maxwell {} (of {}), space-critical {}",
        report.sheet,
        report.caustic_points.len(),
        report.maxwell_pairs.len(),
        report.maxwell_total,
        report.delta_points.len()
    );
    Ok(0)
}

// ------------------------------------------------------------------ verify

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub pass: bool,
    pub tolerance: f64,
    pub max_residual: f64,
    pub samples: usize,
    pub skipped: usize,
    pub note: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub sheet: String,
    pub seed: u64,
    pub probes: usize,
    pub all_passed: bool,
    pub suites: Vec<SuiteResult>,
}

struct Probe {
    u: Vec<f64>,
    t: f64,
    chart: SphereAngles,
}

fn probe_points(spec: &WorldSheetSpec, count: usize, seed: u64) -> Vec<Probe> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = spec.normal_rank();
    let dom = spec.domain();
    let interior = |min: f64, max: f64, r: f64| min + (max - min) * (0.05 + 0.9 * r);
    (0..count)
        .map(|_| {
            let u: Vec<f64> = dom
                .u
                .iter()
                .map(|range| interior(range.min, range.max, rng.gen::<f64>()))
                .collect();
            let t = interior(dom.t.min, dom.t.max, rng.gen::<f64>());
            let chart = if k == 2 {
                SphereAngles::Sign(if rng.gen::<bool>() { 1 } else { -1 })
            } else {
                let mut angles: Vec<f64> = (0..k - 3)
                    .map(|_| 0.1 + (std::f64::consts::PI - 0.2) * rng.gen::<f64>())
                    .collect();
                angles.push(std::f64::consts::TAU * rng.gen::<f64>());
                SphereAngles::Angles(angles)
            };
            Probe { u, t, chart }
        })
        .collect()
}

/// Runs every identity suite against the configured sheet. Deterministic
/// for a fixed build and configuration; see [`VERIFY_SEED`].
pub fn verify_report(cfg: &RunConfig) -> Result<VerifyReport> {
    let spec = cfg.sheet_spec()?;
    let tol = &cfg.tolerances;
    let s = spec.space_dims();
    let probes = probe_points(&spec, VERIFY_PROBES, VERIFY_SEED);
    let mut suites = Vec::new();

    // tangent drift of the Gauss maps against the shape operator
    {
        let res: Vec<(f64, f64)> = probes
            .par_iter()
            .map(|p| {
                let w = weingarten_residual(&spec, &p.u, p.t, &p.chart, tol.fd_step)?;
                Ok((w.raw, w.normalized))
            })
            .collect::<Result<Vec<_>>>()?;
        let raw = res.iter().fold(0.0f64, |m, r| m.max(r.0));
        let norm = res.iter().fold(0.0f64, |m, r| m.max(r.1));
        suites.push(SuiteResult {
            name: "tangent_drift".into(),
            pass: raw <= tol.weingarten_tol,
            tolerance: tol.weingarten_tol,
            max_residual: raw,
            samples: probes.len(),
            skipped: 0,
            note: String::new(),
        });
        suites.push(SuiteResult {
            name: "tangent_drift_normalized".into(),
            pass: norm <= tol.weingarten_tol,
            tolerance: tol.weingarten_tol,
            max_residual: norm,
            samples: probes.len(),
            skipped: 0,
            note: String::new(),
        });
    }

    // principal curvatures recomputed through an unrelated eigen-solver
    {
        let res: Vec<f64> = probes
            .par_iter()
            .map(|p| {
                let pe = evaluate(&spec, &p.u, p.t)?;
                let frame = NormalFrame::build(&pe)?;
                let gauss = lightcone_gauss(&frame, &p.chart)?;
                let curv = shape_and_curvatures(&pe, &gauss)?;
                let shape = DMatrix::from_fn(s, s, |i, j| curv.shape[i][j]);
                let eig = shape.complex_eigenvalues();
                let mut re: Vec<f64> = eig.iter().map(|z| z.re).collect();
                re.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
                let mut worst = eig.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
                for (a, b) in re.iter().zip(&curv.kappas) {
                    worst = worst.max((a - b).abs());
                }
                Ok(worst)
            })
            .collect::<Result<Vec<_>>>()?;
        let worst = res.iter().fold(0.0f64, |m, &r| m.max(r));
        suites.push(SuiteResult {
            name: "spectrum_consistency".into(),
            pass: worst <= tol.spectrum_tol,
            tolerance: tol.spectrum_tol,
            max_residual: worst,
            samples: probes.len(),
            skipped: 0,
            note: String::new(),
        });
    }

    // constant Gauss map on a time slice implies a lightlike hyperplane
    // and vanishing normalized curvature (vacuous on curved sheets)
    {
        let u_counts = cfg.grid.u_counts(s)?;
        let chart = default_charts(spec.normal_rank(), cfg.grid.angles)
            .into_iter()
            .next()
            .expect("at least one chart");
        let t_axis = spec.domain().t.samples(cfg.grid.t);
        let reports = t_axis
            .par_iter()
            .map(|&t| gauss_map_constancy(&spec, t, &chart, &u_counts, tol.constancy_angle_tol))
            .collect::<Result<Vec<_>>>()?;
        let constant = reports.iter().filter(|r| r.constant).count();
        let mut worst = 0.0f64;
        let mut pass = true;
        for r in &reports {
            if !r.constant {
                continue;
            }
            let plane = r.plane_residual.unwrap_or(f64::INFINITY);
            worst = worst.max(plane);
            pass &= plane <= tol.plane_residual_tol;
            pass &= r.k_ell_normalized_max <= tol.kell_flat_tol;
        }
        suites.push(SuiteResult {
            name: "gauss_constancy".into(),
            pass,
            tolerance: tol.plane_residual_tol,
            max_residual: worst,
            samples: reports.len(),
            skipped: reports.len() - constant,
            note: format!("{constant} of {} time slices constant", reports.len()),
        });
    }

    // the height family is critical exactly along the Gauss directions
    {
        let res: Vec<f64> = probes
            .par_iter()
            .map(|p| {
                let pe = evaluate(&spec, &p.u, p.t)?;
                let frame = NormalFrame::build(&pe)?;
                let gauss = lightcone_gauss(&frame, &p.chart)?;
                let hv = height(&pe, &gauss.lg_normalized)?;
                Ok(hv.grad_u.iter().fold(0.0f64, |m, g| m.max(g.abs())))
            })
            .collect::<Result<Vec<_>>>()?;
        let worst = res.iter().fold(0.0f64, |m, &r| m.max(r));
        suites.push(SuiteResult {
            name: "height_criticality".into(),
            pass: worst <= tol.height_tol,
            tolerance: tol.height_tol,
            max_residual: worst,
            samples: probes.len(),
            skipped: 0,
            note: String::new(),
        });
    }

    // height Hessian against the second fundamental form
    {
        let res: Vec<f64> = probes
            .par_iter()
            .map(|p| {
                let pe = evaluate(&spec, &p.u, p.t)?;
                let frame = NormalFrame::build(&pe)?;
                let id = hessian_identity_check(&pe, &frame, &p.chart)?;
                Ok(id.res_plus)
            })
            .collect::<Result<Vec<_>>>()?;
        let worst = res.iter().fold(0.0f64, |m, &r| m.max(r));
        suites.push(SuiteResult {
            name: "hessian_match".into(),
            pass: worst <= tol.hessian_tol,
            tolerance: tol.hessian_tol,
            max_residual: worst,
            samples: probes.len(),
            skipped: 0,
            note: String::new(),
        });
    }

    // the pedal point is the zero-level critical direction of the
    // extended family (skipping cone-vertex hits)
    {
        let res: Vec<Option<f64>> = probes
            .par_iter()
            .map(|p| {
                let pe = evaluate(&spec, &p.u, p.t)?;
                let frame = NormalFrame::build(&pe)?;
                let pedal = pedal_point(&pe, &frame, &p.chart)?;
                let scale = pe.position.euclid_norm().max(1.0);
                if pedal.scalar.abs() <= crate::front::DEGENERATE_PEDAL_TOL * scale {
                    return Ok(None);
                }
                let hv = extended_height(&pe, &pedal.point)?;
                let g = hv.grad_u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                Ok(Some(g.max(hv.value.abs())))
            })
            .collect::<Result<Vec<_>>>()?;
        let skipped = res.iter().filter(|r| r.is_none()).count();
        let worst = res.iter().flatten().fold(0.0f64, |m, &r| m.max(r));
        suites.push(SuiteResult {
            name: "pedal_criticality".into(),
            pass: worst <= tol.height_tol,
            tolerance: tol.height_tol,
            max_residual: worst,
            samples: probes.len(),
            skipped,
            note: String::new(),
        });
    }

    // the unfolding is a Morse family: full rank away from the vertex
    {
        let res: Vec<Option<usize>> = probes
            .par_iter()
            .map(|p| {
                let pe = evaluate(&spec, &p.u, p.t)?;
                let frame = NormalFrame::build(&pe)?;
                match morse_family_rank(&pe, &frame, &p.chart, tol.height_tol, tol.rank_sigma) {
                    Ok(rank) => Ok(Some(rank)),
                    Err(Error::Degenerate(_)) => Ok(None),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let skipped = res.iter().filter(|r| r.is_none()).count();
        let min_rank = res.iter().flatten().fold(s + 1, |m, &r| m.min(r));
        let deficiency = (s + 1 - min_rank) as f64;
        suites.push(SuiteResult {
            name: "morse_rank".into(),
            pass: deficiency == 0.0,
            tolerance: tol.rank_sigma,
            max_residual: deficiency,
            samples: probes.len(),
            skipped,
            note: format!("required rank {}", s + 1),
        });
    }

    let all_passed = suites.iter().all(|r| r.pass);
    Ok(VerifyReport {
        sheet: spec.name().to_string(),
        seed: VERIFY_SEED,
        probes: VERIFY_PROBES,
        all_passed,
        suites,
    })
}

fn run_verify(cfg: &RunConfig, out_dir: &Path) -> Result<i32> {
    let report = verify_report(cfg)?;
    write_json(&out_dir.join("verify.json"), &report)?;
    for suite in &report.suites {
        println!(
            "verify {}: {} (max residual {:.3e}, tolerance {:.3e}{})",
            suite.name,
            if suite.pass { "PASS" } else { "FAIL" },
            suite.max_residual,
            suite.tolerance,
            if suite.skipped > 0 {
                format!(", {} skipped", suite.skipped)
            } else {
                String::new()
            }
        );
    }
    Ok(if report.all_passed { 0 } else { 1 })
}

// ------------------------------------------------------------------- tests

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn cfg_with(fixture: &str, dir: &Path) -> RunConfig {
        let mut cfg = RunConfig::for_fixture(fixture);
        cfg.output.dir = dir.display().to_string();
        cfg.grid.u = vec![9; cfg.sheet_spec().unwrap().space_dims()];
        cfg.grid.t = 5;
        cfg.grid.angles = 6;
        cfg
    }

    #[test]
    fn verify_passes_on_all_fixtures() {
        for name in fixtures::FIXTURE_NAMES {
            let dir = tempfile::tempdir().unwrap();
            let mut cfg = cfg_with(name, dir.path());
            // coarse verify grids keep the suite fast
            cfg.grid.u = vec![7; cfg.sheet_spec().unwrap().space_dims()];
            let report = verify_report(&cfg).unwrap();
            for suite in &report.suites {
                assert!(
                    suite.pass,
                    "{name}/{}: residual {} > {}",
                    suite.name, suite.max_residual, suite.tolerance
                );
            }
        }
    }

    #[test]
    fn verify_report_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = cfg_with("cyl", dir.path());
        let a = serde_json::to_string(&verify_report(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&verify_report(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pipelines_write_their_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = cfg_with("cyl", dir.path());
        assert_eq!(run_validate(&cfg, dir.path()).unwrap(), 0);
        assert_eq!(run_curvature(&cfg, dir.path()).unwrap(), 0);
        assert_eq!(run_front(&cfg, dir.path()).unwrap(), 0);
        assert_eq!(run_singular(&cfg, dir.path()).unwrap(), 0);
        assert_eq!(run_verify(&cfg, dir.path()).unwrap(), 0);
        for file in [
            "validate.json",
            "curvature.csv",
            "curvature_summary.json",
            "front.csv",
            "front.obj",
            "front_summary.json",
            "singular.json",
            "verify.json",
        ] {
            assert!(dir.path().join(file).exists(), "missing {file}");
        }
    }

    #[test]
    fn json_reports_have_sorted_keys() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = cfg_with("cyl", dir.path());
        run_verify(&cfg, dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join("verify.json")).unwrap();
        let top_keys: Vec<&str> = text
            .lines()
            .filter(|l| l.starts_with("  \""))
            .map(|l| l.trim().split('"').nth(1).unwrap())
            .collect();
        let mut sorted = top_keys.clone();
        sorted.sort_unstable();
        assert_eq!(top_keys, sorted);
    }
}
