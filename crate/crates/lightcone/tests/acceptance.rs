//! Acceptance gate: ten end-to-end criteria covering the geometric
//! pipeline, each printed as one PASS/FAIL line. The test fails only
//! after every criterion has run, so the full scoreboard always prints.
//!
//! Tolerances are pinned here on purpose: loosening them is a contract
//! change, not a tuning knob.

use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lightcone::config::RunConfig;
use lightcone::curvature::{
    big_shape_spectrum, gauss_map_constancy, lightcone_gauss, shape_and_curvatures,
    weingarten_residual,
};
use lightcone::expr::ExprNode;
use lightcone::fixtures;
use lightcone::frame::{angles_from_xi, NormalFrame, SphereAngles};
use lightcone::front::{front_mesh, FrontGrid};
use lightcone::height::{height, hessian_identity_check, morse_family_rank};
use lightcone::jet::{eval_jet2, finite_diff_oracle};
use lightcone::minkowski::{det_rows, pseudo_product, wedge, MinkVector};
use lightcone::worldsheet::{evaluate, WorldSheetSpec};
use lightcone::Error;

const SEED: u64 = 0x6163_6365_7074;

// pinned tolerances, one per criterion that needs one
const WEDGE_TOL: f64 = 1e-9;
const JET_TOL: f64 = 1e-5;
const KAPPA_TOL: f64 = 1e-9;
const GAUSS_K_TOL: f64 = 1e-8;
const FLAT_K_TOL: f64 = 1e-12;
const WEINGARTEN_TOL: f64 = 1e-5;
const SPECTRUM_TOL: f64 = 1e-9;
const CONSTANCY_TOL: f64 = 1e-9;
const KELL_FLAT_TOL: f64 = 1e-10;
const SPREAD_MIN: f64 = 1.0;
const CRITICALITY_TOL: f64 = 1e-9;
const HESSIAN_TOL: f64 = 1e-9;
const FRONT_RADIUS_TOL: f64 = 1e-9;

struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn record(&mut self, idx: usize, name: &str, result: Result<(), String>) {
        match result {
            Ok(()) => println!("acceptance {idx} {name}: PASS"),
            Err(detail) => {
                println!("acceptance {idx} {name}: FAIL");
                self.failures.push(format!("{idx} {name}: {detail}"));
            }
        }
    }
}

fn random_unit_interval(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen::<f64>() * 2.0 - 1.0
}

// 1: the wedge of n vectors is dual to the determinant row expansion
fn criterion_wedge(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let start = Instant::now();
    for case in 0..1000 {
        let dim = 3 + (case % 3);
        let vs: Vec<MinkVector> = (0..dim - 1)
            .map(|_| {
                MinkVector::from_slice(
                    &(0..dim).map(|_| random_unit_interval(rng)).collect::<Vec<_>>(),
                )
                .expect("valid dimension")
            })
            .collect();
        let x = MinkVector::from_slice(
            &(0..dim).map(|_| random_unit_interval(rng)).collect::<Vec<_>>(),
        )
        .expect("valid dimension");
        let w = wedge(&vs).map_err(|e| e.to_string())?;
        let lhs = pseudo_product(&x, &w).map_err(|e| e.to_string())?;
        let mut rows = vec![x.clone()];
        rows.extend(vs.iter().cloned());
        let rhs = det_rows(&rows).map_err(|e| e.to_string())?;
        let scale = rows
            .iter()
            .map(MinkVector::euclid_norm)
            .fold(1.0f64, |acc, n| acc * n.max(1.0));
        if (lhs - rhs).abs() > WEDGE_TOL * scale.max(1.0) {
            return Err(format!(
                "case {case}: <x, wedge> = {lhs} but det = {rhs} (dim {dim})"
            ));
        }
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs_f64() > 1.0 {
        return Err(format!("1000 cases took {elapsed:?} (budget 1s)"));
    }
    Ok(())
}

// 2: exact jets agree with a finite-difference oracle on random
// expressions over the full operator set
fn random_expr(rng: &mut ChaCha8Rng, depth: usize) -> ExprNode {
    if depth == 0 {
        return match rng.gen_range(0..3u32) {
            0 => ExprNode::Const(rng.gen::<f64>() * 3.0 - 1.5),
            1 => ExprNode::Var(0),
            _ => ExprNode::Var(1),
        };
    }
    let sub = |rng: &mut ChaCha8Rng| Box::new(random_expr(rng, depth - 1));
    match rng.gen_range(0..10u32) {
        0 => ExprNode::Add(sub(rng), sub(rng)),
        1 => ExprNode::Sub(sub(rng), sub(rng)),
        2 => ExprNode::Mul(sub(rng), sub(rng)),
        3 => ExprNode::Sin(sub(rng)),
        4 => ExprNode::Cos(sub(rng)),
        5 => ExprNode::Neg(sub(rng)),
        6 => ExprNode::Pow(sub(rng), 2),
        // guarded templates keep log/sqrt/div/exp inside their domains
        7 => ExprNode::Log(Box::new(ExprNode::Add(
            Box::new(ExprNode::Const(3.0)),
            Box::new(ExprNode::Cos(sub(rng))),
        ))),
        8 => ExprNode::Sqrt(Box::new(ExprNode::Add(
            Box::new(ExprNode::Const(4.0)),
            Box::new(ExprNode::Pow(sub(rng), 2)),
        ))),
        _ => ExprNode::Exp(Box::new(ExprNode::Mul(
            Box::new(ExprNode::Const(0.4)),
            Box::new(ExprNode::Sin(sub(rng))),
        ))),
    }
}

fn criterion_jets(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let start = Instant::now();
    let vars: Vec<String> = vec!["u1".into(), "t".into()];
    for case in 0..200 {
        let expr = random_expr(rng, 3);
        let point = [random_unit_interval(rng), random_unit_interval(rng)];
        let jet = eval_jet2(&expr, &vars, &point).map_err(|e| e.to_string())?;
        let fd = finite_diff_oracle(&expr, &vars, &point, 1e-4).map_err(|e| e.to_string())?;
        let mut scale = 1.0f64.max(jet.value.abs());
        for g in &jet.grad {
            scale = scale.max(g.abs());
        }
        for row in &jet.hess {
            for h in row {
                scale = scale.max(h.abs());
            }
        }
        let mut worst = (jet.value - fd.value).abs();
        for (a, b) in jet.grad.iter().zip(&fd.grad) {
            worst = worst.max((a - b).abs());
        }
        for (ra, rb) in jet.hess.iter().zip(&fd.hess) {
            for (a, b) in ra.iter().zip(rb) {
                worst = worst.max((a - b).abs());
            }
        }
        if worst > JET_TOL * scale {
            return Err(format!(
                "case {case}: jet vs finite differences differ by {worst} (scale {scale})"
            ));
        }
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs_f64() > 5.0 {
        return Err(format!("200 cases took {elapsed:?} (budget 5s)"));
    }
    Ok(())
}

fn curvatures_at(
    spec: &WorldSheetSpec,
    u: &[f64],
    t: f64,
    chart: &SphereAngles,
) -> Result<lightcone::curvature::CurvatureData, String> {
    let pe = evaluate(spec, u, t).map_err(|e| e.to_string())?;
    let frame = NormalFrame::build(&pe).map_err(|e| e.to_string())?;
    let gauss = lightcone_gauss(&frame, chart).map_err(|e| e.to_string())?;
    shape_and_curvatures(&pe, &gauss).map_err(|e| e.to_string())
}

// 3: closed-form curvatures of the model sheets
fn criterion_model_curvatures() -> Result<(), String> {
    for r in [0.5, 1.0, 2.0, 5.0] {
        let spec = fixtures::cylinder(r);
        // cos(u) > 0 here, so Sign(+1) addresses the outward normal
        let outward = curvatures_at(&spec, &[0.3], 0.1, &SphereAngles::Sign(1))?;
        let inward = curvatures_at(&spec, &[0.3], 0.1, &SphereAngles::Sign(-1))?;
        if (outward.kappas[0] + 1.0 / r).abs() > KAPPA_TOL {
            return Err(format!(
                "cylinder r={r}: outward kappa = {}, want {}",
                outward.kappas[0],
                -1.0 / r
            ));
        }
        if (inward.kappas[0] - 1.0 / r).abs() > KAPPA_TOL {
            return Err(format!(
                "cylinder r={r}: inward kappa = {}, want {}",
                inward.kappas[0],
                1.0 / r
            ));
        }
    }
    for radius in [1.0, 2.0] {
        let spec = fixtures::sphere(radius);
        let curv = curvatures_at(&spec, &[0.9, 1.0], 0.2, &SphereAngles::Sign(1))?;
        let want = 1.0 / (radius * radius);
        if (curv.k_ell - want).abs() > GAUSS_K_TOL {
            return Err(format!(
                "sphere R={radius}: K = {}, want {want}",
                curv.k_ell
            ));
        }
    }
    let spec = fixtures::flat_sheet(0.5, 0.0);
    let curv = curvatures_at(&spec, &[0.4], 0.3, &SphereAngles::Sign(1))?;
    if curv.k_ell_normalized.abs() > FLAT_K_TOL || curv.kappas[0].abs() > FLAT_K_TOL {
        return Err(format!(
            "flat sheet: kappa = {}, K~ = {}",
            curv.kappas[0], curv.k_ell_normalized
        ));
    }
    Ok(())
}

// 4: tangential derivative identity of the Gauss maps on probe grids
fn criterion_weingarten() -> Result<(), String> {
    let mut worst = (0.0f64, String::new());
    for name in ["cyl", "sph", "flt"] {
        let spec = fixtures::fixture(name).map_err(|e| e.to_string())?;
        let dom = spec.domain().clone();
        let probes = 3usize;
        let ts: Vec<f64> = (0..probes)
            .map(|i| {
                dom.t.min + (dom.t.max - dom.t.min) * (0.2 + 0.6 * i as f64 / (probes - 1) as f64)
            })
            .collect();
        let axis = |r: &lightcone::worldsheet::AxisRange| -> Vec<f64> {
            (0..probes)
                .map(|i| r.min + (r.max - r.min) * (0.2 + 0.6 * i as f64 / (probes - 1) as f64))
                .collect()
        };
        let u_axes: Vec<Vec<f64>> = dom.u.iter().map(axis).collect();
        let mut points: Vec<Vec<f64>> = vec![Vec::new()];
        for ax in &u_axes {
            let mut next = Vec::new();
            for p in &points {
                for &v in ax {
                    let mut q = p.clone();
                    q.push(v);
                    next.push(q);
                }
            }
            points = next;
        }
        for u in &points {
            for &t in &ts {
                for branch in [1, -1] {
                    let res =
                        weingarten_residual(&spec, u, t, &SphereAngles::Sign(branch), 1e-4)
                            .map_err(|e| e.to_string())?;
                    let m = res.raw.max(res.normalized);
                    if m > worst.0 {
                        worst = (m, format!("{name} at u={u:?} t={t} branch={branch}"));
                    }
                }
            }
        }
    }
    if worst.0 > WEINGARTEN_TOL {
        return Err(format!("worst residual {} at {}", worst.0, worst.1));
    }
    Ok(())
}

// 5: rank-3 normal bundles carry the exact -1 block in the big spectrum
fn criterion_big_spectrum() -> Result<(), String> {
    let spec = fixtures::sphere_r5(2.0);
    let (u, t) = ([0.9, 1.0], 0.2);
    let pe = evaluate(&spec, &u, t).map_err(|e| e.to_string())?;
    let frame = NormalFrame::build(&pe).map_err(|e| e.to_string())?;
    // the outward radial normal, written in ambient coordinates
    let radial = MinkVector::from_slice(&[
        0.0,
        u[0].sin() * u[1].cos(),
        u[0].sin() * u[1].sin(),
        u[0].cos(),
        0.0,
    ])
    .expect("valid dimension");
    let chart = angles_from_xi(&frame, &radial).map_err(|e| e.to_string())?;
    let gauss = lightcone_gauss(&frame, &chart).map_err(|e| e.to_string())?;
    let curv = shape_and_curvatures(&pe, &gauss).map_err(|e| e.to_string())?;
    let spectrum = big_shape_spectrum(&curv, spec.normal_rank());
    if spectrum.len() != 3 {
        return Err(format!("spectrum has {} entries, want 3", spectrum.len()));
    }
    if spectrum[0] != -1.0 {
        return Err(format!(
            "flat-block eigenvalue is {} (must be exactly -1)",
            spectrum[0]
        ));
    }
    for (i, want) in [(1, -0.5), (2, -0.5)] {
        if (spectrum[i] - want).abs() > SPECTRUM_TOL {
            return Err(format!("spectrum[{i}] = {}, want {want}", spectrum[i]));
        }
    }
    Ok(())
}

// 6: the flat sheet has a constant Gauss map slice inside a lightlike
// hyperplane; the cylinder's Gauss map genuinely spreads
fn criterion_constancy() -> Result<(), String> {
    let flt = fixtures::flat_sheet(0.5, 0.0);
    let report = gauss_map_constancy(&flt, 0.2, &SphereAngles::Sign(1), &[33], CONSTANCY_TOL)
        .map_err(|e| e.to_string())?;
    if !report.constant {
        return Err(format!("flat sheet spread {} rad", report.max_angle));
    }
    let plane_residual = report.plane_residual.unwrap_or(f64::INFINITY);
    if plane_residual > CONSTANCY_TOL {
        return Err(format!("plane residual {plane_residual}"));
    }
    if report.k_ell_normalized_max > KELL_FLAT_TOL {
        return Err(format!(
            "normalized curvature {} on a planar sheet",
            report.k_ell_normalized_max
        ));
    }
    let cyl = fixtures::cylinder(2.0);
    let report = gauss_map_constancy(&cyl, 0.1, &SphereAngles::Sign(1), &[33], CONSTANCY_TOL)
        .map_err(|e| e.to_string())?;
    if report.constant || report.max_angle < SPREAD_MIN {
        return Err(format!(
            "cylinder Gauss map spread only {} rad",
            report.max_angle
        ));
    }
    Ok(())
}

fn random_probe(
    rng: &mut ChaCha8Rng,
    spec: &WorldSheetSpec,
) -> (Vec<f64>, f64, SphereAngles) {
    let dom = spec.domain();
    let pick = |min: f64, max: f64, r: f64| min + (max - min) * (0.05 + 0.9 * r);
    let u: Vec<f64> = dom
        .u
        .iter()
        .map(|range| pick(range.min, range.max, rng.gen::<f64>()))
        .collect();
    let t = pick(dom.t.min, dom.t.max, rng.gen::<f64>());
    let chart = if spec.normal_rank() == 2 {
        SphereAngles::Sign(if rng.gen::<bool>() { 1 } else { -1 })
    } else {
        SphereAngles::Angles(
            (0..spec.normal_rank() - 2)
                .map(|_| std::f64::consts::TAU * rng.gen::<f64>())
                .collect(),
        )
    };
    (u, t, chart)
}

// 7: the height family is critical along the Gauss directions and its
// Hessian matches the second fundamental form
fn criterion_height_family(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for name in fixtures::FIXTURE_NAMES {
        let spec = fixtures::fixture(name).map_err(|e| e.to_string())?;
        for _ in 0..20 {
            let (u, t, chart) = random_probe(rng, &spec);
            let pe = evaluate(&spec, &u, t).map_err(|e| e.to_string())?;
            let frame = NormalFrame::build(&pe).map_err(|e| e.to_string())?;
            let gauss = lightcone_gauss(&frame, &chart).map_err(|e| e.to_string())?;
            let hv = height(&pe, &gauss.lg_normalized).map_err(|e| e.to_string())?;
            for g in &hv.grad_u {
                if g.abs() > CRITICALITY_TOL {
                    return Err(format!("{name}: |dH| = {} at u={u:?} t={t}", g.abs()));
                }
            }
            let id = hessian_identity_check(&pe, &frame, &chart).map_err(|e| e.to_string())?;
            if id.res_plus > HESSIAN_TOL {
                return Err(format!("{name}: Hessian residual {}", id.res_plus));
            }
        }
    }
    Ok(())
}

// 8: the extended family is a Morse family (full-rank parameter matrix)
// wherever the pedal stays off the cone vertex
fn criterion_morse_rank(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for name in fixtures::FIXTURE_NAMES {
        let spec = fixtures::fixture(name).map_err(|e| e.to_string())?;
        let want = spec.space_dims() + 1;
        let mut checked = 0;
        for _ in 0..20 {
            let (u, t, chart) = random_probe(rng, &spec);
            let pe = evaluate(&spec, &u, t).map_err(|e| e.to_string())?;
            let frame = NormalFrame::build(&pe).map_err(|e| e.to_string())?;
            match morse_family_rank(&pe, &frame, &chart, 1e-9, 1e-8) {
                Ok(rank) => {
                    checked += 1;
                    if rank != want {
                        return Err(format!(
                            "{name}: rank {rank} != {want} at u={u:?} t={t} chart={chart:?}"
                        ));
                    }
                }
                Err(Error::Degenerate(_)) => continue,
                Err(e) => return Err(format!("{name}: {e}")),
            }
        }
        if checked == 0 {
            return Err(format!("{name}: every probe hit the cone vertex"));
        }
    }
    Ok(())
}

// 9: the cylinder front shrinks linearly and collapses at t = r
fn criterion_cylinder_front() -> Result<(), String> {
    let spec = fixtures::cylinder_with_time(2.0, 0.0, 2.0);
    let mesh = front_mesh(
        &spec,
        &FrontGrid {
            u_counts: vec![16],
            angle_count: 0,
            t_count: 17,
        },
    )
    .map_err(|e| e.to_string())?;
    let mut vertex_outward = 0;
    for s in &mesh.samples {
        let radius: f64 = s.pedal[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
        let outward = s.index[1] == 0;
        let expected = if outward { (2.0 - s.t).abs() } else { 2.0 + s.t };
        if (radius - expected).abs() > FRONT_RADIUS_TOL {
            return Err(format!(
                "front radius {radius} vs {expected} at t={} (outward: {outward})",
                s.t
            ));
        }
        if s.t == 2.0 && outward {
            if !s.degenerate_zero {
                return Err(format!("vertex sample at u={:?} not flagged", s.u));
            }
            vertex_outward += 1;
        } else if s.degenerate_zero {
            return Err(format!("false vertex flag at u={:?} t={}", s.u, s.t));
        }
    }
    if vertex_outward != 16 {
        return Err(format!("{vertex_outward} of 16 vertex samples flagged"));
    }
    Ok(())
}

// 10: the verify pipeline is reproducible byte for byte
fn criterion_reproducible_verify() -> Result<(), String> {
    let bin = env!("CARGO_BIN_EXE_lightcone");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("run{run}"));
        let status = Command::new(bin)
            .args([
                "verify",
                "--fixture",
                "cyl",
                "--grid",
                "u1=9",
                "--grid",
                "t=5",
                "--out",
            ])
            .arg(&out)
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("verify run {run} exited with {status}"));
        }
        reports.push(std::fs::read(out.join("verify.json")).map_err(|e| e.to_string())?);
    }
    if reports[0] != reports[1] {
        return Err("verify.json differs between identical runs".into());
    }
    // and the library-level report agrees with itself too
    let cfg = RunConfig::for_fixture("cyl");
    let a = serde_json::to_vec(&lightcone::run::verify_report(&cfg).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let b = serde_json::to_vec(&lightcone::run::verify_report(&cfg).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    if a != b {
        return Err("in-process verify reports differ".into());
    }
    Ok(())
}

#[test]
fn acceptance_gate() {
    let mut gate = Gate {
        failures: Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    gate.record(1, "wedge_determinant_duality", criterion_wedge(&mut rng));
    gate.record(2, "jets_match_finite_differences", criterion_jets(&mut rng));
    gate.record(3, "model_sheet_curvatures", criterion_model_curvatures());
    gate.record(4, "gauss_map_tangent_drift", criterion_weingarten());
    gate.record(5, "big_spectrum_flat_block", criterion_big_spectrum());
    gate.record(6, "flat_gauss_map_constancy", criterion_constancy());
    gate.record(7, "height_family_criticality", criterion_height_family(&mut rng));
    gate.record(8, "morse_family_rank", criterion_morse_rank(&mut rng));
    gate.record(9, "cylinder_front_collapse", criterion_cylinder_front());
    gate.record(10, "reproducible_verify", criterion_reproducible_verify());
    assert!(
        gate.failures.is_empty(),
        "acceptance failures:\n{}",
        gate.failures.join("\n")
    );
}
