//! Lightcone Gauss maps and curvature invariants of momentary spaces.
//!
//! For a unit spacelike normal direction `xi` the *lightcone Gauss map*
//! is `LG = n^T + xi`, a future lightlike normal field; its projection
//! `~LG = LG / l_0` (with `l_0` the time component of `LG`) lands in the
//! unit-sphere slice of the lightcone. The second fundamental form along
//! `LG` is `h_ij = <LG, X_{u_i u_j}>`, the shape operator is `h g^{-1}`,
//! its eigenvalues are the lightcone principal curvatures, and
//! `K_l = det(h) / det(g)` is the lightcone Lipschitz-Killing curvature.
//! Dividing by `l_0` (by `l_0^s` for `K_l`) gives the normalized
//! quantities attached to `~LG`.
//!
//! The tangential identity `pi^t(d LG / d u_i) = -sum_j h_i^j X_{u_j}`
//! holds for any smooth choice of `xi(u)` because the tangential part of
//! the derivative only sees `<LG, X_{u_i u_j}>`; [`weingarten_residual`]
//! checks it against central finite differences, which is the main
//! numerical cross-check that frames, jets and curvatures are wired
//! together correctly.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{xi_from_angles, NormalFrame, SphereAngles};
use crate::minkowski::{
    det_bareiss, project_to_lightcone_sphere, pseudo_product, MinkVector,
};
use crate::worldsheet::{evaluate, PointEval, WorldSheetSpec};

/// A lightcone Gauss map value at one point and normal direction.
#[derive(Clone, Debug, Serialize)]
pub struct LightconeGauss {
    /// `xi`, the unit spacelike normal the map was built from.
    pub xi: MinkVector,
    /// `LG = n^T + xi` (future lightlike).
    pub lg: MinkVector,
    /// `~LG = LG / l_0`, on the `{x_0 = 1}` slice of the lightcone.
    pub lg_normalized: MinkVector,
    /// Time component of `LG`; always positive.
    pub ell0: f64,
}

/// Evaluates the lightcone Gauss map for the normal direction addressed
/// by `angles`.
pub fn lightcone_gauss(
    frame: &NormalFrame,
    angles: &SphereAngles,
) -> Result<LightconeGauss> {
    let xi = xi_from_angles(frame, angles)?;
    let lg = frame.timelike.add(&xi)?;
    let ell0 = lg.time();
    debug_assert!(ell0 > 0.0, "lightcone Gauss map must be future-directed");
    let lg_normalized = project_to_lightcone_sphere(&lg)?;
    Ok(LightconeGauss {
        xi,
        lg,
        lg_normalized,
        ell0,
    })
}

/// `h_ij = <LG, X_{u_i u_j}>`.
pub fn second_fundamental(point: &PointEval, gauss: &LightconeGauss) -> Result<Vec<Vec<f64>>> {
    let s = point.du.len();
    let mut h = vec![vec![0.0; s]; s];
    for i in 0..s {
        for j in 0..s {
            h[i][j] = pseudo_product(&gauss.lg, &point.duu[i][j])?;
        }
    }
    Ok(h)
}

/// Curvature data of one `(point, xi)` pair.
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureData {
    /// Second fundamental form `h_ij` along `LG`.
    pub h: Vec<Vec<f64>>,
    /// Shape operator `h g^{-1}` (row `i`, column `j` holds `h_i^j`).
    pub shape: Vec<Vec<f64>>,
    /// Lightcone principal curvatures, ascending.
    pub kappas: Vec<f64>,
    /// `kappa_i / l_0`, ascending.
    pub kappas_normalized: Vec<f64>,
    /// Lightcone Lipschitz-Killing curvature `det h / det g`.
    pub k_ell: f64,
    /// `K_l / l_0^s`.
    pub k_ell_normalized: f64,
    /// Time component of `LG`.
    pub ell0: f64,
}

/// Second fundamental form, shape operator, and all curvature invariants.
///
/// Principal curvatures are computed from the symmetric similar matrix
/// `C^{-1} h C^{-T}` with `g = C C^T` the Cholesky factorization, which
/// keeps the eigenproblem symmetric; they come back sorted ascending.
pub fn shape_and_curvatures(
    point: &PointEval,
    gauss: &LightconeGauss,
) -> Result<CurvatureData> {
    let s = point.du.len();
    let h = second_fundamental(point, gauss)?;
    let g = DMatrix::from_fn(s, s, |i, j| point.metric[i][j]);
    let hm = DMatrix::from_fn(s, s, |i, j| h[i][j]);
    let chol = nalgebra::Cholesky::new(g).ok_or_else(|| {
        Error::Degenerate("momentary metric is not positive definite".into())
    })?;
    // shape = h g^{-1} = (g^{-1} h)^T since g and h are symmetric
    let ginv_h = chol.solve(&hm);
    let shape_m = ginv_h.transpose();

    // symmetric eigenproblem: M = C^{-1} h C^{-T}
    let c = chol.l();
    let y = c
        .solve_lower_triangular(&hm)
        .ok_or_else(|| Error::Degenerate("singular Cholesky factor".into()))?;
    let m = c
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::Degenerate("singular Cholesky factor".into()))?;
    // m is symmetric up to rounding; symmetrize before the eigensolver
    let m = (&m + m.transpose()) * 0.5;
    let mut kappas: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    kappas.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let det_g = det_bareiss(point.metric.clone());
    let det_h = det_bareiss(h.clone());
    let k_ell = det_h / det_g;
    let ell0 = gauss.ell0;
    let shape: Vec<Vec<f64>> = (0..s)
        .map(|i| (0..s).map(|j| shape_m[(i, j)]).collect())
        .collect();
    Ok(CurvatureData {
        h,
        shape,
        kappas_normalized: kappas.iter().map(|k| k / ell0).collect(),
        kappas,
        k_ell,
        k_ell_normalized: k_ell / ell0.powi(s as i32),
        ell0,
    })
}

/// Spectrum of the shape operator of the swept manifold along the same
/// lightlike normal: the momentary principal curvatures together with
/// `k - 2` exact copies of `-1` contributed by the normal-sphere fiber
/// directions. Sorted ascending.
pub fn big_shape_spectrum(curv: &CurvatureData, normal_rank: usize) -> Vec<f64> {
    let mut spec = curv.kappas.clone();
    spec.extend(std::iter::repeat_n(-1.0, normal_rank.saturating_sub(2)));
    spec.sort_by(|a, b| a.partial_cmp(b).unwrap());
    spec
}

/// Pointwise classification by the lightcone curvatures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointClassification {
    /// `K_l = 0` within tolerance (some principal curvature vanishes).
    pub parabolic: bool,
    /// All principal curvatures equal within tolerance.
    pub umbilic: bool,
    /// All principal curvatures vanish (`h = 0`) within tolerance.
    pub flat_umbilic: bool,
}

/// Classifies by `|K_l| <= parabolic_tol` and by the spread / magnitude
/// of the principal curvatures against `umbilic_tol` (absolute
/// tolerances; the umbilic spread is additionally scaled by
/// `1 + max|kappa|`).
pub fn classify_point(
    curv: &CurvatureData,
    parabolic_tol: f64,
    umbilic_tol: f64,
) -> PointClassification {
    let kmax = curv
        .kappas
        .iter()
        .fold(0.0f64, |a, &k| a.max(k.abs()));
    let spread = match (curv.kappas.first(), curv.kappas.last()) {
        (Some(lo), Some(hi)) => hi - lo,
        _ => 0.0,
    };
    PointClassification {
        parabolic: curv.k_ell.abs() <= parabolic_tol,
        umbilic: spread <= umbilic_tol * (1.0 + kmax),
        flat_umbilic: kmax <= umbilic_tol,
    }
}

/// Result of sweeping the normalized lightcone Gauss map over a momentary
/// space.
#[derive(Clone, Debug, Serialize)]
pub struct ConstancyReport {
    pub t: f64,
    pub samples: usize,
    /// Largest angle (radians) between a sampled `~LG` direction and the
    /// first one.
    pub max_angle: f64,
    /// `max_angle <= angle_tol`
    pub constant: bool,
    /// When constant: the lightlike hyperplane `HP(~LG, c)` fitted through
    /// the samples, as `(pseudo-normal, offset)`.
    pub fitted_plane: Option<(MinkVector, f64)>,
    /// When constant: worst `|<X, v> - c|` over the sweep.
    pub plane_residual: Option<f64>,
    /// Largest `|K_l / l_0^s|` over the sweep.
    pub k_ell_normalized_max: f64,
}

/// Angle between two directions on the `{x_0 = 1}` lightcone slice
/// (their spatial parts are unit vectors).
fn slice_angle(a: &MinkVector, b: &MinkVector) -> f64 {
    let d2: f64 = a
        .space()
        .iter()
        .zip(b.space())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    let chord = d2.sqrt();
    2.0 * (chord / 2.0).clamp(0.0, 1.0).asin()
}

/// Sweeps a momentary space `S_t` on a `u` grid with a fixed normal chart
/// and reports whether `~LG` is constant; when it is, the momentary space
/// lies in the lightlike hyperplane `HP(~LG, <X, ~LG>)` and the report
/// carries the fitted plane and its worst residual.
///
/// Frames are sign-aligned along the sweep so a chart like `Sign(+1)`
/// addresses a continuous normal field.
pub fn gauss_map_constancy(
    spec: &WorldSheetSpec,
    t: f64,
    angles: &SphereAngles,
    u_counts: &[usize],
    angle_tol: f64,
) -> Result<ConstancyReport> {
    let s = spec.space_dims();
    if u_counts.len() != s {
        return Err(Error::DimensionMismatch {
            expected: s,
            got: u_counts.len(),
        });
    }
    let axes: Vec<Vec<f64>> = spec
        .domain()
        .u
        .iter()
        .zip(u_counts)
        .map(|(r, &c)| r.samples(c))
        .collect();
    let mut first: Option<MinkVector> = None;
    let mut prev_frame: Option<NormalFrame> = None;
    let mut max_angle = 0.0f64;
    let mut k_max = 0.0f64;
    let mut rows: Vec<(MinkVector, f64)> = Vec::new(); // (X, <X, v0>) deferred
    let mut samples = Vec::new();
    for idx in crate::worldsheet::multi_indices(u_counts) {
        let u: Vec<f64> = (0..s).map(|i| axes[i][idx[i]]).collect();
        let pe = evaluate(spec, &u, t)?;
        let mut frame = NormalFrame::build(&pe)?;
        if let Some(ref prev) = prev_frame {
            frame.align_signs_to(prev);
        }
        let gauss = lightcone_gauss(&frame, angles)?;
        let curv = shape_and_curvatures(&pe, &gauss)?;
        k_max = k_max.max(curv.k_ell_normalized.abs());
        match &first {
            None => first = Some(gauss.lg_normalized.clone()),
            Some(v0) => max_angle = max_angle.max(slice_angle(v0, &gauss.lg_normalized)),
        }
        rows.push((pe.position.clone(), 0.0));
        samples.push(gauss.lg_normalized);
        prev_frame = Some(frame);
    }
    let constant = max_angle <= angle_tol;
    let (fitted_plane, plane_residual) = if constant {
        let v = first.clone().expect("at least one sample");
        let offsets: Vec<f64> = rows
            .iter()
            .map(|(x, _)| pseudo_product(x, &v).expect("same dim"))
            .collect();
        let c = offsets.iter().sum::<f64>() / offsets.len() as f64;
        let resid = offsets
            .iter()
            .fold(0.0f64, |a, &o| a.max((o - c).abs()));
        (Some((v, c)), Some(resid))
    } else {
        (None, None)
    };
    Ok(ConstancyReport {
        t,
        samples: rows.len(),
        max_angle,
        constant,
        fitted_plane,
        plane_residual,
        k_ell_normalized_max: k_max,
    })
}

/// Finite-difference residuals of the tangential derivative identities
/// for the lightcone Gauss map, at one `(u, t, xi)`.
#[derive(Clone, Debug, Serialize)]
pub struct WeingartenResidual {
    /// `max_i | pi^t(d LG / d u_i) + sum_j h_i^j X_{u_j} |`
    pub raw: f64,
    /// Same for `~LG` against `(1/l_0) h_i^j`.
    pub normalized: f64,
}

/// Central-difference check of the tangential derivative identities; see
/// the module docs. `step` is the parameter-space step (`1e-4` balances
/// truncation against rounding for these second-derivative-level
/// quantities).
pub fn weingarten_residual(
    spec: &WorldSheetSpec,
    u: &[f64],
    t: f64,
    angles: &SphereAngles,
    step: f64,
) -> Result<WeingartenResidual> {
    let s = spec.space_dims();
    let pe = evaluate(spec, u, t)?;
    let frame = NormalFrame::build(&pe)?;
    let gauss = lightcone_gauss(&frame, angles)?;
    let curv = shape_and_curvatures(&pe, &gauss)?;

    let mut raw = 0.0f64;
    let mut normalized = 0.0f64;
    for i in 0..s {
        let mut up = u.to_vec();
        let mut dn = u.to_vec();
        up[i] += step;
        dn[i] -= step;
        let mut lg = Vec::with_capacity(2);
        let mut lgn = Vec::with_capacity(2);
        for uu in [&up, &dn] {
            let pe_side = evaluate(spec, uu, t)?;
            let mut frame_side = NormalFrame::build(&pe_side)?;
            frame_side.align_signs_to(&frame);
            let g_side = lightcone_gauss(&frame_side, angles)?;
            lg.push(g_side.lg);
            lgn.push(g_side.lg_normalized);
        }
        let dlg = lg[0].sub(&lg[1])?.scale(1.0 / (2.0 * step));
        let dlgn = lgn[0].sub(&lgn[1])?.scale(1.0 / (2.0 * step));

        // expected tangential parts from the shape operator
        let mut expect = MinkVector::zero(spec.ambient_dim());
        for j in 0..s {
            expect = expect.add(&pe.du[j].scale(-curv.shape[i][j]))?;
        }
        let tang = pe.tangential_projection(&dlg)?;
        raw = raw.max(tang.sub(&expect)?.euclid_norm());

        let tang_n = pe.tangential_projection(&dlgn)?;
        let expect_n = expect.scale(1.0 / curv.ell0);
        normalized = normalized.max(tang_n.sub(&expect_n)?.euclid_norm());
    }
    Ok(WeingartenResidual { raw, normalized })
}
