//! The family of Lorentzian height functions and its Morse-family
//! certificate.
//!
//! For a direction `v` on the `{v_0 = 1}` slice of the lightcone, the
//! height function is `H(u) = <X(u, t), v>` on a momentary space. Its
//! `u`-critical points are exactly the points whose normalized lightcone
//! Gauss map equals `v`, and there the Hessian is `(1/l_0) h_ij` — so
//! degenerate directions of `h` are degenerate critical points of `H`.
//!
//! The *extended* family `~H(u, v) = <X, v/v_0> - v_0` over `v` in the
//! open lightcone vanishes together with its `u`-gradient exactly at
//! `v = <X, ~LG> ~LG`, the lightcone pedal point. [`morse_family_matrix`]
//! is the Jacobian of `(~H, ~H_u1, ..., ~H_us)` with respect to the
//! lightcone chart `(v_1, ..., v_n)` (`v_0` dependent); full rank `s + 1`
//! of that matrix on the zero set is what makes the pedal-point family a
//! Morse family, hence the big wave front a genuine wave front.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frame::{NormalFrame, SphereAngles};
use crate::curvature::{lightcone_gauss, second_fundamental};
use crate::minkowski::{
    det_bareiss, project_to_lightcone_sphere, pseudo_product, MinkVector, LIGHTLIKE_EPS,
};
use crate::worldsheet::PointEval;

/// Default relative singular-value cutoff for numerical ranks of
/// analytically-assembled matrices.
pub const RANK_SIGMA: f64 = 1e-8;

/// Default tolerance for membership of the zero set of `(~H, grad ~H)`.
pub const HEIGHT_TOL: f64 = 1e-9;

/// Pedal scalars below this (relative to `max(1, |X|)`) count as the cone
/// vertex, where the pedal point leaves the open lightcone.
pub const DEGENERATE_PEDAL_TOL: f64 = 1e-9;

/// A height-function evaluation at one `(u, t)`.
#[derive(Clone, Debug, Serialize)]
pub struct HeightEval {
    pub value: f64,
    /// `dH/du_i`
    pub grad_u: Vec<f64>,
    /// `d^2 H / du_i du_j`
    pub hess_u: Vec<Vec<f64>>,
    pub det_hess: f64,
    /// Numerical rank of the Hessian (singular values above
    /// [`RANK_SIGMA`] relative).
    pub rank_hess: usize,
}

/// Numerical rank: singular values at or above `sigma_rel` times the
/// largest one. The zero matrix has rank 0.
pub fn matrix_rank(m: &DMatrix<f64>, sigma_rel: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s >= sigma_rel * smax).count()
}

fn height_at_direction(point: &PointEval, v: &MinkVector, shift: f64) -> Result<HeightEval> {
    let s = point.du.len();
    let value = pseudo_product(&point.position, v)? - shift;
    let mut grad_u = vec![0.0; s];
    for i in 0..s {
        grad_u[i] = pseudo_product(&point.du[i], v)?;
    }
    let mut hess_u = vec![vec![0.0; s]; s];
    for i in 0..s {
        for j in 0..s {
            hess_u[i][j] = pseudo_product(&point.duu[i][j], v)?;
        }
    }
    let det_hess = det_bareiss(hess_u.clone());
    let rank_hess = matrix_rank(
        &DMatrix::from_fn(s, s, |i, j| hess_u[i][j]),
        RANK_SIGMA,
    );
    Ok(HeightEval {
        value,
        grad_u,
        hess_u,
        det_hess,
        rank_hess,
    })
}

/// `H(u) = <X, v>` for `v` on the unit-sphere slice of the lightcone
/// (lightlike with `v_0 = 1`, both within [`LIGHTLIKE_EPS`]).
pub fn height(point: &PointEval, v: &MinkVector) -> Result<HeightEval> {
    if !v.is_lightlike_within(LIGHTLIKE_EPS) || (v.time() - 1.0).abs() > 1e-9 {
        return Err(Error::Domain {
            expr: format!("{:?}", v.coords()),
            message: "height direction must be lightlike with v_0 = 1".into(),
        });
    }
    height_at_direction(point, v, 0.0)
}

/// `~H(u) = <X, v/v_0> - v_0` for `v` anywhere in the open lightcone.
pub fn extended_height(point: &PointEval, v: &MinkVector) -> Result<HeightEval> {
    let vtilde = project_to_lightcone_sphere(v)?;
    height_at_direction(point, &vtilde, v.time())
}

/// The lightcone directions at which this point is `u`-critical for the
/// height family: the normalized Gauss map values over the given charts.
pub fn critical_lightcone_directions(
    frame: &NormalFrame,
    charts: &[SphereAngles],
) -> Result<Vec<MinkVector>> {
    charts
        .iter()
        .map(|c| Ok(lightcone_gauss(frame, c)?.lg_normalized))
        .collect()
}

/// Default chart sample of the unit normal sphere: both signs for normal
/// rank 2, otherwise a product grid with `angle_count` samples per angle
/// (full circle on the last angle, open polar ranges on the others).
pub fn default_charts(normal_rank: usize, angle_count: usize) -> Vec<SphereAngles> {
    if normal_rank == 2 {
        return vec![SphereAngles::Sign(1), SphereAngles::Sign(-1)];
    }
    let nang = normal_rank - 2;
    let mut counts = vec![angle_count; nang];
    // polar angles (all but the last) avoid their endpoints, where the
    // chart is singular
    for c in counts.iter_mut().take(nang.saturating_sub(1)) {
        *c = angle_count.max(2);
    }
    crate::worldsheet::multi_indices(&counts)
        .into_iter()
        .map(|idx| {
            let mut angles = Vec::with_capacity(nang);
            for (m, &i) in idx.iter().enumerate() {
                if m + 1 == nang {
                    angles.push(std::f64::consts::TAU * i as f64 / angle_count as f64);
                } else {
                    let n = counts[m] as f64;
                    angles
                        .push(std::f64::consts::PI * (i as f64 + 0.5) / n);
                }
            }
            SphereAngles::Angles(angles)
        })
        .collect()
}

/// Residuals of the critical-point Hessian against the scaled second
/// fundamental form, in both sign conventions.
#[derive(Clone, Debug, Serialize)]
pub struct HessianIdentity {
    /// `max_ij |Hess H - (1/l_0) h|`: the identity that holds.
    pub res_plus: f64,
    /// `max_ij |Hess H + (1/l_0) h|`: stays large unless `h = 0`.
    pub res_minus: f64,
    pub ell0: f64,
}

/// Evaluates the height Hessian at the critical direction `v = ~LG` and
/// compares it against `(1/l_0) h_ij` in both sign conventions.
pub fn hessian_identity_check(
    point: &PointEval,
    frame: &NormalFrame,
    angles: &SphereAngles,
) -> Result<HessianIdentity> {
    let gauss = lightcone_gauss(frame, angles)?;
    let hv = height(point, &gauss.lg_normalized)?;
    let h = second_fundamental(point, &gauss)?;
    let s = point.du.len();
    let mut res_plus = 0.0f64;
    let mut res_minus = 0.0f64;
    for i in 0..s {
        for j in 0..s {
            let scaled = h[i][j] / gauss.ell0;
            res_plus = res_plus.max((hv.hess_u[i][j] - scaled).abs());
            res_minus = res_minus.max((hv.hess_u[i][j] + scaled).abs());
        }
    }
    Ok(HessianIdentity {
        res_plus,
        res_minus,
        ell0: gauss.ell0,
    })
}

/// Jacobian of `(~H, ~H_{u_1}, ..., ~H_{u_s})` with respect to the
/// lightcone chart `(v_1, ..., v_n)` at `(point, v)`; `v_0` is the
/// dependent coordinate `sign(v_0) sqrt(sum v_j^2)`.
///
/// With `S = sum_k X_k v_k` (spatial sums):
///
/// ```text
/// d~H/dv_j      = X_j / v_0 - S v_j / v_0^3 - v_j / v_0
/// d~H_{u_i}/dv_j = (X_{u_i})_j / v_0 - S_i v_j / v_0^3
/// ```
pub fn morse_family_matrix(point: &PointEval, v: &MinkVector) -> Result<DMatrix<f64>> {
    if !v.is_lightlike_within(LIGHTLIKE_EPS) || v.time() == 0.0 {
        return Err(Error::Domain {
            expr: format!("{:?}", v.coords()),
            message: "Morse-family chart needs v in the open lightcone".into(),
        });
    }
    if v.dim() != point.position.dim() {
        return Err(Error::DimensionMismatch {
            expected: point.position.dim(),
            got: v.dim(),
        });
    }
    let s = point.du.len();
    let n = v.dim() - 1;
    let v0 = v.time();
    let xs = point.position.space();
    let vs = v.space();
    let sum_x: f64 = xs.iter().zip(vs).map(|(x, w)| x * w).sum();
    let mut b = DMatrix::zeros(s + 1, n);
    for j in 0..n {
        b[(0, j)] = xs[j] / v0 - sum_x * vs[j] / (v0 * v0 * v0) - vs[j] / v0;
    }
    for i in 0..s {
        let dus = point.du[i].space();
        let sum_du: f64 = dus.iter().zip(vs).map(|(x, w)| x * w).sum();
        for j in 0..n {
            b[(i + 1, j)] = dus[j] / v0 - sum_du * vs[j] / (v0 * v0 * v0);
        }
    }
    Ok(b)
}

/// Rank of the Morse-family Jacobian at the pedal point of
/// `(point, frame, xi)`.
///
/// Preconditions: the pedal scalar must stay away from zero (otherwise
/// the pedal point is the cone vertex and the chart fails), and the pair
/// `(~H, grad_u ~H)` must vanish there within `height_tol` — by
/// construction it does up to rounding, so a violation signals corrupted
/// inputs rather than interesting geometry.
pub fn morse_family_rank(
    point: &PointEval,
    frame: &NormalFrame,
    angles: &SphereAngles,
    height_tol: f64,
    rank_sigma: f64,
) -> Result<usize> {
    let gauss = lightcone_gauss(frame, angles)?;
    let rho = pseudo_product(&point.position, &gauss.lg_normalized)?;
    let scale = point.position.euclid_norm().max(1.0);
    if rho.abs() <= DEGENERATE_PEDAL_TOL * scale {
        return Err(Error::Degenerate(
            "pedal point degenerates to the cone vertex here".into(),
        ));
    }
    let v = gauss.lg_normalized.scale(rho);
    let he = extended_height(point, &v)?;
    let worst = he
        .grad_u
        .iter()
        .fold(he.value.abs(), |a, g| a.max(g.abs()));
    if worst > height_tol {
        return Err(Error::Precondition(format!(
            "(u, t, v) is not on the critical set: residual {worst:e}"
        )));
    }
    let b = morse_family_matrix(point, &v)?;
    Ok(matrix_rank(&b, rank_sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::worldsheet::evaluate;

    fn mv(coords: &[f64]) -> MinkVector {
        MinkVector::from_slice(coords).unwrap()
    }

    #[test]
    fn cylinder_height_hand_values() {
        let spec = fixtures::cylinder(2.0);
        let pe = evaluate(&spec, &[0.0], 0.0).unwrap();
        let v = mv(&[1.0, 0.0, 1.0]);
        let h = height(&pe, &v).unwrap();
        assert_eq!(h.value, 0.0);
        assert_eq!(h.grad_u, vec![2.0]);
        assert_eq!(h.hess_u, vec![vec![0.0]]);
        assert_eq!(h.rank_hess, 0);

        let w = v.scale(2.0);
        let he = extended_height(&pe, &w).unwrap();
        assert_eq!(he.value, -2.0);
        assert_eq!(he.grad_u, vec![2.0]);
    }

    #[test]
    fn height_rejects_off_cone_directions() {
        let spec = fixtures::cylinder(2.0);
        let pe = evaluate(&spec, &[0.0], 0.0).unwrap();
        assert!(height(&pe, &mv(&[1.0, 0.0, 0.0])).is_err());
        assert!(height(&pe, &mv(&[2.0, 2.0, 0.0])).is_err()); // v_0 != 1
        assert!(extended_height(&pe, &mv(&[0.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn critical_directions_have_zero_gradient() {
        for name in ["cyl", "flt", "sph", "cylline"] {
            let spec = fixtures::fixture(name).unwrap();
            let u: Vec<f64> = spec
                .domain()
                .u
                .iter()
                .map(|r| r.min + 0.37 * (r.max - r.min))
                .collect();
            let pe = evaluate(&spec, &u, 0.21).unwrap();
            let frame = NormalFrame::build(&pe).unwrap();
            let charts = default_charts(frame.normal_rank(), 8);
            for v in critical_lightcone_directions(&frame, &charts).unwrap() {
                let h = height(&pe, &v).unwrap();
                for g in &h.grad_u {
                    assert!(g.abs() < 1e-9, "{name}: grad {g}");
                }
            }
        }
    }

    #[test]
    fn hessian_identity_holds_with_plus_sign() {
        let spec = fixtures::cylinder(2.0);
        let pe = evaluate(&spec, &[0.4], 0.1).unwrap();
        let frame = NormalFrame::build(&pe).unwrap();
        let id = hessian_identity_check(&pe, &frame, &SphereAngles::Sign(1)).unwrap();
        assert!(id.res_plus < 1e-12, "plus residual {}", id.res_plus);
        // h = [-2] here, so the flipped convention misses by 2|h|/l_0 = 4
        assert!((id.res_minus - 4.0).abs() < 1e-9);
    }

    #[test]
    fn morse_family_matrix_cylinder_hand_value() {
        // CYL(2) at u = 0, t = 0, outward branch: pedal v = (2, 2, 0),
        // X = (0, 2, 0). Rows: [~H_v1, ~H_v2; ~H_uv1, ~H_uv2]
        // = [[-1, 0], [0, 1]] by the closed forms.
        let spec = fixtures::cylinder(2.0);
        let pe = evaluate(&spec, &[0.0], 0.0).unwrap();
        let v = mv(&[2.0, 2.0, 0.0]);
        let b = morse_family_matrix(&pe, &v).unwrap();
        assert_eq!(b.nrows(), 2);
        assert_eq!(b.ncols(), 2);
        assert!((b[(0, 0)] + 1.0).abs() < 1e-12);
        assert!(b[(0, 1)].abs() < 1e-12);
        assert!(b[(1, 0)].abs() < 1e-12);
        assert!((b[(1, 1)] - 1.0).abs() < 1e-12);
        assert_eq!(matrix_rank(&b, RANK_SIGMA), 2);
    }

    #[test]
    fn morse_family_matrix_matches_finite_differences() {
        // independent oracle: differentiate ~H through the chart
        // v = (sign * sqrt(sum v_j^2), v_1, ..., v_n) numerically
        let spec = fixtures::sphere(2.0);
        let pe = evaluate(&spec, &[1.1, 0.7], 0.3).unwrap();
        let frame = NormalFrame::build(&pe).unwrap();
        let gauss = lightcone_gauss(&frame, &SphereAngles::Sign(1)).unwrap();
        let rho = pseudo_product(&pe.position, &gauss.lg_normalized).unwrap();
        let v = gauss.lg_normalized.scale(rho);
        let b = morse_family_matrix(&pe, &v).unwrap();

        let sign = v.time().signum();
        let chart_eval = |vs: &[f64]| -> Vec<f64> {
            let v0 = sign * vs.iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut coords = vec![v0];
            coords.extend_from_slice(vs);
            let w = MinkVector::new(coords).unwrap();
            let he = extended_height(&pe, &w).unwrap();
            let mut out = vec![he.value];
            out.extend(he.grad_u);
            out
        };
        let n = v.dim() - 1;
        let h = 1e-6;
        for j in 0..n {
            let mut up = v.space().to_vec();
            let mut dn = v.space().to_vec();
            up[j] += h;
            dn[j] -= h;
            let fu = chart_eval(&up);
            let fd = chart_eval(&dn);
            for r in 0..fu.len() {
                let fd_val = (fu[r] - fd[r]) / (2.0 * h);
                assert!(
                    (b[(r, j)] - fd_val).abs() < 1e-6,
                    "B[{r}][{j}] = {} vs fd {}",
                    b[(r, j)],
                    fd_val
                );
            }
        }
    }

    #[test]
    fn morse_rank_is_full_on_fixtures() {
        for name in ["cyl", "sph", "cylline"] {
            let spec = fixtures::fixture(name).unwrap();
            let u: Vec<f64> = spec
                .domain()
                .u
                .iter()
                .map(|r| r.min + 0.41 * (r.max - r.min))
                .collect();
            let pe = evaluate(&spec, &u, 0.17).unwrap();
            let frame = NormalFrame::build(&pe).unwrap();
            let rank = morse_family_rank(
                &pe,
                &frame,
                &SphereAngles::Sign(1),
                HEIGHT_TOL,
                RANK_SIGMA,
            )
            .unwrap();
            assert_eq!(rank, spec.space_dims() + 1, "{name}");
        }
    }

    #[test]
    fn morse_rank_rejects_degenerate_pedal() {
        // CYL(2) at t = 2 collapses the pedal to the cone vertex
        let spec = fixtures::cylinder_with_time(2.0, 0.0, 2.0);
        let pe = evaluate(&spec, &[0.3], 2.0).unwrap();
        let frame = NormalFrame::build(&pe).unwrap();
        let err = morse_family_rank(
            &pe,
            &frame,
            &SphereAngles::Sign(1),
            HEIGHT_TOL,
            RANK_SIGMA,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn newton_on_the_zero_set_returns_to_the_pedal_point() {
        // ~H = grad ~H = 0 determines v uniquely as the pedal point; with
        // n = s + 1 the system is square and B is its Jacobian, so Newton
        // from a nearby start must come back to the pedal point.
        let spec = fixtures::cylinder(2.0);
        let pe = evaluate(&spec, &[0.9], -0.4).unwrap();
        let frame = NormalFrame::build(&pe).unwrap();
        let gauss = lightcone_gauss(&frame, &SphereAngles::Sign(1)).unwrap();
        let rho = pseudo_product(&pe.position, &gauss.lg_normalized).unwrap();
        let pedal = gauss.lg_normalized.scale(rho);
        let sign = pedal.time().signum();

        let mut vs: Vec<f64> = pedal
            .space()
            .iter()
            .enumerate()
            .map(|(j, x)| x * (1.0 + 0.05 * (j as f64 + 1.0)))
            .collect();
        for _ in 0..50 {
            let v0 = sign * vs.iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut coords = vec![v0];
            coords.extend_from_slice(&vs);
            let w = MinkVector::new(coords).unwrap();
            let he = extended_height(&pe, &w).unwrap();
            let f = nalgebra::DVector::from_vec(
                std::iter::once(he.value).chain(he.grad_u).collect(),
            );
            if f.norm() < 1e-14 {
                break;
            }
            let b = morse_family_matrix(&pe, &w).unwrap();
            let step = b.lu().solve(&f).expect("B is invertible near the pedal");
            for (x, d) in vs.iter_mut().zip(step.iter()) {
                *x -= d;
            }
        }
        for (x, p) in vs.iter().zip(pedal.space()) {
            assert!((x - p).abs() < 1e-10, "Newton drifted: {x} vs {p}");
        }
    }
}
