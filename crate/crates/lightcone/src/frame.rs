//! Pseudo-orthonormal frames of the momentary normal bundle.
//!
//! At a point of an admissible world sheet the tangent space of the swept
//! manifold splits off a unique *future-directed unit timelike normal*
//! `n^T` of the momentary space: the component of `X_t` orthogonal to the
//! `X_{u_i}`, normalized and oriented so its time coordinate is positive.
//! The remaining normal directions of the momentary space are spacelike;
//! [`spacelike_frame`] picks an orthonormal basis `n^S_1..n^S_{k-1}` of
//! them by Gram-Schmidt over canonical seed vectors (lowest index wins),
//! which makes the frame deterministic. Unit normal-sphere directions
//! `xi` are addressed by [`SphereAngles`]: a sign for rank-2 normal
//! bundles, spherical angles above that.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minkowski::{pseudo_product, MinkVector};
use crate::worldsheet::PointEval;

/// Gram-Schmidt pivot threshold: a projected seed with Lorentz norm below
/// this is discarded as numerically dependent.
pub const FRAME_PIVOT: f64 = 1e-8;

/// Orthonormal basis of a momentary normal space: one timelike vector
/// (`<n^T, n^T> = -1`, future-directed) and `k - 1` spacelike ones.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormalFrame {
    pub timelike: MinkVector,
    pub spacelike: Vec<MinkVector>,
}

/// Chart on the unit sphere of spacelike normal directions.
///
/// For normal rank `k = 2` the sphere is the two-point set `{+n^S_1,
/// -n^S_1}`, addressed by a sign. For `k >= 3` a direction is
/// `sum_m c_m n^S_m` with spherical coordinates
/// `c_1 = cos a_1`, `c_2 = sin a_1 cos a_2`, ...,
/// `c_{k-1} = sin a_1 ... sin a_{k-2}` over `k - 2` angles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SphereAngles {
    Sign(i8),
    Angles(Vec<f64>),
}

impl SphereAngles {
    /// Number of angle parameters for normal rank `k` (zero when `k = 2`).
    pub fn dof(normal_rank: usize) -> usize {
        normal_rank.saturating_sub(2)
    }
}

/// The future-directed unit timelike normal of the momentary space that is
/// tangent to the swept manifold: normalize the component of `X_t`
/// orthogonal to all `X_{u_i}`, with the sign fixed by a positive time
/// coordinate.
pub fn timelike_normal(point: &PointEval) -> Result<MinkVector> {
    let s = point.du.len();
    let mut b = vec![0.0; s];
    for i in 0..s {
        b[i] = pseudo_product(&point.dt, &point.du[i])?;
    }
    let c = point.metric_solve(&b)?;
    let mut v = point.dt.clone();
    for j in 0..s {
        v = v.sub(&point.du[j].scale(c[j]))?;
    }
    let q = pseudo_product(&v, &v)?;
    if q >= 0.0 {
        return Err(Error::Degenerate(
            "sheet is not timelike here: X_t has no timelike normal component".into(),
        ));
    }
    let mut n = v.scale(1.0 / (-q).sqrt());
    if n.time() < 0.0 {
        n = n.scale(-1.0);
    }
    Ok(n)
}

/// Component of `v` orthogonal (in the pseudo-product) to the momentary
/// tangent space and to `n_t`.
fn normal_projection(point: &PointEval, n_t: &MinkVector, v: &MinkVector) -> Result<MinkVector> {
    let tang = point.tangential_projection(v)?;
    // <n_t, n_t> = -1, so the n_t component of v is -<v, n_t> n_t
    let a = pseudo_product(v, n_t)?;
    v.sub(&tang)?.add(&n_t.scale(a))
}

/// Orthonormal spacelike basis of the rest of the normal space, by
/// Gram-Schmidt over the seeds `e_1, ..., e_n, e_0` in that order.
pub fn spacelike_frame(point: &PointEval, n_t: &MinkVector) -> Result<Vec<MinkVector>> {
    let dim = point.position.dim();
    let want = dim - point.du.len() - 1;
    let mut frame: Vec<MinkVector> = Vec::with_capacity(want);
    let mut seeds: Vec<MinkVector> = (1..dim).map(|m| MinkVector::basis(dim, m)).collect();
    seeds.push(MinkVector::basis(dim, 0));
    for seed in seeds {
        if frame.len() == want {
            break;
        }
        let mut w = normal_projection(point, n_t, &seed)?;
        for prev in &frame {
            let a = pseudo_product(&w, prev)?;
            w = w.sub(&prev.scale(a))?;
        }
        let q = pseudo_product(&w, &w)?;
        if q <= FRAME_PIVOT * FRAME_PIVOT {
            continue;
        }
        frame.push(w.scale(1.0 / q.sqrt()));
    }
    if frame.len() != want {
        return Err(Error::Degenerate(format!(
            "could not complete a spacelike normal frame: got {} of {want} vectors",
            frame.len()
        )));
    }
    Ok(frame)
}

impl NormalFrame {
    pub fn build(point: &PointEval) -> Result<NormalFrame> {
        let timelike = timelike_normal(point)?;
        let spacelike = spacelike_frame(point, &timelike)?;
        Ok(NormalFrame {
            timelike,
            spacelike,
        })
    }

    /// Normal rank `k` (count of all normal directions including `n^T`).
    pub fn normal_rank(&self) -> usize {
        self.spacelike.len() + 1
    }

    /// Flips the sign of any spacelike frame vector whose pseudo-product
    /// with the corresponding vector of `reference` is negative. Used to
    /// keep frame fields continuous along grid sweeps; the timelike
    /// normal is canonical and never flipped.
    pub fn align_signs_to(&mut self, reference: &NormalFrame) {
        for (v, r) in self.spacelike.iter_mut().zip(&reference.spacelike) {
            if pseudo_product(v, r).expect("same dim") < 0.0 {
                *v = v.scale(-1.0);
            }
        }
    }
}

/// Resolves a [`SphereAngles`] chart value to a unit spacelike normal
/// direction in the given frame.
pub fn xi_from_angles(frame: &NormalFrame, angles: &SphereAngles) -> Result<MinkVector> {
    let k = frame.normal_rank();
    match angles {
        SphereAngles::Sign(s) => {
            if k != 2 {
                return Err(Error::Precondition(format!(
                    "sign chart only addresses normal rank 2, frame has rank {k}"
                )));
            }
            match s {
                1 => Ok(frame.spacelike[0].clone()),
                -1 => Ok(frame.spacelike[0].scale(-1.0)),
                other => Err(Error::Precondition(format!(
                    "sign chart must be +1 or -1, got {other}"
                ))),
            }
        }
        SphereAngles::Angles(a) => {
            if k < 3 {
                return Err(Error::Precondition(
                    "angle chart needs normal rank >= 3; use the sign chart".into(),
                ));
            }
            if a.len() != k - 2 {
                return Err(Error::DimensionMismatch {
                    expected: k - 2,
                    got: a.len(),
                });
            }
            let mut xi = MinkVector::zero(frame.timelike.dim());
            let mut sin_prod = 1.0;
            for (m, &angle) in a.iter().enumerate() {
                xi = xi.add(&frame.spacelike[m].scale(sin_prod * angle.cos()))?;
                sin_prod *= angle.sin();
            }
            xi = xi.add(&frame.spacelike[k - 2].scale(sin_prod))?;
            Ok(xi)
        }
    }
}

/// The angle chart value that resolves to a given unit normal direction
/// `xi` (the inverse of [`xi_from_angles`] for `k >= 3`), or the sign for
/// `k = 2`. `xi` must lie in the span of the spacelike frame.
pub fn angles_from_xi(frame: &NormalFrame, xi: &MinkVector) -> Result<SphereAngles> {
    let k = frame.normal_rank();
    let mut comps = Vec::with_capacity(k - 1);
    for v in &frame.spacelike {
        comps.push(pseudo_product(xi, v)?);
    }
    let norm: f64 = comps.iter().map(|c| c * c).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::Precondition(
            "xi is not a unit vector in the spacelike normal span".into(),
        ));
    }
    if k == 2 {
        return Ok(SphereAngles::Sign(if comps[0] >= 0.0 { 1 } else { -1 }));
    }
    let mut angles = Vec::with_capacity(k - 2);
    let mut tail: f64 = comps.iter().map(|c| c * c).sum();
    for m in 0..k - 2 {
        // angle m: cos = comps[m] / sqrt(tail of remaining components)
        let r = tail.max(0.0).sqrt();
        let mut a = if r > 0.0 {
            (comps[m] / r).clamp(-1.0, 1.0).acos()
        } else {
            0.0
        };
        // the last angle runs the full circle; recover its sign from the
        // final component
        if m == k - 3 && comps[k - 2] < 0.0 {
            a = std::f64::consts::TAU - a;
        }
        angles.push(a);
        tail -= comps[m] * comps[m];
    }
    Ok(SphereAngles::Angles(angles))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::worldsheet::evaluate;

    fn assert_frame_orthonormal(frame: &NormalFrame, point: &PointEval) {
        let nt = &frame.timelike;
        assert!(
            (pseudo_product(nt, nt).unwrap() + 1.0).abs() < 1e-12,
            "n_t not unit timelike"
        );
        assert!(nt.time() > 0.0, "n_t not future-directed");
        for du in &point.du {
            assert!(pseudo_product(nt, du).unwrap().abs() < 1e-12);
        }
        for (i, v) in frame.spacelike.iter().enumerate() {
            assert!(pseudo_product(v, nt).unwrap().abs() < 1e-12);
            for du in &point.du {
                assert!(pseudo_product(v, du).unwrap().abs() < 1e-12);
            }
            for (j, w) in frame.spacelike.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (pseudo_product(v, w).unwrap() - want).abs() < 1e-12,
                    "spacelike frame not orthonormal"
                );
            }
        }
    }

    #[test]
    fn cylinder_frame_hand_values() {
        let spec = fixtures::cylinder(2.0);
        let pe = evaluate(&spec, &[0.0], 0.0).unwrap();
        let frame = NormalFrame::build(&pe).unwrap();
        assert_eq!(frame.timelike.coords(), &[1.0, 0.0, 0.0]);
        assert_eq!(frame.spacelike.len(), 1);
        let ns = &frame.spacelike[0];
        assert!((ns.get(1) - 1.0).abs() < 1e-12 && ns.get(0).abs() < 1e-12);
        assert_frame_orthonormal(&frame, &pe);
    }

    #[test]
    fn flat_sheet_frame_hand_values() {
        let spec = fixtures::flat_sheet(0.5, 0.0);
        let pe = evaluate(&spec, &[0.3], -0.7).unwrap();
        let frame = NormalFrame::build(&pe).unwrap();
        let r3 = 3.0f64.sqrt();
        assert!((frame.timelike.get(0) - 2.0 / r3).abs() < 1e-12);
        assert!((frame.timelike.get(1) - 1.0 / r3).abs() < 1e-12);
        assert!(frame.timelike.get(2).abs() < 1e-12);
        assert!((frame.spacelike[0].get(0) - 1.0 / r3).abs() < 1e-12);
        assert!((frame.spacelike[0].get(1) - 2.0 / r3).abs() < 1e-12);
        assert_frame_orthonormal(&frame, &pe);
    }

    #[test]
    fn frames_are_orthonormal_across_fixtures() {
        for name in fixtures::FIXTURE_NAMES {
            let spec = fixtures::fixture(name).unwrap();
            let s = spec.space_dims();
            // a scatter of interior points
            for step in 0..5 {
                let f = 0.15 + 0.17 * step as f64;
                let u: Vec<f64> = spec
                    .domain()
                    .u
                    .iter()
                    .map(|r| r.min + f * (r.max - r.min))
                    .collect();
                let t = spec.domain().t.min + f * spec.domain().t.span();
                let pe = evaluate(&spec, &u[..s], t).unwrap();
                let frame = NormalFrame::build(&pe).unwrap();
                assert_eq!(frame.normal_rank(), spec.normal_rank(), "{name}");
                assert_frame_orthonormal(&frame, &pe);
            }
        }
    }

    #[test]
    fn sign_chart_resolves_both_branches() {
        let spec = fixtures::cylinder(2.0);
        let pe = evaluate(&spec, &[0.0], 0.0).unwrap();
        let frame = NormalFrame::build(&pe).unwrap();
        let plus = xi_from_angles(&frame, &SphereAngles::Sign(1)).unwrap();
        let minus = xi_from_angles(&frame, &SphereAngles::Sign(-1)).unwrap();
        assert_eq!(plus.coords(), frame.spacelike[0].coords());
        assert_eq!(minus.scale(-1.0).coords(), plus.coords());
        assert!(xi_from_angles(&frame, &SphereAngles::Sign(0)).is_err());
        assert!(xi_from_angles(&frame, &SphereAngles::Angles(vec![0.1])).is_err());
    }

    #[test]
    fn angle_chart_is_unit_and_invertible() {
        let spec = fixtures::sphere_r5(2.0);
        let pe = evaluate(&spec, &[1.1, 0.6], 0.2).unwrap();
        let frame = NormalFrame::build(&pe).unwrap();
        assert_eq!(frame.normal_rank(), 3);
        for theta in [0.0, 0.7, 2.0, 4.4] {
            let xi = xi_from_angles(&frame, &SphereAngles::Angles(vec![theta])).unwrap();
            let q = pseudo_product(&xi, &xi).unwrap();
            assert!((q - 1.0).abs() < 1e-12, "xi not unit at theta={theta}");
            assert!(pseudo_product(&xi, &frame.timelike).unwrap().abs() < 1e-12);
            let back = angles_from_xi(&frame, &xi).unwrap();
            match back {
                SphereAngles::Angles(a) => {
                    let wrapped = theta.rem_euclid(std::f64::consts::TAU);
                    assert!(
                        (a[0] - wrapped).abs() < 1e-9
                            || (a[0] - wrapped).abs() > std::f64::consts::TAU - 1e-9,
                        "angle inversion: {theta} -> {}",
                        a[0]
                    );
                }
                other => panic!("expected angles, got {other:?}"),
            }
        }
    }

    #[test]
    fn sign_alignment_flips_toward_reference() {
        let spec = fixtures::cylinder(2.0);
        let pe = evaluate(&spec, &[0.1], 0.0).unwrap();
        let reference = NormalFrame::build(&pe).unwrap();
        let mut flipped = reference.clone();
        flipped.spacelike[0] = flipped.spacelike[0].scale(-1.0);
        flipped.align_signs_to(&reference);
        assert_eq!(
            flipped.spacelike[0].coords(),
            reference.spacelike[0].coords()
        );
    }
}
