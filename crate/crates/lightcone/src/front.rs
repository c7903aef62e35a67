//! Lightcone pedal maps, big wave fronts, and their singular loci.
//!
//! The *lightcone pedal point* of `(u, t, xi)` is `<X, ~LG> ~LG`: the
//! point where the lightlike hyperplane tangent to the momentary space
//! touches the lightcone's unit-direction ray field. Unfolding over `t`
//! gives the map `(u, xi, t) -> (pedal, t)` whose image is the *big wave
//! front*; the `t`-slices are the momentary wave fronts.
//!
//! [`front_mesh`] samples the front over a product grid (parameter axes:
//! the `u` axes, the normal-sphere chart, and `t`), with the normal frame
//! field sign-aligned along the grid so charts address continuous normal
//! directions. [`singular_scan`] classifies each sample by the numerical
//! rank of grid-difference Jacobians:
//!
//! * `legendrian_singular`: rank of `d(pedal)/d(u, xi)` below `n - 1` —
//!   the unfolded map fails to immerse there (these project to the
//!   caustic);
//! * `space_singular`: rank of `d(pedal)/d(u, xi, t)` below `n` — the
//!   space projection of the big front is critical there;
//! * `degenerate_zero`: the pedal scalar vanishes, the pedal point hits
//!   the cone vertex and leaves the chart; such samples are kept but
//!   excluded from rank statistics and matching.
//!
//! Projecting to `t` is a submersion on the big front by construction, so
//! there are no "time-singular" samples; the scan does not look for any.

use std::collections::HashMap;
use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::curvature::lightcone_gauss;
use crate::error::{Error, Result};
use crate::frame::{NormalFrame, SphereAngles};
use crate::height::matrix_rank;
use crate::minkowski::{pseudo_product, LightlikeHyperplane, MinkVector};
use crate::worldsheet::{evaluate, multi_indices, PointEval, WorldSheetSpec};

/// Pedal scalars below `DEGENERATE_PEDAL_TOL * max(1, |X|)` count as the
/// cone vertex (same rule as the Morse-family precondition).
pub use crate::height::DEGENERATE_PEDAL_TOL;

/// Default relative singular-value cutoff for ranks of grid-difference
/// Jacobians; looser than the analytic [`crate::height::RANK_SIGMA`]
/// because the entries carry `O(h^2)` truncation error.
pub const FD_RANK_SIGMA: f64 = 1e-6;

/// A pedal-map value.
#[derive(Clone, Debug, Serialize)]
pub struct PedalPoint {
    /// `<X, ~LG> ~LG`
    pub point: MinkVector,
    /// `<X, ~LG>`
    pub scalar: f64,
}

/// Computes the lightcone pedal point for one normal direction.
pub fn pedal_point(
    point: &PointEval,
    frame: &NormalFrame,
    angles: &SphereAngles,
) -> Result<PedalPoint> {
    let gauss = lightcone_gauss(frame, angles)?;
    let scalar = pseudo_product(&point.position, &gauss.lg_normalized)?;
    Ok(PedalPoint {
        point: gauss.lg_normalized.scale(scalar),
        scalar,
    })
}

/// The unfolded pedal value `(pedal, t)` as a flat coordinate vector in
/// `R^{n+2}`, the space the big wave front lives in.
pub fn unfolded_pedal(pedal: &PedalPoint, t: f64) -> Vec<f64> {
    let mut out = pedal.point.coords().to_vec();
    out.push(t);
    out
}

/// The lightlike hyperplane `HP(~LG, <X, ~LG>)` tangent to the momentary
/// space along `xi`. When the pedal scalar is (numerically) zero the
/// hyperplane passes through the origin and the returned flag is set.
pub fn tangent_lightlike_hyperplane(
    point: &PointEval,
    frame: &NormalFrame,
    angles: &SphereAngles,
) -> Result<(LightlikeHyperplane, bool)> {
    let pedal = pedal_point(point, frame, angles)?;
    let gauss = lightcone_gauss(frame, angles)?;
    let scale = point.position.euclid_norm().max(1.0);
    let degenerate = pedal.scalar.abs() <= DEGENERATE_PEDAL_TOL * scale;
    let offset = if degenerate { 0.0 } else { pedal.scalar };
    Ok((LightlikeHyperplane::new(gauss.lg_normalized, offset)?, degenerate))
}

/// Axis layout of a front mesh: `u` axes, then the normal chart axes
/// (one two-point branch axis for normal rank 2, `k - 2` angle axes
/// above that), then `t`.
#[derive(Clone, Debug, Serialize)]
pub struct FrontAxes {
    pub u: Vec<Vec<f64>>,
    /// `Some([1, -1])` when the chart is the sign chart.
    pub branch: Option<Vec<i8>>,
    /// Angle-axis samples (empty for the sign chart).
    pub angles: Vec<Vec<f64>>,
    pub t: Vec<f64>,
    /// Per param-axis periodicity (same order as [`FrontMesh::counts`],
    /// `t` included).
    pub periodic: Vec<bool>,
}

/// One sample of the unfolded pedal map.
#[derive(Clone, Debug, Serialize)]
pub struct FrontSample {
    pub index: Vec<usize>,
    pub u: Vec<f64>,
    pub chart: SphereAngles,
    pub t: f64,
    /// Base point `X(u, t)` on the sheet.
    pub x: Vec<f64>,
    pub pedal: Vec<f64>,
    pub pedal_scalar: f64,
    /// Rank of `d(pedal)/d(u, xi)` (set by [`singular_scan`]).
    pub jac_rank_param: usize,
    /// Rank of `d(pedal)/d(u, xi, t)`.
    pub jac_rank_space: usize,
    pub legendrian_singular: bool,
    pub space_singular: bool,
    pub degenerate_zero: bool,
}

/// Sample counts for a front sweep.
#[derive(Clone, Debug, Serialize)]
pub struct FrontGrid {
    pub u_counts: Vec<usize>,
    /// Samples per normal-chart angle (ignored for normal rank 2).
    pub angle_count: usize,
    pub t_count: usize,
}

/// A sampled big wave front.
#[derive(Clone, Debug, Serialize)]
pub struct FrontMesh {
    pub sheet: String,
    pub ambient_dim: usize,
    pub space_dims: usize,
    pub normal_rank: usize,
    pub axes: FrontAxes,
    /// Sample counts per axis, `[u..., chart..., t]`; samples are stored
    /// row-major against this (last axis fastest).
    pub counts: Vec<usize>,
    pub samples: Vec<FrontSample>,
    /// Polyline connectivity (pairs of sample indices), when the per-`t`
    /// slices are curves.
    pub segments: Vec<[usize; 2]>,
    /// Triangle connectivity, when the per-`t` slices are surfaces.
    pub triangles: Vec<[usize; 3]>,
    /// True when a periodic seam came back sign-flipped; that seam is
    /// left unstitched.
    pub seam_flip: bool,
    /// Set once [`singular_scan`] has filled the rank fields.
    pub scanned: bool,
}

pub(crate) fn flatten(idx: &[usize], counts: &[usize]) -> usize {
    let mut flat = 0;
    for (i, c) in idx.iter().zip(counts) {
        flat = flat * c + i;
    }
    flat
}

/// Frame-aligned grid samples plus the per-axis sample counts.
pub(crate) type AlignedFrames = (Vec<(PointEval, NormalFrame)>, Vec<usize>);

/// Evaluates the sheet and builds sign-aligned frames over the `(u, t)`
/// grid. Frames are computed in parallel and aligned in one sequential
/// pass: each grid point aligns to its predecessor (rightmost nonzero
/// index decremented), which is always an adjacent, earlier point.
pub(crate) fn aligned_point_frames(
    spec: &WorldSheetSpec,
    u_axes: &[Vec<f64>],
    t_axis: &[f64],
) -> Result<AlignedFrames> {
    let s = u_axes.len();
    let mut counts: Vec<usize> = u_axes.iter().map(|a| a.len()).collect();
    counts.push(t_axis.len());
    let idxs = multi_indices(&counts);
    let mut items: Vec<(PointEval, NormalFrame)> = idxs
        .par_iter()
        .map(|idx| {
            let u: Vec<f64> = (0..s).map(|i| u_axes[i][idx[i]]).collect();
            let t = t_axis[idx[s]];
            let pe = evaluate(spec, &u, t)?;
            let frame = NormalFrame::build(&pe)?;
            Ok((pe, frame))
        })
        .collect::<Result<Vec<_>>>()?;
    for flat in 1..items.len() {
        let mut pred = idxs[flat].clone();
        for ax in (0..pred.len()).rev() {
            if pred[ax] > 0 {
                pred[ax] -= 1;
                break;
            }
        }
        let pred_flat = flatten(&pred, &counts);
        debug_assert!(pred_flat < flat);
        let (left, right) = items.split_at_mut(flat);
        right[0].1.align_signs_to(&left[pred_flat].1);
    }
    Ok((items, counts))
}

/// Detects a sign flip across the seam of any periodic `u` axis of the
/// aligned frame field.
fn detect_seam_flip(
    spec: &WorldSheetSpec,
    items: &[(PointEval, NormalFrame)],
    counts: &[usize],
) -> bool {
    let idxs = multi_indices(counts);
    for (ax, range) in spec.domain().u.iter().enumerate() {
        if !range.periodic || counts[ax] < 2 {
            continue;
        }
        for idx in &idxs {
            if idx[ax] != 0 {
                continue;
            }
            let mut far = idx.clone();
            far[ax] = counts[ax] - 1;
            let a = &items[flatten(idx, counts)].1;
            let b = &items[flatten(&far, counts)].1;
            for (v, w) in a.spacelike.iter().zip(&b.spacelike) {
                if pseudo_product(v, w).expect("same dim") < 0.0 {
                    return true;
                }
            }
        }
    }
    false
}

/// Samples the unfolded pedal map of `spec` over a product grid.
///
/// Slice connectivity (per fixed `t` and branch) is emitted when the
/// slices are curves (one chart axis: polylines) or surfaces (two chart
/// axes: triangles); higher-dimensional slices get no connectivity.
/// Periodic axes are stitched across the seam unless the frame field
/// comes back flipped.
pub fn front_mesh(spec: &WorldSheetSpec, grid: &FrontGrid) -> Result<FrontMesh> {
    let s = spec.space_dims();
    let k = spec.normal_rank();
    if grid.u_counts.len() != s {
        return Err(Error::DimensionMismatch {
            expected: s,
            got: grid.u_counts.len(),
        });
    }
    for &c in grid.u_counts.iter().chain([&grid.t_count]) {
        if c < 2 {
            return Err(Error::Precondition(
                "front grids need at least 2 samples per u/t axis".into(),
            ));
        }
    }
    let u_axes: Vec<Vec<f64>> = spec
        .domain()
        .u
        .iter()
        .zip(&grid.u_counts)
        .map(|(r, &c)| r.samples(c))
        .collect();
    let t_axis = spec.domain().t.samples(grid.t_count);

    // chart axes
    let (branch, angle_axes): (Option<Vec<i8>>, Vec<Vec<f64>>) = if k == 2 {
        (Some(vec![1, -1]), Vec::new())
    } else {
        if grid.angle_count < 2 {
            return Err(Error::Precondition(
                "front grids need at least 2 samples per angle axis".into(),
            ));
        }
        let nang = k - 2;
        let mut axes = Vec::with_capacity(nang);
        for m in 0..nang {
            if m + 1 == nang {
                // the last angle runs the full circle, periodic
                axes.push(
                    (0..grid.angle_count)
                        .map(|i| std::f64::consts::TAU * i as f64 / grid.angle_count as f64)
                        .collect(),
                );
            } else {
                // polar angles stay off their endpoints
                axes.push(
                    (0..grid.angle_count)
                        .map(|i| {
                            std::f64::consts::PI * (i as f64 + 0.5) / grid.angle_count as f64
                        })
                        .collect(),
                );
            }
        }
        (None, axes)
    };

    let (items, ut_counts) = aligned_point_frames(spec, &u_axes, &t_axis)?;
    let seam_flip = detect_seam_flip(spec, &items, &ut_counts);

    // full axis layout: [u..., chart..., t]
    let mut counts: Vec<usize> = grid.u_counts.clone();
    if k == 2 {
        counts.push(2);
    } else {
        counts.extend(std::iter::repeat_n(grid.angle_count, k - 2));
    }
    counts.push(grid.t_count);

    let mut periodic: Vec<bool> = spec.domain().u.iter().map(|r| r.periodic).collect();
    if k == 2 {
        periodic.push(false); // branch axis: no wrap
    } else {
        for m in 0..k - 2 {
            periodic.push(m + 1 == k - 2); // only the full-circle angle wraps
        }
    }
    periodic.push(spec.domain().t.periodic);

    let idxs = multi_indices(&counts);
    let samples: Vec<FrontSample> = idxs
        .par_iter()
        .map(|idx| {
            let mut ut_idx: Vec<usize> = idx[..s].to_vec();
            ut_idx.push(idx[counts.len() - 1]);
            let (pe, frame) = &items[flatten(&ut_idx, &ut_counts)];
            let chart = if k == 2 {
                SphereAngles::Sign(if idx[s] == 0 { 1 } else { -1 })
            } else {
                SphereAngles::Angles(
                    (0..k - 2).map(|m| angle_axes[m][idx[s + m]]).collect(),
                )
            };
            let pedal = pedal_point(pe, frame, &chart)?;
            let scale = pe.position.euclid_norm().max(1.0);
            let degenerate_zero = pedal.scalar.abs() <= DEGENERATE_PEDAL_TOL * scale;
            Ok(FrontSample {
                index: idx.clone(),
                u: pe.u.clone(),
                chart,
                t: pe.t,
                x: pe.position.coords().to_vec(),
                pedal: pedal.point.coords().to_vec(),
                pedal_scalar: pedal.scalar,
                jac_rank_param: 0,
                jac_rank_space: 0,
                legendrian_singular: false,
                space_singular: false,
                degenerate_zero,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // connectivity over the slice axes (everything but branch and t)
    let mut slice_axes: Vec<usize> = (0..s).collect();
    if k >= 3 {
        slice_axes.extend(s..s + (k - 2));
    }
    let mut segments = Vec::new();
    let mut triangles = Vec::new();
    let stride = |ax: usize| -> usize { counts[ax + 1..].iter().product() };
    let wrapable = |ax: usize| periodic[ax] && !seam_flip;
    if slice_axes.len() == 1 {
        let ax = slice_axes[0];
        for (flat, idx) in idxs.iter().enumerate() {
            let i = idx[ax];
            if i + 1 < counts[ax] {
                segments.push([flat, flat + stride(ax)]);
            } else if wrapable(ax) && counts[ax] > 2 {
                segments.push([flat, flat - i * stride(ax)]);
            }
        }
    } else if slice_axes.len() == 2 {
        let (a, b) = (slice_axes[0], slice_axes[1]);
        for (flat, idx) in idxs.iter().enumerate() {
            let (ia, ib) = (idx[a], idx[b]);
            let next_a = if ia + 1 < counts[a] {
                Some(flat + stride(a))
            } else if wrapable(a) && counts[a] > 2 {
                Some(flat - ia * stride(a))
            } else {
                None
            };
            let next_b = if ib + 1 < counts[b] {
                Some(flat + stride(b))
            } else if wrapable(b) && counts[b] > 2 {
                Some(flat - ib * stride(b))
            } else {
                None
            };
            if let (Some(na), Some(nb)) = (next_a, next_b) {
                let nab = na + nb - flat;
                triangles.push([flat, na, nab]);
                triangles.push([flat, nab, nb]);
            }
        }
    }

    Ok(FrontMesh {
        sheet: spec.name().to_string(),
        ambient_dim: spec.ambient_dim(),
        space_dims: s,
        normal_rank: k,
        axes: FrontAxes {
            u: u_axes,
            branch,
            angles: angle_axes,
            t: t_axis,
            periodic,
        },
        counts,
        samples,
        segments,
        triangles,
        seam_flip,
        scanned: false,
    })
}

/// Classifies every sample by grid-difference Jacobian ranks; see the
/// module docs for the flag semantics. Differentiable axes are the `u`
/// and angle axes (the branch axis is discrete) plus `t` for the space
/// Jacobian.
pub fn singular_scan(mesh: &mut FrontMesh, fd_rank_sigma: f64) {
    let n = mesh.ambient_dim - 1;
    let s = mesh.space_dims;
    let k = mesh.normal_rank;
    let counts = mesh.counts.clone();
    let naxes = counts.len();
    let t_ax = naxes - 1;
    // differentiable parameter axes: u axes and angle axes
    let mut param_axes: Vec<usize> = (0..s).collect();
    if k >= 3 {
        param_axes.extend(s..s + (k - 2));
    }
    let axis_step = |ax: usize| -> f64 {
        if ax < s {
            mesh.axes.u[ax][1] - mesh.axes.u[ax][0]
        } else if ax < t_ax {
            mesh.axes.angles[ax - s][1] - mesh.axes.angles[ax - s][0]
        } else {
            mesh.axes.t[1] - mesh.axes.t[0]
        }
    };
    let stride = |ax: usize| -> usize { counts[ax + 1..].iter().product() };

    // derivative of the pedal along one axis at one sample, by central
    // differences (periodic wrap where the axis allows, one-sided at
    // open boundaries)
    let diff = |samples: &[FrontSample], flat: usize, ax: usize| -> Vec<f64> {
        let idx = &samples[flat].index;
        let i = idx[ax];
        let c = counts[ax];
        let h = axis_step(ax);
        let per = mesh.axes.periodic[ax];
        let (lo, hi, denom) = if per && c > 2 {
            let up = if i + 1 < c { flat + stride(ax) } else { flat - i * stride(ax) };
            let dn = if i > 0 { flat - stride(ax) } else { flat + (c - 1) * stride(ax) };
            (dn, up, 2.0 * h)
        } else if i == 0 {
            (flat, flat + stride(ax), h)
        } else if i + 1 == c {
            (flat - stride(ax), flat, h)
        } else {
            (flat - stride(ax), flat + stride(ax), 2.0 * h)
        };
        samples[hi]
            .pedal
            .iter()
            .zip(&samples[lo].pedal)
            .map(|(a, b)| (a - b) / denom)
            .collect()
    };

    let flags: Vec<(usize, usize, bool, bool)> = (0..mesh.samples.len())
        .into_par_iter()
        .map(|flat| {
            if mesh.samples[flat].degenerate_zero {
                return (0, 0, false, false);
            }
            let ncols = param_axes.len();
            let mut a = DMatrix::zeros(n + 1, ncols + 1);
            for (c, &ax) in param_axes.iter().enumerate() {
                let d = diff(&mesh.samples, flat, ax);
                for r in 0..n + 1 {
                    a[(r, c)] = d[r];
                }
            }
            let dt = diff(&mesh.samples, flat, t_ax);
            for r in 0..n + 1 {
                a[(r, ncols)] = dt[r];
            }
            let param_block = a.columns(0, ncols).into_owned();
            let rank_param = matrix_rank(&param_block, fd_rank_sigma);
            let rank_space = matrix_rank(&a, fd_rank_sigma);
            (
                rank_param,
                rank_space,
                rank_param < n - 1,
                rank_space < n,
            )
        })
        .collect();
    for (sample, (rp, rs, leg, sp)) in mesh.samples.iter_mut().zip(flags) {
        sample.jac_rank_param = rp;
        sample.jac_rank_space = rs;
        sample.legendrian_singular = leg;
        sample.space_singular = sp;
    }
    mesh.scanned = true;
}

/// A close pair of samples mapping to (numerically) the same unfolded
/// front point from well-separated parameters.
#[derive(Clone, Debug, Serialize)]
pub struct MaxwellPair {
    pub a: usize,
    pub b: usize,
    /// Euclidean distance of the unfolded images.
    pub distance: f64,
    /// Parameter separation in grid cells (infinite across branches).
    pub separation: f64,
}

/// Discriminant sets of a scanned front mesh.
#[derive(Clone, Debug, Serialize)]
pub struct DiscriminantReport {
    pub sheet: String,
    pub samples: usize,
    pub degenerate_count: usize,
    pub legendrian_count: usize,
    pub space_singular_count: usize,
    /// `(pedal, t)` images of Legendrian-singular samples: the caustic.
    pub caustic_points: Vec<Vec<f64>>,
    /// Self-intersection witnesses of the front (capped; see
    /// `maxwell_total`).
    pub maxwell_pairs: Vec<MaxwellPair>,
    pub maxwell_total: usize,
    /// Images of samples that are smooth on the front but critical for
    /// the space projection.
    pub delta_points: Vec<Vec<f64>>,
    /// The matching distance actually used.
    pub match_delta: f64,
}

/// Extracts caustic / Maxwell / space-critical data from a scanned mesh.
///
/// `match_delta` defaults to `1e-6` times the bounding-box diagonal of
/// the unfolded samples; `sep_cells` is the minimum parameter separation
/// (grid cells, wrap-aware) for a Maxwell pair, so grid neighbors don't
/// count as self-intersections. Degenerate samples never participate.
pub fn discriminant_extract(
    mesh: &FrontMesh,
    match_delta: Option<f64>,
    sep_cells: f64,
    max_pairs: usize,
) -> Result<DiscriminantReport> {
    if !mesh.scanned {
        return Err(Error::Precondition(
            "discriminant extraction needs a scanned mesh".into(),
        ));
    }
    let unfolded: Vec<Vec<f64>> = mesh
        .samples
        .iter()
        .map(|s| {
            let mut p = s.pedal.clone();
            p.push(s.t);
            p
        })
        .collect();

    // bounding box over non-degenerate samples
    let dim = mesh.ambient_dim + 1;
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for (s, p) in mesh.samples.iter().zip(&unfolded) {
        if s.degenerate_zero {
            continue;
        }
        for d in 0..dim {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let diag: f64 = (0..dim)
        .map(|d| {
            let w = hi[d] - lo[d];
            if w.is_finite() {
                w * w
            } else {
                0.0
            }
        })
        .sum::<f64>()
        .sqrt();
    let delta = match_delta.unwrap_or_else(|| (1e-6 * diag).max(1e-12));

    let mut caustic_points = Vec::new();
    let mut delta_points = Vec::new();
    let mut degenerate_count = 0;
    let mut legendrian_count = 0;
    let mut space_singular_count = 0;
    for (s, p) in mesh.samples.iter().zip(&unfolded) {
        if s.degenerate_zero {
            degenerate_count += 1;
            continue;
        }
        if s.legendrian_singular {
            legendrian_count += 1;
            caustic_points.push(p.clone());
        }
        if s.space_singular {
            space_singular_count += 1;
            if !s.legendrian_singular {
                delta_points.push(p.clone());
            }
        }
    }

    // spatial hash on cells of side 2*delta; only neighbor cells can hold
    // partners within delta
    let cell = 2.0 * delta;
    let key_of = |p: &[f64]| -> Vec<i64> {
        p.iter().map(|x| (x / cell).floor() as i64).collect()
    };
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, s) in mesh.samples.iter().enumerate() {
        if s.degenerate_zero {
            continue;
        }
        buckets.entry(key_of(&unfolded[i])).or_default().push(i);
    }
    let branch_axis = if mesh.normal_rank == 2 { Some(mesh.space_dims) } else { None };
    let separation = |a: &FrontSample, b: &FrontSample| -> f64 {
        if let Some(ax) = branch_axis {
            if a.index[ax] != b.index[ax] {
                return f64::INFINITY;
            }
        }
        let mut acc = 0.0f64;
        for ax in 0..mesh.counts.len() {
            if Some(ax) == branch_axis {
                continue;
            }
            let c = mesh.counts[ax];
            let mut d = a.index[ax].abs_diff(b.index[ax]);
            if mesh.axes.periodic[ax] {
                d = d.min(c - d);
            }
            acc += (d * d) as f64;
        }
        acc.sqrt()
    };

    let mut maxwell_pairs: Vec<MaxwellPair> = Vec::new();
    let mut maxwell_total = 0usize;
    let mut neighbor = vec![0i64; dim];
    for (key, members) in buckets.iter() {
        // enumerate this cell and all "greater" neighbor cells to visit
        // each unordered cell pair once
        let mut offsets = vec![vec![]];
        for _ in 0..dim {
            let mut next = Vec::new();
            for o in &offsets {
                for d in [-1i64, 0, 1] {
                    let mut v: Vec<i64> = o.clone();
                    v.push(d);
                    next.push(v);
                }
            }
            offsets = next;
        }
        for off in &offsets {
            if off.iter().rev().find(|&&d| d != 0).map(|&d| d < 0).unwrap_or(false) {
                continue; // visit each neighbor pair once
            }
            for (v, (k, o)) in neighbor.iter_mut().zip(key.iter().zip(off)) {
                *v = k + o;
            }
            let same_cell = off.iter().all(|&d| d == 0);
            let others = if same_cell {
                members
            } else {
                match buckets.get(&neighbor) {
                    Some(m) => m,
                    None => continue,
                }
            };
            for (ai, &ia) in members.iter().enumerate() {
                let start = if same_cell { ai + 1 } else { 0 };
                for &ib in &others[start..] {
                    let d2: f64 = unfolded[ia]
                        .iter()
                        .zip(&unfolded[ib])
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum();
                    if d2 > delta * delta {
                        continue;
                    }
                    let sep = separation(&mesh.samples[ia], &mesh.samples[ib]);
                    if sep < sep_cells {
                        continue;
                    }
                    maxwell_total += 1;
                    if maxwell_pairs.len() < max_pairs {
                        let (a, b) = if ia < ib { (ia, ib) } else { (ib, ia) };
                        maxwell_pairs.push(MaxwellPair {
                            a,
                            b,
                            distance: d2.sqrt(),
                            separation: sep,
                        });
                    }
                }
            }
        }
    }
    maxwell_pairs.sort_by_key(|p| (p.a, p.b));

    Ok(DiscriminantReport {
        sheet: mesh.sheet.clone(),
        samples: mesh.samples.len(),
        degenerate_count,
        legendrian_count,
        space_singular_count,
        caustic_points,
        maxwell_pairs,
        maxwell_total,
        delta_points,
        match_delta: delta,
    })
}

/// Writes the sample table as CSV. Floats are printed with 17 significant
/// digits so the text round-trips to the exact binary values; booleans
/// are 0/1. Columns: the `u` coordinates, the chart (one `branch` column
/// or the angle columns), `t`, the pedal coordinates, the pedal scalar,
/// both Jacobian ranks, and the three flags.
pub fn write_front_csv<W: Write>(mesh: &FrontMesh, out: &mut W) -> Result<()> {
    let s = mesh.space_dims;
    let mut header: Vec<String> = (1..=s).map(|i| format!("u{i}")).collect();
    if mesh.normal_rank == 2 {
        header.push("branch".into());
    } else {
        header.extend((1..mesh.normal_rank - 1).map(|i| format!("xi{i}")));
    }
    header.push("t".into());
    header.extend((0..mesh.ambient_dim).map(|i| format!("pedal_{i}")));
    header.push("pedal_scalar".into());
    header.push("jac_rank_param".into());
    header.push("jac_rank_space".into());
    header.push("legendrian_singular".into());
    header.push("space_singular".into());
    header.push("degenerate_zero".into());
    writeln!(out, "{}", header.join(","))?;
    for sample in &mesh.samples {
        let mut row: Vec<String> = sample.u.iter().map(|v| format!("{v:.16e}")).collect();
        match &sample.chart {
            SphereAngles::Sign(b) => row.push(format!("{b}")),
            SphereAngles::Angles(a) => {
                row.extend(a.iter().map(|v| format!("{v:.16e}")))
            }
        }
        row.push(format!("{:.16e}", sample.t));
        row.extend(sample.pedal.iter().map(|v| format!("{v:.16e}")));
        row.push(format!("{:.16e}", sample.pedal_scalar));
        row.push(sample.jac_rank_param.to_string());
        row.push(sample.jac_rank_space.to_string());
        row.push((sample.legendrian_singular as u8).to_string());
        row.push((sample.space_singular as u8).to_string());
        row.push((sample.degenerate_zero as u8).to_string());
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Writes mesh geometry as Wavefront OBJ.
///
/// For ambient dimension 3 the vertices are `(pedal_1, pedal_2, t)` and
/// the per-`t` slice curves become polylines. For ambient dimension 4 the
/// vertices are the spatial pedal coordinates and slices become triangle
/// groups (`g` per `t` index and branch). Higher dimensions are not
/// representable in OBJ; callers should stick to CSV there.
pub fn write_front_obj<W: Write>(mesh: &FrontMesh, out: &mut W) -> Result<()> {
    if mesh.ambient_dim > 4 {
        return Err(Error::Precondition(format!(
            "OBJ export supports ambient dimension 3 or 4, got {}",
            mesh.ambient_dim
        )));
    }
    writeln!(out, "# big wave front of sheet `{}`", mesh.sheet)?;
    writeln!(out, "# samples: {}", mesh.samples.len())?;
    for s in &mesh.samples {
        if mesh.ambient_dim == 3 {
            writeln!(out, "v {:.16e} {:.16e} {:.16e}", s.pedal[1], s.pedal[2], s.t)?;
        } else {
            writeln!(
                out,
                "v {:.16e} {:.16e} {:.16e}",
                s.pedal[1], s.pedal[2], s.pedal[3]
            )?;
        }
    }
    let t_ax = mesh.counts.len() - 1;
    if !mesh.segments.is_empty() {
        let mut last_group = usize::MAX;
        for seg in &mesh.segments {
            let g = mesh.samples[seg[0]].index[t_ax];
            if g != last_group {
                writeln!(out, "g t{g}")?;
                writeln!(out, "# t = {:.16e}", mesh.samples[seg[0]].t)?;
                last_group = g;
            }
            writeln!(out, "l {} {}", seg[0] + 1, seg[1] + 1)?;
        }
    }
    if !mesh.triangles.is_empty() {
        let mut last_group = usize::MAX;
        for tri in &mesh.triangles {
            let g = mesh.samples[tri[0]].index[t_ax];
            if g != last_group {
                writeln!(out, "g t{g}")?;
                writeln!(out, "# t = {:.16e}", mesh.samples[tri[0]].t)?;
                last_group = g;
            }
            writeln!(out, "f {} {} {}", tri[0] + 1, tri[1] + 1, tri[2] + 1)?;
        }
    }
    Ok(())
}
