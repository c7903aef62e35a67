//! World-sheet model: symbolic definition, pointwise evaluation, and
//! admissibility checks.
//!
//! A world sheet is a map `X : U x I -> R^{n+1}_1`, `U` open in `R^s`,
//! given per ambient coordinate as an expression in `u1..us` and `t`. For
//! the geometry downstream to make sense the sheet must be *admissible*:
//!
//! * the momentary metric `g_ij = <X_ui, X_uj>` is positive definite
//!   (momentary spaces are spacelike),
//! * the Gram matrix of `(X_t, X_u1, ..., X_us)` has exactly one negative
//!   and `s` positive eigenvalues (the swept manifold is timelike and the
//!   tangent map has full rank).
//!
//! [`validate`] checks both on a sample grid and reports every offending
//! point (capped), rather than stopping at the first.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse_expr, ExprNode};
use crate::jet::eval_jet2;
use crate::minkowski::{pseudo_product, MinkVector};

/// Closed parameter interval, optionally periodic (period `max - min`).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    #[serde(default)]
    pub periodic: bool,
}

impl AxisRange {
    pub fn new(min: f64, max: f64, periodic: bool) -> AxisRange {
        AxisRange { min, max, periodic }
    }

    pub fn span(&self) -> f64 {
        self.max - self.min
    }

    /// `count` samples: endpoints included when the axis is not periodic,
    /// the right endpoint dropped when it is (it aliases the left one).
    /// The fractions `i/n` keep the included endpoints exact: boundary
    /// samples land on `min` and `max` bit for bit.
    pub fn samples(&self, count: usize) -> Vec<f64> {
        assert!(count >= 2, "axis needs at least 2 samples");
        let n = if self.periodic { count } else { count - 1 } as f64;
        (0..count)
            .map(|i| self.min + self.span() * (i as f64 / n))
            .collect()
    }
}

/// Parameter box of a world sheet: one range per `u` axis plus the `t`
/// interval.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub u: Vec<AxisRange>,
    pub t: AxisRange,
}

/// Plain-text form of a world sheet, as it appears in config files.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SheetDescription {
    pub name: String,
    /// One expression per ambient coordinate; index 0 is the timelike one.
    pub coords: Vec<String>,
    /// Number of `u` parameters (`s`).
    pub space_dims: usize,
    pub domain: Domain,
}

/// A parsed world sheet ready for evaluation.
#[derive(Clone, Debug)]
pub struct WorldSheetSpec {
    description: SheetDescription,
    coords: Vec<ExprNode>,
    var_names: Vec<String>,
}

impl WorldSheetSpec {
    pub fn new(description: SheetDescription) -> Result<Self> {
        let s = description.space_dims;
        let ambient = description.coords.len();
        if s < 1 {
            return Err(Error::Precondition(
                "a world sheet needs at least one u parameter".into(),
            ));
        }
        if ambient < s + 2 {
            return Err(Error::Precondition(format!(
                "ambient dimension {ambient} too small for {s} space parameter(s); \
                 need at least {}",
                s + 2
            )));
        }
        if description.domain.u.len() != s {
            return Err(Error::Precondition(format!(
                "domain has {} u ranges, expected {s}",
                description.domain.u.len()
            )));
        }
        for r in description.domain.u.iter().chain([&description.domain.t]) {
            if !r.min.is_finite() || !r.max.is_finite() || r.min >= r.max {
                return Err(Error::Precondition(format!(
                    "invalid axis range [{}, {}]",
                    r.min, r.max
                )));
            }
        }
        let mut var_names: Vec<String> = (1..=s).map(|i| format!("u{i}")).collect();
        var_names.push("t".to_string());
        let coords = description
            .coords
            .iter()
            .map(|text| parse_expr(text, &var_names))
            .collect::<Result<Vec<_>>>()?;
        Ok(WorldSheetSpec {
            description,
            coords,
            var_names,
        })
    }

    pub fn description(&self) -> &SheetDescription {
        &self.description
    }

    pub fn name(&self) -> &str {
        &self.description.name
    }

    /// Ambient dimension `n + 1`.
    pub fn ambient_dim(&self) -> usize {
        self.description.coords.len()
    }

    /// Number of `u` parameters (`s`).
    pub fn space_dims(&self) -> usize {
        self.description.space_dims
    }

    /// Dimension `k = n + 1 - s` of the momentary normal spaces. The
    /// lightcone constructions need `k >= 2`: one timelike normal plus at
    /// least one spacelike one.
    pub fn normal_rank(&self) -> usize {
        self.ambient_dim() - self.space_dims()
    }

    pub fn domain(&self) -> &Domain {
        &self.description.domain
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn coord_exprs(&self) -> &[ExprNode] {
        &self.coords
    }
}

/// `X` and its derivatives through second order at one `(u, t)`, plus the
/// momentary metric.
#[derive(Clone, Debug)]
pub struct PointEval {
    pub u: Vec<f64>,
    pub t: f64,
    /// `X(u, t)`
    pub position: MinkVector,
    /// `X_{u_i}`
    pub du: Vec<MinkVector>,
    /// `X_t`
    pub dt: MinkVector,
    /// `X_{u_i u_j}`, symmetric in `(i, j)`
    pub duu: Vec<Vec<MinkVector>>,
    /// `X_{u_i t}`
    pub dut: Vec<MinkVector>,
    /// `X_{tt}`
    pub dtt: MinkVector,
    /// `g_ij = <X_{u_i}, X_{u_j}>`
    pub metric: Vec<Vec<f64>>,
}

impl PointEval {
    /// Solves `g c = b` for the momentary metric `g`. Errors when `g` is
    /// not positive definite.
    pub fn metric_solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let s = self.du.len();
        let g = DMatrix::from_fn(s, s, |i, j| self.metric[i][j]);
        let chol = nalgebra::Cholesky::new(g).ok_or_else(|| {
            Error::Degenerate("momentary metric is not positive definite".into())
        })?;
        let rhs = nalgebra::DVector::from_column_slice(b);
        Ok(chol.solve(&rhs).iter().copied().collect())
    }

    /// Tangential part (along the momentary space) of an ambient vector:
    /// `sum_ij g^{ij} <w, X_ui> X_uj`.
    pub fn tangential_projection(&self, w: &MinkVector) -> Result<MinkVector> {
        let s = self.du.len();
        let mut b = vec![0.0; s];
        for i in 0..s {
            b[i] = pseudo_product(w, &self.du[i])?;
        }
        let c = self.metric_solve(&b)?;
        let mut out = MinkVector::zero(self.position.dim());
        for j in 0..s {
            out = out.add(&self.du[j].scale(c[j]))?;
        }
        Ok(out)
    }
}

/// Evaluates the sheet at `(u, t)`.
pub fn evaluate(spec: &WorldSheetSpec, u: &[f64], t: f64) -> Result<PointEval> {
    let s = spec.space_dims();
    if u.len() != s {
        return Err(Error::DimensionMismatch {
            expected: s,
            got: u.len(),
        });
    }
    let mut point = u.to_vec();
    point.push(t);
    let dim = spec.ambient_dim();
    let mut position = vec![0.0; dim];
    let mut du = vec![vec![0.0; dim]; s];
    let mut dt = vec![0.0; dim];
    let mut duu = vec![vec![vec![0.0; dim]; s]; s];
    let mut dut = vec![vec![0.0; dim]; s];
    let mut dtt = vec![0.0; dim];
    for (m, expr) in spec.coord_exprs().iter().enumerate() {
        let jet = eval_jet2(expr, spec.var_names(), &point)?;
        position[m] = jet.value;
        for i in 0..s {
            du[i][m] = jet.grad[i];
            dut[i][m] = jet.hess[i][s];
            for j in 0..s {
                duu[i][j][m] = jet.hess[i][j];
            }
        }
        dt[m] = jet.grad[s];
        dtt[m] = jet.hess[s][s];
    }
    let position = MinkVector::new(position)?;
    let du: Vec<MinkVector> = du
        .into_iter()
        .map(MinkVector::new)
        .collect::<Result<_>>()?;
    let dt = MinkVector::new(dt)?;
    let duu: Vec<Vec<MinkVector>> = duu
        .into_iter()
        .map(|row| row.into_iter().map(MinkVector::new).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let dut: Vec<MinkVector> = dut
        .into_iter()
        .map(MinkVector::new)
        .collect::<Result<_>>()?;
    let dtt = MinkVector::new(dtt)?;
    let mut metric = vec![vec![0.0; s]; s];
    for i in 0..s {
        for j in 0..s {
            metric[i][j] = pseudo_product(&du[i], &du[j])?;
        }
    }
    Ok(PointEval {
        u: u.to_vec(),
        t,
        position,
        du,
        dt,
        duu,
        dut,
        dtt,
        metric,
    })
}

/// Sample counts per axis for grid sweeps: one entry per `u` axis, then
/// the `t` axis.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridSpec {
    pub u_counts: Vec<usize>,
    pub t_count: usize,
}

impl GridSpec {
    pub fn uniform(s: usize, count: usize) -> GridSpec {
        GridSpec {
            u_counts: vec![count; s],
            t_count: count,
        }
    }
}

/// Iterates multi-indices over `counts` in row-major order (last index
/// fastest).
pub fn multi_indices(counts: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = counts.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; counts.len()];
    for _ in 0..total {
        out.push(idx.clone());
        for ax in (0..counts.len()).rev() {
            idx[ax] += 1;
            if idx[ax] < counts[ax] {
                break;
            }
            idx[ax] = 0;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    EvaluationError,
    MetricNotPositiveDefinite,
    TangentRankDeficient,
    NotTimelike,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub kind: IssueKind,
    pub u: Vec<f64>,
    pub t: f64,
    pub detail: String,
}

/// Outcome of [`validate`]: per-point issues (capped at
/// [`MAX_REPORTED_ISSUES`]) plus grid-wide extrema.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidationReport {
    pub sheet: String,
    pub passed: bool,
    pub points_checked: usize,
    pub issue_count: usize,
    pub issues: Vec<ValidationIssue>,
    pub issues_truncated: bool,
    /// Smallest momentary-metric eigenvalue seen anywhere on the grid.
    pub min_metric_eigenvalue: f64,
    /// Largest `|lambda_0| / max|lambda|` over grid points, where
    /// `lambda_0` is the Gram eigenvalue closest to zero; small values
    /// mean the tangent map is near rank-deficient.
    pub worst_gram_conditioning: f64,
}

pub const MAX_REPORTED_ISSUES: usize = 100;

/// Relative threshold below which a Gram eigenvalue counts as zero.
pub const SIGNATURE_EPS: f64 = 1e-9;

/// Checks admissibility on a sample grid.
pub fn validate(spec: &WorldSheetSpec, grid: &GridSpec) -> ValidationReport {
    let s = spec.space_dims();
    assert_eq!(grid.u_counts.len(), s, "grid does not match sheet");
    let u_axes: Vec<Vec<f64>> = spec
        .domain()
        .u
        .iter()
        .zip(&grid.u_counts)
        .map(|(r, &c)| r.samples(c))
        .collect();
    let t_axis = spec.domain().t.samples(grid.t_count);
    let mut counts: Vec<usize> = grid.u_counts.clone();
    counts.push(grid.t_count);

    let mut issues = Vec::new();
    let mut issue_count = 0usize;
    let mut min_metric_eig = f64::INFINITY;
    let mut worst_cond = f64::INFINITY;
    let mut points = 0usize;

    let push = |issues: &mut Vec<ValidationIssue>,
                    issue_count: &mut usize,
                    issue: ValidationIssue| {
        *issue_count += 1;
        if issues.len() < MAX_REPORTED_ISSUES {
            issues.push(issue);
        }
    };

    for idx in multi_indices(&counts) {
        let u: Vec<f64> = (0..s).map(|i| u_axes[i][idx[i]]).collect();
        let t = t_axis[idx[s]];
        points += 1;
        let pe = match evaluate(spec, &u, t) {
            Ok(pe) => pe,
            Err(e) => {
                push(
                    &mut issues,
                    &mut issue_count,
                    ValidationIssue {
                        kind: IssueKind::EvaluationError,
                        u,
                        t,
                        detail: e.to_string(),
                    },
                );
                continue;
            }
        };

        // momentary metric must be positive definite
        let g = DMatrix::from_fn(s, s, |i, j| pe.metric[i][j]);
        let eig = g.symmetric_eigenvalues();
        let gmin = eig.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        min_metric_eig = min_metric_eig.min(gmin);
        if gmin <= 0.0 {
            push(
                &mut issues,
                &mut issue_count,
                ValidationIssue {
                    kind: IssueKind::MetricNotPositiveDefinite,
                    u: u.clone(),
                    t,
                    detail: format!("smallest metric eigenvalue {gmin:e}"),
                },
            );
        }

        // Gram of (X_t, X_u1..X_us): one negative, s positive eigenvalues
        let mut tangent = vec![pe.dt.clone()];
        tangent.extend(pe.du.iter().cloned());
        let gram = DMatrix::from_fn(s + 1, s + 1, |i, j| {
            pseudo_product(&tangent[i], &tangent[j]).expect("same dim")
        });
        let geig = gram.symmetric_eigenvalues();
        let scale = geig.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let tol = SIGNATURE_EPS * scale.max(f64::MIN_POSITIVE);
        let mut neg = 0;
        let mut pos = 0;
        let mut zero = 0;
        let mut closest = f64::INFINITY;
        for &l in geig.iter() {
            closest = closest.min(l.abs());
            if l.abs() <= tol {
                zero += 1;
            } else if l < 0.0 {
                neg += 1;
            } else {
                pos += 1;
            }
        }
        if scale > 0.0 {
            worst_cond = worst_cond.min(closest / scale);
        }
        if zero > 0 {
            push(
                &mut issues,
                &mut issue_count,
                ValidationIssue {
                    kind: IssueKind::TangentRankDeficient,
                    u: u.clone(),
                    t,
                    detail: format!(
                        "tangent Gram signature (+{pos}, -{neg}, 0:{zero})"
                    ),
                },
            );
        } else if neg != 1 {
            push(
                &mut issues,
                &mut issue_count,
                ValidationIssue {
                    kind: IssueKind::NotTimelike,
                    u: u.clone(),
                    t,
                    detail: format!(
                        "tangent Gram signature (+{pos}, -{neg}, 0:{zero}), \
                         expected exactly one negative direction"
                    ),
                },
            );
        }
    }

    ValidationReport {
        sheet: spec.name().to_string(),
        passed: issue_count == 0,
        points_checked: points,
        issue_count,
        issues_truncated: issue_count > MAX_REPORTED_ISSUES,
        issues,
        min_metric_eigenvalue: min_metric_eig,
        worst_gram_conditioning: worst_cond,
    }
}
