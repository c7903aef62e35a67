//! Vectors and the pseudo-scalar product of Lorentz-Minkowski space.
//!
//! `R^{n+1}_1` is `R^{n+1}` equipped with the pairing
//!
//! ```text
//! <x, y> = -x_0 y_0 + x_1 y_1 + ... + x_n y_n
//! ```
//!
//! Index 0 is the timelike coordinate throughout the crate. This module
//! keeps to plain `f64` arithmetic; linear-algebra factorizations live in
//! the modules that need them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when a vector must be *exactly* lightlike up to
/// rounding: `x` counts as lightlike when `|<x,x>| <= eps * |x|_E^2` with
/// `|.|_E` the Euclidean norm.
pub const LIGHTLIKE_EPS: f64 = 1e-9;

/// Causal character of a vector with respect to the pseudo-scalar product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CausalClass {
    /// `<x,x> > 0`
    Spacelike,
    /// `<x,x> = 0`, `x != 0`
    Lightlike,
    /// `<x,x> < 0`
    Timelike,
    /// the zero vector
    Zero,
}

/// Dense vector in `R^{n+1}_1`. The ambient dimension is carried by the
/// length of `coords`; component 0 is the timelike coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinkVector {
    coords: Vec<f64>,
}

impl MinkVector {
    /// Wraps raw coordinates. At least two components are required (one
    /// timelike plus one spacelike).
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: coords.len(),
            });
        }
        Ok(MinkVector { coords })
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(coords.to_vec())
    }

    pub fn zero(dim: usize) -> Self {
        MinkVector {
            coords: vec![0.0; dim],
        }
    }

    /// Standard basis vector `e_m` in ambient dimension `dim`.
    pub fn basis(dim: usize, m: usize) -> Self {
        let mut coords = vec![0.0; dim];
        coords[m] = 1.0;
        MinkVector { coords }
    }

    /// Ambient dimension `n + 1`.
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Timelike component `x_0`.
    pub fn time(&self) -> f64 {
        self.coords[0]
    }

    /// Spacelike components `(x_1, ..., x_n)`.
    pub fn space(&self) -> &[f64] {
        &self.coords[1..]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn get(&self, i: usize) -> f64 {
        self.coords[i]
    }

    pub fn set(&mut self, i: usize, v: f64) {
        self.coords[i] = v;
    }

    pub fn scale(&self, s: f64) -> MinkVector {
        MinkVector {
            coords: self.coords.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &MinkVector) -> Result<MinkVector> {
        check_same_dim(self, other)?;
        Ok(MinkVector {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &MinkVector) -> Result<MinkVector> {
        check_same_dim(self, other)?;
        Ok(MinkVector {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Euclidean norm of the coordinate vector; used for relative
    /// tolerances, not for geometry.
    pub fn euclid_norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0.0)
    }

    /// `|<x,x>| <= eps * |x|_E^2`, and `x != 0`.
    pub fn is_lightlike_within(&self, eps: f64) -> bool {
        if self.is_zero() {
            return false;
        }
        let q = pseudo_product(self, self).expect("same vector");
        let scale = self.coords.iter().map(|c| c * c).sum::<f64>();
        q.abs() <= eps * scale
    }
}

fn check_same_dim(x: &MinkVector, y: &MinkVector) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: y.dim(),
        });
    }
    Ok(())
}

/// The pseudo-scalar product `<x, y> = -x_0 y_0 + sum_{i>=1} x_i y_i`.
pub fn pseudo_product(x: &MinkVector, y: &MinkVector) -> Result<f64> {
    check_same_dim(x, y)?;
    let mut acc = -x.coords[0] * y.coords[0];
    for i in 1..x.dim() {
        acc += x.coords[i] * y.coords[i];
    }
    Ok(acc)
}

/// Causal character of `x`, by the exact sign of `<x,x>`.
pub fn causal_class(x: &MinkVector) -> CausalClass {
    if x.is_zero() {
        return CausalClass::Zero;
    }
    let q = pseudo_product(x, x).expect("same vector");
    if q > 0.0 {
        CausalClass::Spacelike
    } else if q < 0.0 {
        CausalClass::Timelike
    } else {
        CausalClass::Lightlike
    }
}

/// Tolerance-aware variant of [`causal_class`]: `|<x,x>|` below
/// `eps * |x|_E^2` counts as lightlike.
pub fn causal_class_within(x: &MinkVector, eps: f64) -> CausalClass {
    if x.is_zero() {
        return CausalClass::Zero;
    }
    let q = pseudo_product(x, x).expect("same vector");
    let scale = x.coords.iter().map(|c| c * c).sum::<f64>();
    if q.abs() <= eps * scale {
        CausalClass::Lightlike
    } else if q > 0.0 {
        CausalClass::Spacelike
    } else {
        CausalClass::Timelike
    }
}

/// `sqrt(|<x,x>|)`.
pub fn lorentz_norm(x: &MinkVector) -> f64 {
    pseudo_product(x, x).expect("same vector").abs().sqrt()
}

/// Pseudo-orthogonal wedge of `n` vectors in `R^{n+1}_1`.
///
/// `wedge(x_1, ..., x_n)` is the unique vector `w` with
/// `<x, w> = det(x, x_1, ..., x_n)` for every `x`, where the determinant
/// stacks its arguments as rows in the given order. Expanding the formal
/// determinant with first row `(-e_0, e_1, ..., e_n)` gives the
/// components: `w_0 = -M_0` and `w_m = (-1)^m M_m` for `m >= 1`, where
/// `M_m` is the minor of the `n x (n+1)` coefficient matrix obtained by
/// deleting column `m`.
pub fn wedge(vectors: &[MinkVector]) -> Result<MinkVector> {
    if vectors.is_empty() {
        return Err(Error::Precondition(
            "wedge needs at least one vector".into(),
        ));
    }
    let dim = vectors[0].dim();
    if vectors.len() != dim - 1 {
        return Err(Error::DimensionMismatch {
            expected: dim - 1,
            got: vectors.len(),
        });
    }
    for v in vectors {
        if v.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.dim(),
            });
        }
    }
    let n = dim - 1;
    let mut out = vec![0.0; dim];
    for m in 0..dim {
        // minor: delete column m
        let mut minor = vec![vec![0.0; n]; n];
        for (r, v) in vectors.iter().enumerate() {
            let mut c = 0;
            for col in 0..dim {
                if col == m {
                    continue;
                }
                minor[r][c] = v.coords[col];
                c += 1;
            }
        }
        let det_m = det_bareiss(minor);
        out[m] = if m == 0 {
            -det_m
        } else if m % 2 == 0 {
            det_m
        } else {
            -det_m
        };
    }
    Ok(MinkVector { coords: out })
}

/// Determinant of a square matrix (rows) by fraction-free Gaussian
/// elimination with partial pivoting.
///
/// The Bareiss recurrence `a_ij <- (a_kk a_ij - a_ik a_kj) / p` keeps
/// intermediate growth polynomial; with row pivoting it is a stable way to
/// get plain `f64` determinants without pulling a factorization crate into
/// this module.
pub fn det_bareiss(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    if n == 0 {
        return 1.0;
    }
    for row in &a {
        assert_eq!(row.len(), n, "det of a non-square matrix");
    }
    let mut sign = 1.0;
    let mut prev = 1.0;
    for k in 0..n - 1 {
        // partial pivot on column k
        let mut piv = k;
        let mut best = a[k][k].abs();
        for r in (k + 1)..n {
            if a[r][k].abs() > best {
                best = a[r][k].abs();
                piv = r;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if piv != k {
            a.swap(piv, k);
            sign = -sign;
        }
        for i in (k + 1)..n {
            for j in (k + 1)..n {
                a[i][j] = (a[k][k] * a[i][j] - a[i][k] * a[k][j]) / prev;
            }
            a[i][k] = 0.0;
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

/// Determinant of the square matrix whose rows are the given vectors.
pub fn det_rows(rows: &[MinkVector]) -> Result<f64> {
    let n = rows.len();
    for v in rows {
        if v.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.dim(),
            });
        }
    }
    Ok(det_bareiss(
        rows.iter().map(|v| v.coords.clone()).collect(),
    ))
}

/// Projection `x -> (1, x_1/x_0, ..., x_n/x_0)` from the open lightcone
/// onto its unit-sphere slice `{x_0 = 1}`.
///
/// Errors unless `x` is lightlike (within [`LIGHTLIKE_EPS`] relative) with
/// `x_0 != 0`.
pub fn project_to_lightcone_sphere(x: &MinkVector) -> Result<MinkVector> {
    if !x.is_lightlike_within(LIGHTLIKE_EPS) {
        return Err(Error::Domain {
            expr: format!("{:?}", x.coords),
            message: "not a lightlike vector".into(),
        });
    }
    if x.time() == 0.0 {
        return Err(Error::Domain {
            expr: format!("{:?}", x.coords),
            message: "lightcone projection needs x_0 != 0".into(),
        });
    }
    let t = x.time();
    let mut coords = vec![1.0];
    coords.extend(x.space().iter().map(|c| c / t));
    Ok(MinkVector { coords })
}

/// A lightlike hyperplane `HP(v, c) = { x : <x, v> = c }` with lightlike
/// pseudo-normal `v`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LightlikeHyperplane {
    pseudo_normal: MinkVector,
    offset: f64,
}

impl LightlikeHyperplane {
    /// Errors unless `v` is nonzero and lightlike within [`LIGHTLIKE_EPS`].
    pub fn new(pseudo_normal: MinkVector, offset: f64) -> Result<Self> {
        if !pseudo_normal.is_lightlike_within(LIGHTLIKE_EPS) {
            return Err(Error::Degenerate(
                "hyperplane pseudo-normal must be lightlike and nonzero".into(),
            ));
        }
        Ok(LightlikeHyperplane {
            pseudo_normal,
            offset,
        })
    }

    pub fn pseudo_normal(&self) -> &MinkVector {
        &self.pseudo_normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }
}

/// Signed residual `<x, v> - c` of `x` against the hyperplane `HP(v, c)`;
/// zero iff `x` lies on the hyperplane.
pub fn hyperplane_residual(hp: &LightlikeHyperplane, x: &MinkVector) -> Result<f64> {
    Ok(pseudo_product(x, &hp.pseudo_normal)? - hp.offset)
}
