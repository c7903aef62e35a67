//! Built-in world sheets with hand-derived geometry, used by the test
//! suite and reachable from the CLI via `--fixture NAME`.
//!
//! | name      | ambient | s | sheet                                        |
//! |-----------|---------|---|----------------------------------------------|
//! | `cyl`     | 3       | 1 | circle of radius `r` translated in time      |
//! | `flt`     | 3       | 1 | line `x_1 = a t + c` swept in time; each momentary line sits inside a lightlike hyperplane |
//! | `sph`     | 4       | 2 | round 2-sphere of radius `R` translated in time |
//! | `sph5`    | 5       | 2 | the same 2-sphere embedded in `R^5_1` (normal rank 3) |
//! | `cylline` | 4       | 2 | cylinder `circle x line` translated in time  |
//!
//! Closed forms used by tests: the cylinder has lightcone principal
//! curvature `-1/r` toward the outward radial normal and pedal points
//! `(r - t) (1, cos u, sin u)`; the flat sheet has a constant normalized
//! lightcone Gauss map `(1, 1, 0)` and identically zero curvature; the
//! spheres have principal curvatures `-1/R` toward the outward normal.

use crate::error::{Error, Result};
use crate::worldsheet::{AxisRange, Domain, SheetDescription, WorldSheetSpec};

const TAU: f64 = std::f64::consts::TAU;

fn sheet(
    name: &str,
    coords: Vec<String>,
    space_dims: usize,
    u: Vec<AxisRange>,
    t: AxisRange,
) -> WorldSheetSpec {
    WorldSheetSpec::new(SheetDescription {
        name: name.into(),
        coords,
        space_dims,
        domain: Domain { u, t },
    })
    .expect("fixture must be well-formed")
}

/// `X(u, t) = (t, r cos u, r sin u)` on `u in [0, 2pi)`, `t in [-1, 1]`.
pub fn cylinder(r: f64) -> WorldSheetSpec {
    assert!(r > 0.0);
    sheet(
        "cyl",
        vec![
            "t".into(),
            format!("{r}*cos(u1)"),
            format!("{r}*sin(u1)"),
        ],
        1,
        vec![AxisRange::new(0.0, TAU, true)],
        AxisRange::new(-1.0, 1.0, false),
    )
}

/// Same circle but with `t` running over `[t_min, t_max]`; the default
/// [`cylinder`] range stays clear of the pedal collapse at `t = r`.
pub fn cylinder_with_time(r: f64, t_min: f64, t_max: f64) -> WorldSheetSpec {
    assert!(r > 0.0);
    sheet(
        "cyl",
        vec![
            "t".into(),
            format!("{r}*cos(u1)"),
            format!("{r}*sin(u1)"),
        ],
        1,
        vec![AxisRange::new(0.0, TAU, true)],
        AxisRange::new(t_min, t_max, false),
    )
}

/// `X(u, t) = (t, a t + c, u)`, a line translated linearly in time.
/// Timelike iff `|a| < 1`. The momentary lines all lie inside the
/// lightlike hyperplane `<x, (1, 1, 0)> = (a - 1) t + c`, so the
/// normalized lightcone Gauss map of the `+` branch is constant and every
/// lightcone curvature vanishes.
pub fn flat_sheet(a: f64, c: f64) -> WorldSheetSpec {
    assert!(a.abs() < 1.0, "flat sheet needs |a| < 1 to be timelike");
    sheet(
        "flt",
        vec!["t".into(), format!("{a}*t + {c}"), "u1".into()],
        1,
        vec![AxisRange::new(-1.0, 1.0, false)],
        AxisRange::new(-1.0, 1.0, false),
    )
}

fn sphere_coords(radius: f64) -> Vec<String> {
    vec![
        "t".into(),
        format!("{radius}*sin(u1)*cos(u2)"),
        format!("{radius}*sin(u1)*sin(u2)"),
        format!("{radius}*cos(u1)"),
    ]
}

/// Polar cap kept away from the chart poles, where `X_u2` vanishes.
fn sphere_polar_range() -> AxisRange {
    AxisRange::new(0.3, std::f64::consts::PI - 0.3, false)
}

/// Round 2-sphere `X(u, t) = (t, R sin u1 cos u2, R sin u1 sin u2,
/// R cos u1)` in `R^4_1`, on a polar band avoiding the chart poles.
pub fn sphere(radius: f64) -> WorldSheetSpec {
    assert!(radius > 0.0);
    sheet(
        "sph",
        sphere_coords(radius),
        2,
        vec![sphere_polar_range(), AxisRange::new(0.0, TAU, true)],
        AxisRange::new(-1.0, 1.0, false),
    )
}

/// The same 2-sphere embedded in `R^5_1` by a zero fifth coordinate, so
/// the momentary normal spaces have rank 3 and the unit normal sphere is
/// a circle.
pub fn sphere_r5(radius: f64) -> WorldSheetSpec {
    assert!(radius > 0.0);
    let mut coords = sphere_coords(radius);
    coords.push("0".into());
    sheet(
        "sph5",
        coords,
        2,
        vec![sphere_polar_range(), AxisRange::new(0.0, TAU, true)],
        AxisRange::new(-1.0, 1.0, false),
    )
}

/// `X(u, t) = (t, r cos u1, r sin u1, u2)`: a product of the circle with
/// a line. One lightcone principal curvature is `-1/r`, the other is 0,
/// so every point is parabolic but none is umbilic.
pub fn cylinder_line(r: f64) -> WorldSheetSpec {
    assert!(r > 0.0);
    sheet(
        "cylline",
        vec![
            "t".into(),
            format!("{r}*cos(u1)"),
            format!("{r}*sin(u1)"),
            "u2".into(),
        ],
        2,
        vec![
            AxisRange::new(0.0, TAU, true),
            AxisRange::new(-1.0, 1.0, false),
        ],
        AxisRange::new(-1.0, 1.0, false),
    )
}

pub const FIXTURE_NAMES: [&str; 5] = ["cyl", "flt", "sph", "sph5", "cylline"];

/// Fixture registry with default parameters: `cyl` and `cylline` use
/// `r = 2`, `flt` uses `a = 1/2, c = 0`, the spheres use `R = 2`.
pub fn fixture(name: &str) -> Result<WorldSheetSpec> {
    match name {
        "cyl" => Ok(cylinder(2.0)),
        "flt" => Ok(flat_sheet(0.5, 0.0)),
        "sph" => Ok(sphere(2.0)),
        "sph5" => Ok(sphere_r5(2.0)),
        "cylline" => Ok(cylinder_line(2.0)),
        other => Err(Error::Precondition(format!(
            "unknown fixture `{other}`; known fixtures: {}",
            FIXTURE_NAMES.join(", ")
        ))),
    }
}
