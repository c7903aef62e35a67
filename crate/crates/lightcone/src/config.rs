//! Run configuration: JSON loading, validation, and CLI overrides.
//!
//! Configs are walked by hand rather than derived so that every error
//! carries a JSON-pointer path (`/grid/u/0`) and unknown keys are
//! rejected everywhere — the loader doubles as a hardened parsing entry
//! point. The one exception is the `sheet.custom` subtree, which reuses
//! the [`SheetDescription`] serde shape (with unknown fields denied).

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::fixtures;
use crate::worldsheet::{SheetDescription, WorldSheetSpec};

pub const DEFAULT_U_COUNT: usize = 33;
pub const DEFAULT_ANGLE_COUNT: usize = 16;
pub const DEFAULT_T_COUNT: usize = 17;

/// Where the world sheet comes from.
#[derive(Clone, Debug, Serialize)]
pub enum SheetSource {
    /// A named built-in family with numeric parameters.
    Fixture {
        name: String,
        params: BTreeMap<String, f64>,
    },
    /// Coordinate expressions given inline.
    Custom(SheetDescription),
}

/// Sample counts for sweeps. An empty `u` means "default per axis"
/// (the sheet's parameter count is only known after resolution).
#[derive(Clone, Debug, Serialize)]
pub struct GridConfig {
    pub u: Vec<usize>,
    /// Samples per normal-chart angle axis (normal rank >= 3 only).
    pub angles: usize,
    pub t: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            u: Vec::new(),
            angles: DEFAULT_ANGLE_COUNT,
            t: DEFAULT_T_COUNT,
        }
    }
}

impl GridConfig {
    /// `u` counts with defaults filled in for a sheet with `s` parameters.
    pub fn u_counts(&self, s: usize) -> Result<Vec<usize>> {
        if self.u.is_empty() {
            return Ok(vec![DEFAULT_U_COUNT; s]);
        }
        if self.u.len() != s {
            return Err(Error::Validation(format!(
                "grid gives {} u count(s) but the sheet has {s} u parameter(s)",
                self.u.len()
            )));
        }
        Ok(self.u.clone())
    }

    /// Applies one `AXIS=COUNT` override; `AXIS` is `u1..`, `xi`, or `t`.
    pub fn set(&mut self, key: &str, count: usize, space_dims: usize) -> Result<()> {
        if count < 2 {
            return Err(Error::Validation(format!(
                "grid axis {key} needs at least 2 samples, got {count}"
            )));
        }
        if key == "t" {
            self.t = count;
        } else if key == "xi" {
            self.angles = count;
        } else if let Some(num) = key.strip_prefix('u') {
            let i: usize = num
                .parse()
                .map_err(|_| Error::Validation(format!("unknown grid axis `{key}`")))?;
            if i < 1 || i > space_dims {
                return Err(Error::Validation(format!(
                    "grid axis `{key}` out of range; the sheet has u1..u{space_dims}"
                )));
            }
            if self.u.is_empty() {
                self.u = vec![DEFAULT_U_COUNT; space_dims];
            }
            self.u[i - 1] = count;
        } else {
            return Err(Error::Validation(format!(
                "unknown grid axis `{key}` (expected u1..u<s>, xi, or t)"
            )));
        }
        Ok(())
    }
}

/// Numeric knobs for the sweeps and checks, exactly the ones the
/// pipelines consume. All distances are absolute unless noted.
#[derive(Clone, Debug, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// |K| below this counts as a parabolic point.
    pub parabolic_tol: f64,
    /// Relative eigenvalue spread below this counts as umbilic.
    pub umbilic_tol: f64,
    /// Angle (radians) allowed between Gauss-map samples that still
    /// count as "constant".
    pub constancy_angle_tol: f64,
    /// Allowed residual |<X, v> - c| for the fitted constant plane.
    pub plane_residual_tol: f64,
    /// Allowed |normalized K| for "flat in the lightlike direction".
    pub kell_flat_tol: f64,
    /// Step for finite-difference derivative checks.
    pub fd_step: f64,
    /// Allowed tangent-drift residual in the derivative checks.
    pub weingarten_tol: f64,
    /// Allowed mismatch between curvature spectra computed two ways.
    pub spectrum_tol: f64,
    /// Allowed |dH| at a critical direction of the height family.
    pub height_tol: f64,
    /// Allowed residual in the Hessian/second-fundamental-form match.
    pub hessian_tol: f64,
    /// Relative singular-value cutoff for analytic matrix ranks.
    pub rank_sigma: f64,
    /// Relative singular-value cutoff for grid-difference ranks.
    pub fd_rank_sigma: f64,
    /// Distance in the unfolded front below which two samples count as
    /// the same point (`null` = 1e-6 of the bounding-box diagonal).
    pub match_delta: Option<f64>,
    /// Minimum parameter separation (grid cells) for a Maxwell pair.
    pub sep_cells: f64,
    /// Cap on reported Maxwell pairs (the total is still counted).
    pub max_pairs: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            parabolic_tol: 1e-8,
            umbilic_tol: 1e-8,
            constancy_angle_tol: 1e-9,
            plane_residual_tol: 1e-9,
            kell_flat_tol: 1e-10,
            fd_step: 1e-4,
            weingarten_tol: 1e-5,
            spectrum_tol: 1e-8,
            height_tol: 1e-9,
            hessian_tol: 1e-9,
            rank_sigma: 1e-8,
            fd_rank_sigma: 1e-6,
            match_delta: None,
            sep_cells: 10.0,
            max_pairs: 1000,
        }
    }
}

impl Tolerances {
    /// Applies one `KEY=VALUE` override by field name. `match_delta`
    /// also accepts `auto` (meaning: derive from the data).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let mut map = match serde_json::to_value(&*self) {
            Ok(Value::Object(m)) => m,
            _ => unreachable!("Tolerances serializes to an object"),
        };
        if !map.contains_key(key) {
            let known: Vec<&String> = map.keys().collect();
            return Err(Error::Validation(format!(
                "unknown tolerance `{key}`; known keys: {known:?}"
            )));
        }
        let parsed: Value = if key == "max_pairs" {
            let n: usize = value.parse().map_err(|_| {
                Error::Validation(format!("tolerance {key} needs an integer, got `{value}`"))
            })?;
            Value::from(n)
        } else if key == "match_delta" && (value == "auto" || value == "null") {
            Value::Null
        } else {
            let x: f64 = value.parse().map_err(|_| {
                Error::Validation(format!("tolerance {key} needs a number, got `{value}`"))
            })?;
            if !x.is_finite() || x < 0.0 {
                return Err(Error::Validation(format!(
                    "tolerance {key} must be a finite non-negative number, got {x}"
                )));
            }
            Value::from(x)
        };
        map.insert(key.to_string(), parsed);
        *self = serde_json::from_value(Value::Object(map))
            .map_err(|e| Error::Validation(format!("tolerance {key}: {e}")))?;
        Ok(())
    }
}

/// Output switches.
#[derive(Clone, Debug, Serialize)]
pub struct OutputConfig {
    /// Output directory (created if missing).
    pub dir: String,
    pub obj: bool,
    pub csv: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: "out".into(),
            obj: true,
            csv: true,
        }
    }
}

/// A full run description, as read from a JSON config file.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub sheet: SheetSource,
    pub grid: GridConfig,
    pub tolerances: Tolerances,
    pub output: OutputConfig,
    /// Worker threads (`None` = library default).
    pub threads: Option<usize>,
}

impl RunConfig {
    /// A default run over a named built-in sheet.
    pub fn for_fixture(name: &str) -> RunConfig {
        RunConfig {
            sheet: SheetSource::Fixture {
                name: name.to_string(),
                params: BTreeMap::new(),
            },
            grid: GridConfig::default(),
            tolerances: Tolerances::default(),
            output: OutputConfig::default(),
            threads: None,
        }
    }

    /// Builds the world sheet this config describes.
    pub fn sheet_spec(&self) -> Result<WorldSheetSpec> {
        resolve_sheet(&self.sheet)
    }
}

fn param(params: &BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

/// Instantiates a sheet source. Fixture parameters not named are
/// defaulted; unknown ones are rejected.
pub fn resolve_sheet(source: &SheetSource) -> Result<WorldSheetSpec> {
    match source {
        SheetSource::Custom(desc) => WorldSheetSpec::new(desc.clone()),
        SheetSource::Fixture { name, params } => {
            let allowed: &[&str] = match name.as_str() {
                "cyl" => &["r", "t_min", "t_max"],
                "flt" => &["a", "c"],
                "sph" | "sph5" => &["R"],
                "cylline" => &["r"],
                other => {
                    return Err(Error::Validation(format!(
                        "unknown fixture `{other}`; known: {:?}",
                        fixtures::FIXTURE_NAMES
                    )))
                }
            };
            for key in params.keys() {
                if !allowed.contains(&key.as_str()) {
                    return Err(Error::Validation(format!(
                        "fixture `{name}` has no parameter `{key}`; allowed: {allowed:?}"
                    )));
                }
            }
            for (key, value) in params {
                if !value.is_finite() {
                    return Err(Error::Validation(format!(
                        "fixture parameter {key} must be finite"
                    )));
                }
            }
            Ok(match name.as_str() {
                "cyl" => {
                    let r = param(params, "r", 2.0);
                    if r <= 0.0 {
                        return Err(Error::Validation("cyl needs r > 0".into()));
                    }
                    if params.contains_key("t_min") || params.contains_key("t_max") {
                        fixtures::cylinder_with_time(
                            r,
                            param(params, "t_min", -1.0),
                            param(params, "t_max", 1.0),
                        )
                    } else {
                        fixtures::cylinder(r)
                    }
                }
                "flt" => {
                    let a = param(params, "a", 0.5);
                    if a.abs() >= 1.0 {
                        return Err(Error::Validation(
                            "flt needs |a| < 1 (spacelike slope)".into(),
                        ));
                    }
                    fixtures::flat_sheet(a, param(params, "c", 0.0))
                }
                "sph" | "sph5" => {
                    let radius = param(params, "R", 2.0);
                    if radius <= 0.0 {
                        return Err(Error::Validation("sphere needs R > 0".into()));
                    }
                    if name == "sph" {
                        fixtures::sphere(radius)
                    } else {
                        fixtures::sphere_r5(radius)
                    }
                }
                "cylline" => {
                    let r = param(params, "r", 2.0);
                    if r <= 0.0 {
                        return Err(Error::Validation("cylline needs r > 0".into()));
                    }
                    fixtures::cylinder_line(r)
                }
                _ => unreachable!(),
            })
        }
    }
}

fn cfg_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| cfg_err(path, "expected an object"))
}

fn as_f64(v: &Value, path: &str) -> Result<f64> {
    let x = v
        .as_f64()
        .ok_or_else(|| cfg_err(path, "expected a number"))?;
    if !x.is_finite() {
        return Err(cfg_err(path, "expected a finite number"));
    }
    Ok(x)
}

fn as_usize(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| cfg_err(path, "expected a non-negative integer"))
}

fn as_bool(v: &Value, path: &str) -> Result<bool> {
    v.as_bool().ok_or_else(|| cfg_err(path, "expected a boolean"))
}

fn as_str<'a>(v: &'a Value, path: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| cfg_err(path, "expected a string"))
}

fn reject_unknown(map: &Map<String, Value>, allowed: &[&str], path: &str) -> Result<()> {
    for key in map.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(cfg_err(
                &format!("{path}/{key}"),
                format!("unknown key (allowed: {allowed:?})"),
            ));
        }
    }
    Ok(())
}

fn parse_sheet(v: &Value) -> Result<SheetSource> {
    let map = as_object(v, "/sheet")?;
    reject_unknown(map, &["fixture", "params", "custom"], "/sheet")?;
    match (map.get("fixture"), map.get("custom")) {
        (Some(_), Some(_)) => Err(cfg_err(
            "/sheet",
            "give either `fixture` or `custom`, not both",
        )),
        (None, None) => Err(cfg_err("/sheet", "needs a `fixture` name or a `custom` sheet")),
        (Some(f), None) => {
            let name = as_str(f, "/sheet/fixture")?.to_string();
            let mut params = BTreeMap::new();
            if let Some(p) = map.get("params") {
                let pmap = as_object(p, "/sheet/params")?;
                for (key, value) in pmap {
                    let path = format!("/sheet/params/{key}");
                    params.insert(key.clone(), as_f64(value, &path)?);
                }
            }
            Ok(SheetSource::Fixture { name, params })
        }
        (None, Some(c)) => {
            if map.contains_key("params") {
                return Err(cfg_err(
                    "/sheet/params",
                    "custom sheets take no `params`; bake values into the expressions",
                ));
            }
            let desc: SheetDescription = serde_json::from_value(c.clone())
                .map_err(|e| cfg_err("/sheet/custom", e.to_string()))?;
            Ok(SheetSource::Custom(desc))
        }
    }
}

fn parse_grid(v: &Value) -> Result<GridConfig> {
    let map = as_object(v, "/grid")?;
    reject_unknown(map, &["u", "angles", "t"], "/grid")?;
    let mut grid = GridConfig::default();
    if let Some(u) = map.get("u") {
        let arr = u
            .as_array()
            .ok_or_else(|| cfg_err("/grid/u", "expected an array of sample counts"))?;
        grid.u = Vec::with_capacity(arr.len());
        for (i, item) in arr.iter().enumerate() {
            let path = format!("/grid/u/{i}");
            let count = as_usize(item, &path)?;
            if count < 2 {
                return Err(cfg_err(&path, "each u axis needs at least 2 samples"));
            }
            grid.u.push(count);
        }
    }
    if let Some(a) = map.get("angles") {
        grid.angles = as_usize(a, "/grid/angles")?;
        if grid.angles < 2 {
            return Err(cfg_err("/grid/angles", "needs at least 2 samples"));
        }
    }
    if let Some(t) = map.get("t") {
        grid.t = as_usize(t, "/grid/t")?;
        if grid.t < 2 {
            return Err(cfg_err("/grid/t", "needs at least 2 samples"));
        }
    }
    Ok(grid)
}

fn parse_tolerances(v: &Value) -> Result<Tolerances> {
    let map = as_object(v, "/tolerances")?;
    let mut tol = Tolerances::default();
    let defaults = match serde_json::to_value(&tol) {
        Ok(Value::Object(m)) => m,
        _ => unreachable!(),
    };
    let mut merged = defaults.clone();
    for (key, value) in map {
        let path = format!("/tolerances/{key}");
        if !defaults.contains_key(key) {
            return Err(cfg_err(&path, "unknown tolerance"));
        }
        let checked = if key == "max_pairs" {
            Value::from(as_usize(value, &path)?)
        } else if key == "match_delta" && value.is_null() {
            Value::Null
        } else {
            let x = as_f64(value, &path)?;
            if x < 0.0 {
                return Err(cfg_err(&path, "must be non-negative"));
            }
            Value::from(x)
        };
        merged.insert(key.clone(), checked);
    }
    tol = serde_json::from_value(Value::Object(merged))
        .map_err(|e| cfg_err("/tolerances", e.to_string()))?;
    Ok(tol)
}

fn parse_output(v: &Value) -> Result<OutputConfig> {
    let map = as_object(v, "/output")?;
    reject_unknown(map, &["dir", "obj", "csv"], "/output")?;
    let mut out = OutputConfig::default();
    if let Some(d) = map.get("dir") {
        out.dir = as_str(d, "/output/dir")?.to_string();
    }
    if let Some(o) = map.get("obj") {
        out.obj = as_bool(o, "/output/obj")?;
    }
    if let Some(c) = map.get("csv") {
        out.csv = as_bool(c, "/output/csv")?;
    }
    Ok(out)
}

/// Parses and validates a JSON run config. Errors carry a JSON-pointer
/// style `path` into the document. Never panics on malformed input.
pub fn load_config(text: &str) -> Result<RunConfig> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| cfg_err("", format!("invalid JSON: {e}")))?;
    let map = as_object(&root, "")?;
    reject_unknown(map, &["sheet", "grid", "tolerances", "output", "threads"], "")?;
    let sheet = parse_sheet(
        map.get("sheet")
            .ok_or_else(|| cfg_err("/sheet", "missing (every run needs a sheet)"))?,
    )?;
    let grid = match map.get("grid") {
        Some(g) => parse_grid(g)?,
        None => GridConfig::default(),
    };
    let tolerances = match map.get("tolerances") {
        Some(t) => parse_tolerances(t)?,
        None => Tolerances::default(),
    };
    let output = match map.get("output") {
        Some(o) => parse_output(o)?,
        None => OutputConfig::default(),
    };
    let threads = match map.get("threads") {
        Some(Value::Null) | None => None,
        Some(t) => {
            let n = as_usize(t, "/threads")?;
            if n == 0 {
                return Err(cfg_err("/threads", "must be at least 1"));
            }
            Some(n)
        }
    };
    let config = RunConfig {
        sheet,
        grid,
        tolerances,
        output,
        threads,
    };
    // fail fast on sheets that can't be built at all
    config.sheet_spec()?;
    if !config.grid.u.is_empty() {
        let s = config.sheet_spec()?.space_dims();
        if config.grid.u.len() != s {
            return Err(cfg_err(
                "/grid/u",
                format!(
                    "gives {} count(s) but the sheet has {s} u parameter(s)",
                    config.grid.u.len()
                ),
            ));
        }
    }
    Ok(config)
}
