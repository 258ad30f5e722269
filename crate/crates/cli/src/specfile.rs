//! Manifold spec files.
//!
//! A spec file is a list of `key = value` lines grouped under `[section]`
//! headers. `#` starts a comment. Expressions use the core expression
//! grammar and may refer to the coordinates and to the `[params]` names.
//!
//! ```text
//! format = 1
//! name = round_s2
//!
//! [coords]
//! theta = polar 0 pi
//! phi = periodic 2*pi
//!
//! [params]
//! r = 1.5
//!
//! [metric]
//! g11 = r^2
//! g22 = r^2*sin(theta)^2
//! ```

use std::collections::BTreeMap;

use qcurv::conformal::ConformalFactor;
use qcurv::expr::{eval_expr, parse_expr, Expr, ParamValues};
use qcurv::geometry::{CoordSpec, MetricChart, MAX_DIM};
use qcurv::hypersurface::Immersion;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SpecError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("field `{field}`: {msg}")]
    Field { field: String, msg: String },
}

fn field(field: impl Into<String>, msg: impl ToString) -> SpecError {
    SpecError::Field { field: field.into(), msg: msg.to_string() }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConformalSpec {
    /// `exp`, `scalar_u` or `paneitz_u`.
    pub convention: String,
    pub expr: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImmersionSpec {
    pub space_form: i32,
    pub position: Vec<String>,
    pub normal: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldSpec {
    pub format: u32,
    pub name: String,
    pub coords: Vec<CoordSpec>,
    pub params: ParamValues,
    /// Upper-triangle entries keyed by zero-based `(i, j)`, `i ≤ j`.
    pub metric: BTreeMap<(usize, usize), String>,
    pub conformal: Option<ConformalSpec>,
    pub immersion: Option<ImmersionSpec>,
}

/// Numeric field value: a constant expression such as `2*pi` or `1e-3`.
fn constant(name: &str, text: &str) -> Result<f64, SpecError> {
    let e = parse_expr(text, &[], &[]).map_err(|e| field(name, e))?;
    let v = eval_expr(&e, &[], &ParamValues::new()).map_err(|e| field(name, e))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(field(name, format!("`{text}` is not finite")))
    }
}

fn coord_spec(name: &str, value: &str) -> Result<CoordSpec, SpecError> {
    let key = format!("coords.{name}");
    let words: Vec<&str> = value.split_whitespace().collect();
    let num = |i: usize| constant(&key, words[i]);
    let c = match (words.first().copied(), words.len()) {
        (Some("periodic"), 2) => CoordSpec::periodic(name, num(1)?),
        (Some("range"), 3) => CoordSpec::range(name, num(1)?, num(2)?),
        (Some("polar"), 1) => CoordSpec::polar(name, 0.0, std::f64::consts::PI),
        (Some("polar"), 3) => CoordSpec::polar(name, num(1)?, num(2)?),
        _ => {
            return Err(field(
                key,
                format!("expected `periodic P`, `range LO HI` or `polar [LO HI]`, got `{value}`"),
            ))
        }
    };
    if !(c.lo < c.hi) {
        return Err(field(key, "empty coordinate domain"));
    }
    Ok(c)
}

/// `g12` or `g1_10`, one-based, upper triangle.
fn metric_index(key: &str, n_hint: usize) -> Result<(usize, usize), SpecError> {
    let full = format!("metric.{key}");
    let bad = || field(full.clone(), "metric keys look like `g12` or `g1_10` (one-based)");
    let rest = key.strip_prefix('g').ok_or_else(bad)?;
    let (a, b) = match rest.split_once('_') {
        Some(ab) => ab,
        None if rest.len() == 2 && rest.is_ascii() => rest.split_at(1),
        None => return Err(bad()),
    };
    let (i, j): (usize, usize) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
    if i == 0 || j == 0 || i > n_hint.max(MAX_DIM) || j > n_hint.max(MAX_DIM) {
        return Err(field(full, format!("index out of range 1..={MAX_DIM}")));
    }
    if i > j {
        return Err(field(full, "give metric entries on the upper triangle (i ≤ j)"));
    }
    Ok((i - 1, j - 1))
}

fn split_list(text: &str) -> Vec<String> {
    text.split(',').map(|s| s.trim().to_string()).collect()
}

impl ManifoldSpec {
    pub fn parse(source: &str) -> Result<ManifoldSpec, SpecError> {
        let mut format = None;
        let mut name = None;
        let mut dim: Option<usize> = None;
        let mut coords = Vec::new();
        let mut params = ParamValues::new();
        let mut metric = BTreeMap::new();
        let mut conf: BTreeMap<String, String> = BTreeMap::new();
        let mut imm: BTreeMap<String, String> = BTreeMap::new();
        let mut section = String::new();
        let mut seen_sections = Vec::new();
        for (idx, raw) in source.lines().enumerate() {
            let line = idx + 1;
            let text = raw.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            if let Some(inner) = text.strip_prefix('[') {
                let s = inner
                    .strip_suffix(']')
                    .ok_or_else(|| SpecError::Syntax { line, msg: "unterminated section header".into() })?
                    .trim();
                if !["coords", "params", "metric", "conformal", "immersion"].contains(&s) {
                    return Err(SpecError::Syntax { line, msg: format!("unknown section `[{s}]`") });
                }
                if seen_sections.contains(&s.to_string()) {
                    return Err(SpecError::Syntax { line, msg: format!("section `[{s}]` repeated") });
                }
                seen_sections.push(s.to_string());
                section = s.to_string();
                continue;
            }
            let (key, value) = text
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| SpecError::Syntax { line, msg: format!("expected `key = value`, got `{text}`") })?;
            if key.is_empty() || value.is_empty() {
                return Err(SpecError::Syntax { line, msg: "empty key or value".into() });
            }
            let dup = || SpecError::Syntax { line, msg: format!("`{key}` given twice") };
            match section.as_str() {
                "" => match key {
                    "format" => {
                        let v: u32 = value.parse().map_err(|_| field("format", "expected an integer"))?;
                        if v != FORMAT_VERSION {
                            return Err(field("format", format!("unsupported version {v}, expected {FORMAT_VERSION}")));
                        }
                        if format.replace(v).is_some() {
                            return Err(dup());
                        }
                    }
                    "name" => {
                        if name.replace(value.to_string()).is_some() {
                            return Err(dup());
                        }
                    }
                    "dim" => {
                        let v = value.parse().map_err(|_| field("dim", "expected an integer"))?;
                        if dim.replace(v).is_some() {
                            return Err(dup());
                        }
                    }
                    _ => return Err(field(key, "unknown key")),
                },
                "coords" => {
                    if coords.iter().any(|c: &CoordSpec| c.name == key) {
                        return Err(dup());
                    }
                    coords.push(coord_spec(key, value)?);
                }
                "params" => {
                    let v = constant(&format!("params.{key}"), value)?;
                    if params.insert(key.to_string(), v).is_some() {
                        return Err(dup());
                    }
                }
                "metric" => {
                    let ij = metric_index(key, dim.unwrap_or(0))?;
                    if metric.insert(ij, value.to_string()).is_some() {
                        return Err(dup());
                    }
                }
                "conformal" => {
                    if !["convention", "f", "u"].contains(&key) {
                        return Err(field(format!("conformal.{key}"), "unknown key"));
                    }
                    if conf.insert(key.to_string(), value.to_string()).is_some() {
                        return Err(dup());
                    }
                }
                "immersion" => {
                    if !["space_form", "position", "normal"].contains(&key) {
                        return Err(field(format!("immersion.{key}"), "unknown key"));
                    }
                    if imm.insert(key.to_string(), value.to_string()).is_some() {
                        return Err(dup());
                    }
                }
                _ => unreachable!(),
            }
        }

        let name = name.ok_or_else(|| field("name", "missing"))?;
        if coords.is_empty() {
            return Err(field("coords", "no coordinates declared"));
        }
        let n = coords.len();
        if let Some(d) = dim {
            if d != n {
                return Err(field("dim", format!("says {d} but {n} coordinates are declared")));
            }
        }
        if let Some(&(_, j)) = metric.keys().find(|(i, j)| *i >= n || *j >= n) {
            return Err(field("metric", format!("index {} exceeds the dimension {n}", j + 1)));
        }
        for c in &coords {
            if params.contains_key(&c.name) {
                return Err(field(format!("params.{}", c.name), "name clashes with a coordinate"));
            }
        }
        let conformal = if conf.is_empty() {
            None
        } else {
            let convention = match conf.get("convention") {
                Some(c) => c.clone(),
                None if conf.contains_key("f") => "exp".to_string(),
                None => return Err(field("conformal.convention", "missing (exp, scalar_u or paneitz_u)")),
            };
            let key = if convention == "exp" { "f" } else { "u" };
            if !["exp", "scalar_u", "paneitz_u"].contains(&convention.as_str()) {
                return Err(field("conformal.convention", format!("unknown convention `{convention}`")));
            }
            let other = if key == "f" { "u" } else { "f" };
            if conf.contains_key(other) {
                return Err(field(format!("conformal.{other}"), format!("not used with convention `{convention}`")));
            }
            let expr = conf.get(key).cloned().ok_or_else(|| field(format!("conformal.{key}"), "missing"))?;
            Some(ConformalSpec { convention, expr })
        };
        let immersion = if imm.is_empty() {
            None
        } else {
            if !metric.is_empty() {
                return Err(field("metric", "an immersion spec takes its metric from the embedding"));
            }
            let c = imm.get("space_form").ok_or_else(|| field("immersion.space_form", "missing"))?;
            let space_form = c
                .parse()
                .ok()
                .filter(|c| (-1..=1).contains(c))
                .ok_or_else(|| field("immersion.space_form", "expected -1, 0 or 1"))?;
            let list = |k: &str| {
                imm.get(k).map(|s| split_list(s)).ok_or_else(|| field(format!("immersion.{k}"), "missing"))
            };
            Some(ImmersionSpec { space_form, position: list("position")?, normal: list("normal")? })
        };
        if immersion.is_none() {
            for i in 0..n {
                if !metric.contains_key(&(i, i)) {
                    return Err(field(format!("metric.g{}_{}", i + 1, i + 1), "diagonal entry missing"));
                }
            }
        }
        Ok(ManifoldSpec { format: format.unwrap_or(FORMAT_VERSION), name, coords, params, metric, conformal, immersion })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    fn names(&self) -> (Vec<&str>, Vec<&str>) {
        (self.coords.iter().map(|c| c.name.as_str()).collect(), self.params.keys().map(String::as_str).collect())
    }

    /// Parse an expression over this spec's coordinates and parameters.
    pub fn expr(&self, key: &str, text: &str) -> Result<Expr, SpecError> {
        let (c, p) = self.names();
        parse_expr(text, &c, &p).map_err(|e| field(key, e))
    }

    pub fn chart(&self) -> Result<MetricChart, SpecError> {
        if self.immersion.is_some() {
            let im = self.immersion()?;
            let c = im.induced_chart().map_err(|e| field("immersion", e))?;
            return MetricChart::new(&self.name, c.coords.clone(), c.metric.clone(), c.params.clone())
                .map_err(|e| field("immersion", e));
        }
        let n = self.dim();
        let mut g = vec![Expr::zero(); n * n];
        for (&(i, j), text) in &self.metric {
            let e = self.expr(&format!("metric.g{}_{}", i + 1, j + 1), text)?;
            g[i * n + j] = e.clone();
            g[j * n + i] = e;
        }
        MetricChart::new(&self.name, self.coords.clone(), g, self.params.clone()).map_err(|e| field("metric", e))
    }

    pub fn immersion(&self) -> Result<Immersion, SpecError> {
        let spec = self.immersion.as_ref().ok_or_else(|| field("immersion", "section missing"))?;
        let parse_all = |k: &str, v: &[String]| {
            v.iter().enumerate().map(|(i, s)| self.expr(&format!("immersion.{k}[{}]", i + 1), s)).collect::<Result<Vec<_>, _>>()
        };
        let position = parse_all("position", &spec.position)?;
        let normal = parse_all("normal", &spec.normal)?;
        Immersion::new(&self.name, spec.space_form, self.coords.clone(), position, normal, self.params.clone())
            .map_err(|e| field("immersion", e))
    }

    pub fn conformal_factor(&self) -> Result<Option<ConformalFactor>, SpecError> {
        let Some(c) = &self.conformal else { return Ok(None) };
        let key = if c.convention == "exp" { "conformal.f" } else { "conformal.u" };
        let e = self.expr(key, &c.expr)?;
        Ok(Some(make_factor(&c.convention, e).map_err(|m| field("conformal.convention", m))?))
    }
}

pub fn make_factor(convention: &str, e: Expr) -> Result<ConformalFactor, String> {
    Ok(match convention {
        "exp" => ConformalFactor::Exponent(e),
        "scalar_u" => ConformalFactor::ScalarU(e),
        "paneitz_u" => ConformalFactor::PaneitzU(e),
        other => return Err(format!("unknown convention `{other}` (exp, scalar_u or paneitz_u)")),
    })
}
