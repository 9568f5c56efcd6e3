//! Clap-protocol specs: JSON files and inline axis lists.

use anyhow::{anyhow, bail, Context, Result};
use contextsim::{ClapAxis, UnitVec3};
use serde::Deserialize;
use std::path::Path;

/// One axis entry: a named basis direction or an explicit unit 3-vector.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum AxisSpec {
    Named(String),
    Vector([f64; 3]),
}

/// JSON protocol file: `{"axes": [...], "trials": n, "seed": s}`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSpec {
    pub axes: Vec<AxisSpec>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
}

pub fn load_protocol(path: &Path) -> Result<ProtocolSpec> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading protocol {}", path.display()))?;
    let spec: ProtocolSpec = serde_json::from_str(&text)
        .with_context(|| format!("parsing protocol {}", path.display()))?;
    if spec.axes.is_empty() {
        bail!("protocol {} lists no axes", path.display());
    }
    Ok(spec)
}

pub fn resolve_axis(spec: &AxisSpec) -> Result<ClapAxis> {
    match spec {
        AxisSpec::Named(name) => axis_by_name(name),
        AxisSpec::Vector([x, y, z]) => {
            let v = UnitVec3::normalized(*x, *y, *z)
                .map_err(|e| anyhow!("axis [{x}, {y}, {z}]: {e}"))?;
            Ok(ClapAxis::new(v))
        }
    }
}

fn axis_by_name(name: &str) -> Result<ClapAxis> {
    match name {
        "x" => Ok(ClapAxis::x()),
        "y" => Ok(ClapAxis::y()),
        "z" => Ok(ClapAxis::z()),
        other => bail!("unknown axis name {other:?}; use x, y, z or a,b,c components"),
    }
}

/// Inline CLI form: `x`, `y`, `z`, or comma-separated components `a,b,c`.
pub fn parse_inline_axis(text: &str) -> Result<ClapAxis> {
    if matches!(text, "x" | "y" | "z") {
        return axis_by_name(text);
    }
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        bail!("axis {text:?} is neither a named direction nor three components");
    }
    let mut values = [0.0f64; 3];
    for (slot, part) in values.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse::<f64>()
            .with_context(|| format!("axis component {part:?}"))?;
    }
    resolve_axis(&AxisSpec::Vector(values))
}
