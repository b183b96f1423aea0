//! Canonical JSON serialization of coarse types and constructions.
//!
//! Schema `mtorder-coarse-1`: a 0-type is `{colors, comeager, realized}`;
//! a type of positive level adds `level` and `cantors` (an array of types
//! one level down over the expanded color set); a construction is
//! `{t0, children}`.  Dumps sort keys alphabetically and entries in
//! canonical order, so equal inputs give byte-identical output.

use anyhow::{bail, Context, Result};
use mtorder::coarse::{Coarse0, CoarseType, Construction};
use mtorder::json::Json;
use serde_json::Value;
use std::collections::BTreeSet;

pub const SCHEMA: &str = "mtorder-coarse-1";

fn coarse0_to_json(t: &Coarse0) -> Json {
    Json::Obj(vec![
        ("colors".into(), Json::Int(t.colors as i64)),
        ("comeager".into(), Json::Int(t.comeager as i64)),
        (
            "realized".into(),
            Json::Arr(t.realized.iter().map(|&c| Json::Int(c as i64)).collect()),
        ),
    ])
}

pub fn coarse_to_json(t: &CoarseType) -> Json {
    if t.level == 0 {
        return coarse0_to_json(&t.base);
    }
    let Json::Obj(mut fields) = coarse0_to_json(&t.base) else { unreachable!() };
    fields.push(("cantors".into(), Json::Arr(t.cantors.iter().map(coarse_to_json).collect())));
    fields.push(("level".into(), Json::Int(t.level as i64)));
    fields.sort_by(|a, b| a.0.cmp(&b.0));
    Json::Obj(fields)
}

pub fn construction_to_json(c: &Construction) -> Json {
    Json::Obj(vec![
        ("children".into(), Json::Arr(c.children.iter().map(construction_to_json).collect())),
        ("t0".into(), coarse0_to_json(&c.t0)),
    ])
}

fn usize_field(v: &Value, key: &str) -> Result<usize> {
    v.get(key)
        .and_then(Value::as_u64)
        .map(|n| n as usize)
        .with_context(|| format!("missing or non-integer field `{key}`"))
}

fn coarse0_from_json(v: &Value) -> Result<Coarse0> {
    let colors = usize_field(v, "colors")?;
    let comeager = usize_field(v, "comeager")?;
    let realized: BTreeSet<usize> = v
        .get("realized")
        .and_then(Value::as_array)
        .context("missing array field `realized`")?
        .iter()
        .map(|x| x.as_u64().map(|n| n as usize).context("non-integer realized color"))
        .collect::<Result<_>>()?;
    if realized.iter().any(|&c| c >= colors) || comeager >= colors {
        bail!("color out of range");
    }
    Ok(Coarse0::new(colors, comeager, realized))
}

pub fn coarse_from_json(v: &Value) -> Result<CoarseType> {
    let base = coarse0_from_json(v)?;
    let level = match v.get("level") {
        None => 0,
        Some(l) => l.as_u64().context("non-integer level")? as usize,
    };
    if level == 0 {
        if v.get("cantors").is_some_and(|c| c.as_array().is_some_and(|a| !a.is_empty())) {
            bail!("a level-0 type cannot carry Cantor subsets");
        }
        return Ok(CoarseType::level0(base));
    }
    let cantors: BTreeSet<CoarseType> = v
        .get("cantors")
        .and_then(Value::as_array)
        .context("missing array field `cantors`")?
        .iter()
        .map(coarse_from_json)
        .collect::<Result<_>>()?;
    Ok(CoarseType { colors: base.colors, level, base, cantors })
}

pub fn construction_from_json(v: &Value) -> Result<Construction> {
    let t0 = coarse0_from_json(v.get("t0").context("missing field `t0`")?)?;
    let children = v
        .get("children")
        .and_then(Value::as_array)
        .context("missing array field `children`")?
        .iter()
        .map(construction_from_json)
        .collect::<Result<_>>()?;
    Ok(Construction { t0, children })
}
