//! Flag values: "p/q" rationals and the JSON grammar for circles and
//! matrices.
//!
//! A circle is `{"center": [x, y], "radius": r}` or, for the line
//! {x : n·x = d}, `{"normal": [nx, ny], "offset": d}`. A matrix is
//! `[m11, m12, m22]`, `{"a": a, "b": b, "c": c}` for M(a, b, c), or a circle
//! object standing for m(C). Numbers may be JSON numbers or "p/q" strings.
//! A spec is an array of three items, inline or read from `@path`; the word
//! `band` names the band-packing triple.

use num_rational::Rational64;
use sandstone::circles::{circle_to_matrix, GenCircle};
use sandstone::symmat::{Sym2, Vec2};
use serde_json::Value;

pub fn parse_rational(s: &str) -> Result<Rational64, String> {
    let t = s.trim();
    let (n, d) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let n: i64 = n.parse().map_err(|_| format!("'{s}' is not p/q"))?;
    let d: i64 = d.parse().map_err(|_| format!("'{s}' is not p/q"))?;
    if d == 0 {
        return Err(format!("'{s}' has zero denominator"));
    }
    Ok(Rational64::new(n, d))
}

fn read_spec(spec: &str) -> Result<Value, String> {
    let text = match spec.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?,
        None => spec.to_string(),
    };
    serde_json::from_str(&text).map_err(|e| format!("bad JSON: {e}"))
}

fn number(v: &Value) -> Result<f64, String> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| format!("bad number {n}")),
        Value::String(s) => parse_rational(s).map(|q| *q.numer() as f64 / *q.denom() as f64),
        _ => Err(format!("expected a number, got {v}")),
    }
}

fn pair(v: &Value) -> Result<Vec2, String> {
    match v.as_array().map(|a| a.as_slice()) {
        Some([x, y]) => Ok(Vec2::new(number(x)?, number(y)?)),
        _ => Err(format!("expected [x, y], got {v}")),
    }
}

fn triple(v: &Value) -> Result<[Value; 3], String> {
    match v.as_array() {
        Some(a) if a.len() == 3 => Ok([a[0].clone(), a[1].clone(), a[2].clone()]),
        _ => Err("expected an array of three items".into()),
    }
}

fn circle(v: &Value) -> Result<GenCircle, String> {
    if let (Some(c), Some(r)) = (v.get("center"), v.get("radius")) {
        let c = pair(c)?;
        return GenCircle::proper(c.x, c.y, number(r)?).map_err(|e| e.to_string());
    }
    if let (Some(n), Some(d)) = (v.get("normal"), v.get("offset")) {
        return GenCircle::line(pair(n)?, number(d)?).map_err(|e| e.to_string());
    }
    Err(format!("not a circle: {v}"))
}

/// The band triple in the paper frame with the circle of radius ¼ between
/// the unit circles at (1, 0) and (1, 2).
fn band_matrices() -> [Sym2; 3] {
    [
        Sym2::m_of(1.0, 0.0, 3.0),
        Sym2::m_of(1.0, 2.0, 3.0),
        Sym2::m_of(0.25, 1.0, 2.25),
    ]
}

/// `None` means the band generators of the chosen frame.
pub fn parse_circles(spec: &str) -> Result<Option<[GenCircle; 3]>, String> {
    if spec.trim() == "band" {
        return Ok(None);
    }
    let [a, b, c] = triple(&read_spec(spec)?)?;
    Ok(Some([circle(&a)?, circle(&b)?, circle(&c)?]))
}

fn matrix(v: &Value) -> Result<Sym2, String> {
    if let Some([m11, m12, m22]) = v.as_array().map(|a| a.as_slice()) {
        return Ok(Sym2::new(number(m11)?, number(m12)?, number(m22)?));
    }
    if let (Some(a), Some(b), Some(c)) = (v.get("a"), v.get("b"), v.get("c")) {
        return Ok(Sym2::m_of(number(a)?, number(b)?, number(c)?));
    }
    circle_to_matrix(&circle(v)?).map_err(|e| e.to_string())
}

pub fn parse_matrices(spec: &str) -> Result<[Sym2; 3], String> {
    if spec.trim() == "band" {
        return Ok(band_matrices());
    }
    let [a, b, c] = triple(&read_spec(spec)?)?;
    Ok([matrix(&a)?, matrix(&b)?, matrix(&c)?])
}
