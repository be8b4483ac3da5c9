//! JSON formats.
//!
//! Polygon: `{"vertices": [[x, y], ...]}`. Product spec:
//! `{"p": number | "inf", "components": [...]}` where each component is
//! `{"polygon": {...}}`, `{"interval": l}`, `{"ball": {"dim": d, "radius": r}}`
//! or a nested product spec.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geometry::{Polygon2, DEFAULT_EPS};
use crate::products::{Component, Exponent, ProductSpec};
use crate::vec2::Vec2;

#[derive(Serialize, Deserialize)]
struct PolygonDoc {
    vertices: Vec<[f64; 2]>,
}

/// Parse and canonicalize a polygon.
pub fn polygon_from_json(text: &str) -> Result<Polygon2> {
    polygon_from_json_eps(text, DEFAULT_EPS)
}

pub fn polygon_from_json_eps(text: &str, eps: f64) -> Result<Polygon2> {
    let doc: PolygonDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    Polygon2::with_eps(doc.vertices.into_iter().map(Vec2::from).collect(), eps)
}

fn polygon_value(p: &Polygon2) -> Value {
    json!({ "vertices": p.vertices().iter().map(|v| [v.x, v.y]).collect::<Vec<_>>() })
}

/// Canonical vertex order; numbers use the shortest representation that reads back bit-for-bit.
pub fn polygon_to_json(p: &Polygon2) -> String {
    serde_json::to_string_pretty(&polygon_value(p)).expect("finite coordinates serialize")
}

pub fn product_spec_from_json(text: &str) -> Result<ProductSpec> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    spec_from_value(&v, DEFAULT_EPS)
}

fn spec_from_value(v: &Value, eps: f64) -> Result<ProductSpec> {
    let p = match v.get("p") {
        Some(Value::String(s)) if s == "inf" => Exponent::Infinity,
        Some(Value::Number(n)) => Exponent::new(n.as_f64().unwrap_or(f64::NAN))?,
        _ => return Err(Error::Parse("product spec needs \"p\": number or \"inf\"".into())),
    };
    let comps = v
        .get("components")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse("product spec needs a \"components\" array".into()))?;
    let components = comps.iter().map(|c| component_from_value(c, eps)).collect::<Result<Vec<_>>>()?;
    ProductSpec::new(p, components)
}

fn component_from_value(c: &Value, eps: f64) -> Result<Component> {
    if let Some(poly) = c.get("polygon") {
        let doc: PolygonDoc = serde_json::from_value(poly.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        return Ok(Component::Polygon(Polygon2::with_eps(
            doc.vertices.into_iter().map(Vec2::from).collect(),
            eps,
        )?));
    }
    if let Some(l) = c.get("interval") {
        let l = l.as_f64().ok_or_else(|| Error::Parse("interval half-length must be a number".into()))?;
        return Ok(Component::Interval(l));
    }
    if let Some(b) = c.get("ball") {
        let dim = b.get("dim").and_then(Value::as_u64);
        let radius = b.get("radius").and_then(Value::as_f64);
        return match (dim, radius) {
            (Some(dim), Some(radius)) => Ok(Component::Ball { dim: dim as usize, radius }),
            _ => Err(Error::Parse("ball needs integer \"dim\" and numeric \"radius\"".into())),
        };
    }
    if c.get("components").is_some() {
        return Ok(Component::Product(Box::new(spec_from_value(c, eps)?)));
    }
    Err(Error::Parse(format!("unrecognized component {c}")))
}

pub fn product_spec_to_json(spec: &ProductSpec) -> String {
    serde_json::to_string_pretty(&spec_value(spec)).expect("finite values serialize")
}

fn spec_value(spec: &ProductSpec) -> Value {
    let p = match spec.p() {
        Exponent::Infinity => json!("inf"),
        Exponent::Finite(p) => json!(p),
    };
    let comps: Vec<Value> = spec
        .components()
        .iter()
        .map(|c| match c {
            Component::Polygon(poly) => json!({ "polygon": polygon_value(poly) }),
            Component::Interval(l) => json!({ "interval": l }),
            Component::Ball { dim, radius } => json!({ "ball": { "dim": dim, "radius": radius } }),
            Component::Product(s) => spec_value(s),
        })
        .collect();
    json!({ "p": p, "components": comps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::regular_polygon;

    #[test]
    fn polygon_round_trip_is_exact() {
        let k = regular_polygon(7, 1.3, 0.1).unwrap();
        let back = polygon_from_json(&polygon_to_json(&k)).unwrap();
        assert_eq!(back.vertices(), k.vertices());
    }

    #[test]
    fn reader_canonicalizes() {
        let p = polygon_from_json(r#"{"vertices": [[1,1],[-1,1],[-1,-1],[0,-1],[1,-1]]}"#).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p.vertex(0), Vec2::new(-1.0, -1.0));
        assert!(matches!(polygon_from_json("{"), Err(Error::Parse(_))));
        assert!(matches!(polygon_from_json(r#"{"vertices": [[0,0],[1,0]]}"#), Err(Error::InvalidArgument(_) | Error::InvalidBody(_))));
    }

    #[test]
    fn product_spec_round_trip() {
        let text = r#"{"p": 1, "components": [
            {"polygon": {"vertices": [[1,0],[0,1],[-1,0],[0,-1]]}},
            {"p": "inf", "components": [{"interval": 0.5}, {"ball": {"dim": 2, "radius": 2}}]}
        ]}"#;
        let spec = product_spec_from_json(text).unwrap();
        assert_eq!(spec.dim(), 5);
        let back = product_spec_from_json(&product_spec_to_json(&spec)).unwrap();
        assert_eq!(back, spec);
        assert!(product_spec_from_json(r#"{"p": 0.5, "components": [{"interval": 1}]}"#).is_err());
        assert!(product_spec_from_json(r#"{"p": 1, "components": [{"cube": 1}]}"#).is_err());
    }
}
