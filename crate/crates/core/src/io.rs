//! Polygon and report serialization.
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! `parse(emit(p)) == p` bit for bit. Parsing keeps the stored vertex order
//! and does not re-hull.

use std::fmt::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::methods::{ForResult, Method};
use crate::polytope::Polygon2D;
use crate::uncertainty::MarginSet;

pub const POLYGON_CSV_HEADER: &str = "p_pu,q_pu";

#[derive(Deserialize)]
struct VertexRecord {
    p_pu: f64,
    q_pu: f64,
}

/// On-disk form of a [`ForResult`]. Samples are written separately and the
/// wall time is `None` unless timings are recorded, which keeps repeated runs
/// byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForArtifact {
    pub method: Method,
    pub origin: [f64; 2],
    pub area_pu2: f64,
    pub polygon: Polygon2D,
    pub wall_time_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margins: Option<MarginSet>,
}

impl ForArtifact {
    pub fn new(result: &ForResult, margins: Option<&MarginSet>, record_timings: bool) -> Self {
        ForArtifact {
            method: result.method,
            origin: result.origin,
            area_pu2: result.polygon.area(),
            polygon: result.polygon.clone(),
            wall_time_ms: record_timings.then_some(result.wall_time_ms),
            margins: margins.cloned(),
        }
    }
}

pub fn polygon_to_csv(poly: &Polygon2D) -> String {
    let mut out = String::with_capacity(32 * (poly.len() + 1));
    out.push_str(POLYGON_CSV_HEADER);
    out.push('\n');
    for v in &poly.vertices {
        let _ = writeln!(out, "{},{}", v[0], v[1]);
    }
    out
}

pub fn polygon_from_csv(text: &str) -> Result<Polygon2D> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut vertices = Vec::new();
    for rec in rdr.deserialize::<VertexRecord>() {
        let r = rec.map_err(|e| Error::Parse(format!("polygon CSV: {e}")))?;
        if !(r.p_pu.is_finite() && r.q_pu.is_finite()) {
            return Err(Error::Parse("polygon CSV: non-finite coordinate".into()));
        }
        vertices.push([r.p_pu, r.q_pu]);
    }
    Ok(Polygon2D { vertices })
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(format!("JSON encoding: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("JSON: {e}")))
}

pub fn polygon_to_json(poly: &Polygon2D) -> Result<String> {
    to_json(poly)
}

pub fn polygon_from_json(text: &str) -> Result<Polygon2D> {
    from_json(text)
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn awkward() -> Polygon2D {
        Polygon2D { vertices: vec![[0.1, -0.2], [1.0 / 3.0, 1e-300], [-2.5e17, std::f64::consts::PI], [-0.0, 5e-324]] }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let p = awkward();
        let back = polygon_from_csv(&polygon_to_csv(&p)).unwrap();
        assert_eq!(back.vertices.len(), p.vertices.len());
        for (a, b) in back.vertices.iter().zip(&p.vertices) {
            assert_eq!(a[0].to_bits(), b[0].to_bits());
            assert_eq!(a[1].to_bits(), b[1].to_bits());
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let p = awkward();
        assert_eq!(polygon_from_json(&polygon_to_json(&p).unwrap()).unwrap(), p);
    }

    #[test]
    fn bad_csv_is_a_parse_error() {
        assert!(matches!(polygon_from_csv("p_pu,q_pu\n1,x\n"), Err(Error::Parse(_))));
        assert!(matches!(polygon_from_csv("p_pu,q_pu\n1,inf\n"), Err(Error::Parse(_))));
        assert!(polygon_from_csv("p_pu,q_pu\n").unwrap().is_empty());
    }
}
