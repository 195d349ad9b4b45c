//! Static maps of an aggregation, read back from `assignments.csv`.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Value};

use crate::CliError;

#[derive(Clone, Debug, Deserialize)]
pub struct AssignedRegion {
    pub region_id: String,
    pub x: f64,
    pub y: f64,
    pub population: u64,
    pub aggregated_region_id: usize,
}

pub fn read_assignments(path: &Path) -> Result<Vec<AssignedRegion>, CliError> {
    let invalid = |e: csv::Error| CliError::Invalid(format!("{}: {e}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(invalid)?;
    reader.deserialize().collect::<Result<_, _>>().map_err(invalid)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Fill colour of an aggregated region. Hue steps by the golden angle so
/// neighbouring indices differ strongly; saturation and lightness come from
/// a hash of the index.
pub fn site_colour(index: usize) -> String {
    let h = splitmix64(index as u64);
    let hue = (index as f64 * 137.507_764) % 360.0;
    let saturation = 55 + (h % 30);
    let lightness = 45 + ((h >> 8) % 20);
    format!("hsl({hue:.1},{saturation}%,{lightness}%)")
}

const WIDTH: f64 = 800.0;
const MARGIN: f64 = 20.0;

pub fn svg(regions: &[AssignedRegion]) -> String {
    let (mut min_x, mut min_y, mut max_x, mut max_y) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for r in regions {
        min_x = min_x.min(r.x);
        min_y = min_y.min(r.y);
        max_x = max_x.max(r.x);
        max_y = max_y.max(r.y);
    }
    if regions.is_empty() {
        (min_x, min_y, max_x, max_y) = (0.0, 0.0, 1.0, 1.0);
    }
    let span = (max_x - min_x).max(max_y - min_y).max(f64::MIN_POSITIVE);
    let scale = (WIDTH - 2.0 * MARGIN) / span;
    let height = (max_y - min_y) * scale + 2.0 * MARGIN;
    // SVG y grows downwards.
    let px = |x: f64| MARGIN + (x - min_x) * scale;
    let py = |y: f64| MARGIN + (max_y - y) * scale;

    let mut groups: BTreeMap<usize, Vec<&AssignedRegion>> = BTreeMap::new();
    for r in regions {
        groups.entry(r.aggregated_region_id).or_default().push(r);
    }

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height:.2}" viewBox="0 0 {WIDTH} {height:.2}">"#
    );
    for (id, members) in &groups {
        let _ = writeln!(out, r#"  <g id="aggregated-{id}" fill="{}">"#, site_colour(*id));
        for r in members {
            let _ = writeln!(
                out,
                r#"    <circle cx="{:.2}" cy="{:.2}" r="4"><title>{} ({})</title></circle>"#,
                px(r.x),
                py(r.y),
                xml_escape(&r.region_id),
                r.population
            );
        }
        let n = members.len() as f64;
        let cx = members.iter().map(|r| r.x).sum::<f64>() / n;
        let cy = members.iter().map(|r| r.y).sum::<f64>() / n;
        let (cx, cy) = (px(cx), py(cy));
        let _ = writeln!(
            out,
            r#"    <path d="M{:.2} {cy:.2}H{:.2}M{cx:.2} {:.2}V{:.2}" fill="none" stroke="black" stroke-width="1.5"/>"#,
            cx - 6.0,
            cx + 6.0,
            cy - 6.0,
            cy + 6.0
        );
        let _ = writeln!(out, "  </g>");
    }
    out.push_str("</svg>\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn geojson(regions: &[AssignedRegion]) -> String {
    let features: Vec<Value> = regions
        .iter()
        .map(|r| {
            json!({
                "type": "Feature",
                "geometry": { "type": "Point", "coordinates": [r.x, r.y] },
                "properties": {
                    "region_id": r.region_id,
                    "population": r.population,
                    "aggregated_region_id": r.aggregated_region_id,
                    "fill": site_colour(r.aggregated_region_id),
                },
            })
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&json!({ "type": "FeatureCollection", "features": features }))
        .expect("geojson serializes");
    text.push('\n');
    text
}
