use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{CoordinateSource, InitialRegion, Point2D};

/// One region as read from disk, before coordinates are resolved.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RegionFileRow {
    pub region_id: String,
    pub x: Option<f64>,
    pub y: Option<f64>,
    /// Polygons, each a list of rings; the first ring of a polygon is its
    /// exterior, the rest are holes.
    pub polygon: Option<Vec<Vec<Vec<Point2D>>>>,
    pub population: Option<u64>,
    pub group_label: Option<String>,
}

#[derive(Deserialize)]
struct CsvRow {
    region_id: String,
    #[serde(default)]
    x: Option<f64>,
    #[serde(default)]
    y: Option<f64>,
    #[serde(default)]
    population: Option<u64>,
    #[serde(default)]
    group: Option<String>,
}

/// Reads `regions.csv` (`region_id,x,y,population,group`, the last two
/// optional) or a GeoJSON FeatureCollection when the extension is
/// `.geojson` / `.json`.
pub fn load_regions(path: impl AsRef<Path>, coordinate_source: CoordinateSource) -> Result<Vec<InitialRegion>> {
    let path = path.as_ref();
    let rows = if is_geojson(path) {
        read_geojson_rows(path)?
    } else {
        read_csv_rows(path)?
    };
    resolve_regions(rows, coordinate_source).map_err(|e| match e {
        Error::Validation(m) => Error::parse(path, m),
        other => other,
    })
}

fn is_geojson(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("geojson" | "json")
    )
}

pub fn read_csv_rows(path: &Path) -> Result<Vec<RegionFileRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(BufReader::new(file));
    let mut rows = Vec::new();
    for row in reader.deserialize::<CsvRow>() {
        let row = row.map_err(|e| Error::parse(path, e.to_string()))?;
        rows.push(RegionFileRow {
            region_id: row.region_id,
            x: row.x,
            y: row.y,
            polygon: None,
            population: row.population,
            group_label: row.group.filter(|g| !g.is_empty()),
        });
    }
    Ok(rows)
}

pub fn read_geojson_rows(path: &Path) -> Result<Vec<RegionFileRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let doc: Value = serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::parse(path, e.to_string()))?;
    parse_feature_collection(&doc).map_err(|m| Error::parse(path, m))
}

fn parse_feature_collection(doc: &Value) -> std::result::Result<Vec<RegionFileRow>, String> {
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err("expected a GeoJSON FeatureCollection".into());
    }
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or("FeatureCollection has no `features` array")?;

    features
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let props = f.get("properties").cloned().unwrap_or(Value::Null);
            let region_id = match props.get("region_id") {
                Some(Value::String(s)) => s.clone(),
                Some(Value::Number(n)) => n.to_string(),
                _ => return Err(format!("feature {i}: missing `region_id` property")),
            };
            let num = |key: &str| props.get(key).and_then(Value::as_f64);
            let mut row = RegionFileRow {
                region_id,
                x: num("x"),
                y: num("y"),
                population: props.get("population").and_then(Value::as_u64),
                group_label: props.get("group").and_then(Value::as_str).map(str::to_string),
                polygon: None,
            };
            let geometry = f.get("geometry").filter(|g| !g.is_null());
            if let Some(g) = geometry {
                let coords = g.get("coordinates");
                match g.get("type").and_then(Value::as_str) {
                    Some("Point") => {
                        let p = coords
                            .and_then(position)
                            .ok_or_else(|| format!("feature {i}: malformed Point"))?;
                        row.x = row.x.or(Some(p.x));
                        row.y = row.y.or(Some(p.y));
                    }
                    Some("Polygon") => {
                        let poly = coords.and_then(polygon).ok_or_else(|| format!("feature {i}: malformed Polygon"))?;
                        row.polygon = Some(vec![poly]);
                    }
                    Some("MultiPolygon") => {
                        let polys = coords
                            .and_then(Value::as_array)
                            .and_then(|a| a.iter().map(polygon).collect::<Option<Vec<_>>>())
                            .ok_or_else(|| format!("feature {i}: malformed MultiPolygon"))?;
                        row.polygon = Some(polys);
                    }
                    other => return Err(format!("feature {i}: unsupported geometry type {other:?}")),
                }
            }
            Ok(row)
        })
        .collect()
}

fn position(v: &Value) -> Option<Point2D> {
    let a = v.as_array()?;
    Some(Point2D::new(a.first()?.as_f64()?, a.get(1)?.as_f64()?))
}

fn polygon(v: &Value) -> Option<Vec<Vec<Point2D>>> {
    v.as_array()?
        .iter()
        .map(|ring| ring.as_array()?.iter().map(position).collect())
        .collect()
}

/// Resolves each row's point and checks id uniqueness and finiteness.
pub fn resolve_regions(rows: Vec<RegionFileRow>, coordinate_source: CoordinateSource) -> Result<Vec<InitialRegion>> {
    let mut seen = HashSet::with_capacity(rows.len());
    let mut regions = Vec::with_capacity(rows.len());
    for row in rows {
        if !seen.insert(row.region_id.clone()) {
            return Err(Error::Validation(format!("duplicate region id `{}`", row.region_id)));
        }
        let point = match coordinate_source {
            CoordinateSource::Provided => match (row.x, row.y) {
                (Some(x), Some(y)) => Point2D::new(x, y),
                _ => {
                    return Err(Error::Validation(format!(
                        "region `{}` has no x/y coordinates",
                        row.region_id
                    )))
                }
            },
            CoordinateSource::PolygonCentroid => match &row.polygon {
                Some(polys) => multipolygon_centroid(polys).unwrap_or_else(|| {
                    log::warn!(
                        "region `{}` has a zero-area polygon; using the mean of its vertices",
                        row.region_id
                    );
                    vertex_mean(polys)
                }),
                None => {
                    return Err(Error::Validation(format!(
                        "region `{}` has no polygon to take a centroid of",
                        row.region_id
                    )))
                }
            },
        };
        if !point.is_finite() {
            return Err(Error::Validation(format!("region `{}` has non-finite coordinates", row.region_id)));
        }
        regions.push(InitialRegion {
            id: row.region_id,
            point,
            population: row.population.unwrap_or(0),
            group: row.group_label,
        });
    }
    Ok(regions)
}

/// Signed shoelace area and first moments of one ring, relative to `origin`.
fn ring_moments(ring: &[Point2D], origin: Point2D) -> (f64, f64, f64) {
    let (mut a2, mut mx, mut my) = (0.0, 0.0, 0.0);
    for (i, p) in ring.iter().enumerate() {
        let q = ring[(i + 1) % ring.len()];
        let (x0, y0) = (p.x - origin.x, p.y - origin.y);
        let (x1, y1) = (q.x - origin.x, q.y - origin.y);
        let cross = x0 * y1 - x1 * y0;
        a2 += cross;
        mx += (x0 + x1) * cross;
        my += (y0 + y1) * cross;
    }
    (a2 / 2.0, mx / 6.0, my / 6.0)
}

/// Area-weighted centroid of a ring, `None` for zero area.
pub fn polygon_centroid(ring: &[Point2D]) -> Option<Point2D> {
    multipolygon_centroid(&[vec![ring.to_vec()]])
}

/// Area-weighted centroid of polygons with holes. Exterior rings add area and
/// holes subtract it whatever their winding. `None` when the net area is zero.
pub fn multipolygon_centroid(polygons: &[Vec<Vec<Point2D>>]) -> Option<Point2D> {
    let origin = *polygons.first()?.first()?.first()?;
    let (mut area, mut mx, mut my) = (0.0, 0.0, 0.0);
    let mut extent: f64 = 0.0;
    for poly in polygons {
        for (ri, ring) in poly.iter().enumerate() {
            if ring.len() < 3 {
                continue;
            }
            for p in ring {
                extent = extent.max((p.x - origin.x).abs()).max((p.y - origin.y).abs());
            }
            let (a, x, y) = ring_moments(ring, origin);
            let sign = if (a >= 0.0) == (ri == 0) { 1.0 } else { -1.0 };
            area += sign * a;
            mx += sign * x;
            my += sign * y;
        }
    }
    if area.abs() <= f64::EPSILON * extent * extent || area == 0.0 {
        return None;
    }
    Some(Point2D::new(origin.x + mx / area, origin.y + my / area))
}

/// Mean of the distinct exterior vertices (closing duplicate dropped).
fn vertex_mean(polygons: &[Vec<Vec<Point2D>>]) -> Point2D {
    let vertices: Vec<Point2D> = polygons
        .iter()
        .filter_map(|p| p.first())
        .flat_map(|ring| {
            let n = if ring.len() > 1 && ring.first() == ring.last() {
                ring.len() - 1
            } else {
                ring.len()
            };
            ring[..n].iter().copied()
        })
        .collect();
    Point2D::mean(&vertices).unwrap_or(Point2D::new(f64::NAN, f64::NAN))
}

/// Writes `region_id,x,y,population,group`.
pub fn write_regions_csv(path: impl AsRef<Path>, regions: &[InitialRegion]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("region_id,x,y,population,group\n");
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in regions {
        writer
            .write_record([
                r.id.as_str(),
                &r.point.x.to_string(),
                &r.point.y.to_string(),
                &r.population.to_string(),
                r.group.as_deref().unwrap_or(""),
            ])
            .map_err(|e| Error::parse(path, e.to_string()))?;
    }
    out.push_str(&String::from_utf8(writer.into_inner().expect("in-memory writer")).expect("utf-8 input"));
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}
