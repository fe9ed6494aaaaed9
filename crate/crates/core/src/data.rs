//! Point datasets, rectangles and raster grids shared by every audit.
//!
//! Coordinates are planar and distances Euclidean; real data has to be
//! projected before it gets here. Raster cells are half-open
//! `[lo, lo + cell_size)` on both axes, except that a point lying exactly on
//! the far edge of the whole grid falls into the last row/column. Cells that
//! hold no value are `None`, never a sentinel number.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One georeferenced record. Attribute values are stored in the column order
/// of the owning [`PointDataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub x: f64,
    pub y: f64,
    pub values: Vec<f64>,
    pub group: Option<String>,
}

/// A set of points that all carry the same named numeric attributes and an
/// optional group label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointDataset {
    attr_names: Vec<String>,
    records: Vec<PointRecord>,
}

impl PointDataset {
    pub fn new(attr_names: Vec<String>, records: Vec<PointRecord>) -> Result<Self> {
        for (i, name) in attr_names.iter().enumerate() {
            if attr_names[..i].contains(name) {
                return Err(Error::param(format!("duplicate attribute name `{name}`")));
            }
        }
        for (row, rec) in records.iter().enumerate() {
            if !rec.x.is_finite() || !rec.y.is_finite() {
                return Err(Error::param(format!("record {row} has non-finite coordinates")));
            }
            if rec.values.len() != attr_names.len() {
                return Err(Error::param(format!(
                    "record {row} has {} attribute values, expected {}",
                    rec.values.len(),
                    attr_names.len()
                )));
            }
            if matches!(&rec.group, Some(g) if g.is_empty()) {
                return Err(Error::param(format!("record {row} has an empty group label")));
            }
        }
        Ok(Self { attr_names, records })
    }

    /// Builds a dataset from `(x, y, attrs, group)` tuples with attribute maps.
    pub fn from_maps<I>(records: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64, BTreeMap<String, f64>, Option<String>)>,
    {
        let mut names: Option<Vec<String>> = None;
        let mut out = Vec::new();
        for (x, y, attrs, group) in records {
            let keys: Vec<String> = attrs.keys().cloned().collect();
            match &names {
                None => names = Some(keys),
                Some(n) if *n != keys => {
                    return Err(Error::param("records have differing attribute sets"));
                }
                _ => {}
            }
            out.push(PointRecord {
                x,
                y,
                values: attrs.into_values().collect(),
                group,
            });
        }
        Self::new(names.unwrap_or_default(), out)
    }

    pub fn attr_names(&self) -> &[String] {
        &self.attr_names
    }

    pub fn records(&self) -> &[PointRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn attr_index(&self, name: &str) -> Result<usize> {
        self.attr_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Schema {
                column: name.to_string(),
            })
    }

    /// Values of an attribute, or of the coordinates when `name` is `x`/`y`
    /// and no attribute shadows it.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        if let Ok(idx) = self.attr_index(name) {
            return Ok(self.records.iter().map(|r| r.values[idx]).collect());
        }
        match name {
            "x" => Ok(self.records.iter().map(|r| r.x).collect()),
            "y" => Ok(self.records.iter().map(|r| r.y).collect()),
            _ => Err(Error::Schema {
                column: name.to_string(),
            }),
        }
    }

    pub fn coords(&self) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.x, r.y)).collect()
    }

    /// Records whose group label equals `label`.
    pub fn filter_group(&self, label: &str) -> PointDataset {
        PointDataset {
            attr_names: self.attr_names.clone(),
            records: self
                .records
                .iter()
                .filter(|r| r.group.as_deref() == Some(label))
                .cloned()
                .collect(),
        }
    }

    /// Applies `f` to every coordinate pair.
    pub fn map_coords(&self, f: impl Fn(f64, f64) -> (f64, f64)) -> Result<PointDataset> {
        let records = self
            .records
            .iter()
            .map(|r| {
                let (x, y) = f(r.x, r.y);
                PointRecord { x, y, ..r.clone() }
            })
            .collect();
        PointDataset::new(self.attr_names.clone(), records)
    }
}

/// Axis-aligned rectangle with inclusive bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Result<Self> {
        if !(min_x <= max_x && min_y <= max_y) {
            return Err(Error::param(format!(
                "rect bounds out of order: ({min_x}, {min_y}) .. ({max_x}, {max_y})"
            )));
        }
        Ok(Self {
            min_x,
            min_y,
            max_x,
            max_y,
        })
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.min_x + self.max_x),
            0.5 * (self.min_y + self.max_y),
        )
    }
}

pub fn bounding_box(d: &PointDataset) -> Result<Rect> {
    let first = d
        .records
        .first()
        .ok_or_else(|| Error::EmptyInput("bounding box of an empty dataset".into()))?;
    let mut r = Rect {
        min_x: first.x,
        min_y: first.y,
        max_x: first.x,
        max_y: first.y,
    };
    for p in &d.records[1..] {
        r.min_x = r.min_x.min(p.x);
        r.min_y = r.min_y.min(p.y);
        r.max_x = r.max_x.max(p.x);
        r.max_y = r.max_y.max(p.y);
    }
    Ok(r)
}

/// Layout of a regular grid. Row 0 sits at `origin_y`; cells are stored
/// row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin_x: f64,
    pub origin_y: f64,
    pub cell_size: f64,
    pub width: usize,
    pub height: usize,
}

impl GridSpec {
    pub fn new(origin_x: f64, origin_y: f64, cell_size: f64, width: usize, height: usize) -> Result<Self> {
        let spec = Self {
            origin_x,
            origin_y,
            cell_size,
            width,
            height,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return Err(Error::param(format!("cell_size must be positive, got {}", self.cell_size)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::param("grid width and height must be positive"));
        }
        if !self.origin_x.is_finite() || !self.origin_y.is_finite() {
            return Err(Error::param("grid origin must be finite"));
        }
        Ok(())
    }

    /// Smallest grid anchored at the rectangle's lower-left corner that covers it.
    pub fn covering(rect: &Rect, cell_size: f64) -> Result<Self> {
        let w = ((rect.width() / cell_size).ceil() as usize).max(1);
        let h = ((rect.height() / cell_size).ceil() as usize).max(1);
        Self::new(rect.min_x, rect.min_y, cell_size, w, h)
    }

    /// Grid whose cell centres land on a lattice of spacing `cell_size` that
    /// starts at the rectangle's lower-left corner.
    pub fn centered_on(rect: &Rect, cell_size: f64) -> Result<Self> {
        let w = (rect.width() / cell_size).round() as usize + 1;
        let h = (rect.height() / cell_size).round() as usize + 1;
        Self::new(
            rect.min_x - 0.5 * cell_size,
            rect.min_y - 0.5 * cell_size,
            cell_size,
            w,
            h,
        )
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn extent(&self) -> Rect {
        Rect {
            min_x: self.origin_x,
            min_y: self.origin_y,
            max_x: self.origin_x + self.width as f64 * self.cell_size,
            max_y: self.origin_y + self.height as f64 * self.cell_size,
        }
    }

    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.width + col
    }

    pub fn col_row(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    pub fn cell_center(&self, col: usize, row: usize) -> (f64, f64) {
        (
            self.origin_x + (col as f64 + 0.5) * self.cell_size,
            self.origin_y + (row as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn centers(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.len()).map(move |i| {
            let (c, r) = self.col_row(i);
            self.cell_center(c, r)
        })
    }

    /// Cell containing a point, or `None` when it falls outside the grid.
    pub fn locate(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let col = axis_bin(x, self.origin_x, self.cell_size, self.width)?;
        let row = axis_bin(y, self.origin_y, self.cell_size, self.height)?;
        Some((col, row))
    }

    /// Same layout shifted by `(dx, dy)`.
    pub fn translated(&self, dx: f64, dy: f64) -> GridSpec {
        GridSpec {
            origin_x: self.origin_x + dx,
            origin_y: self.origin_y + dy,
            ..*self
        }
    }
}

fn axis_bin(v: f64, origin: f64, cell: f64, n: usize) -> Option<usize> {
    let max = origin + n as f64 * cell;
    if !(v >= origin && v <= max) {
        return None;
    }
    let k = ((v - origin) / cell).floor() as usize;
    Some(k.min(n - 1))
}

/// Regular grid of optional scalar values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterGrid {
    pub spec: GridSpec,
    values: Vec<Option<f64>>,
}

impl RasterGrid {
    pub fn new(spec: GridSpec, values: Vec<Option<f64>>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.len() {
            return Err(Error::param(format!(
                "raster has {} values for a {}x{} grid",
                values.len(),
                spec.width,
                spec.height
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::param("raster values must be finite or no-data"));
        }
        Ok(Self { spec, values })
    }

    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        Self::new(spec, values.into_iter().map(Some).collect())
    }

    pub fn filled(spec: GridSpec, value: Option<f64>) -> Result<Self> {
        Self::new(spec, vec![value; spec.len()])
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn get(&self, col: usize, row: usize) -> Option<f64> {
        self.values[self.spec.index(col, row)]
    }

    pub fn width(&self) -> usize {
        self.spec.width
    }

    pub fn height(&self) -> usize {
        self.spec.height
    }

    pub fn valid_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().copied()
    }

    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    /// `(min, max)` over valid cells.
    pub fn min_max(&self) -> Option<(f64, f64)> {
        self.valid_values().fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }

    /// Min-max rescales valid cells to `[0, 1]`; a constant surface maps to 0.5.
    pub fn normalized(&self) -> RasterGrid {
        let values = match self.min_max() {
            None => self.values.clone(),
            Some((lo, hi)) => {
                let span = hi - lo;
                self.values
                    .iter()
                    .map(|v| v.map(|v| if span > 0.0 { (v - lo) / span } else { 0.5 }))
                    .collect()
            }
        };
        RasterGrid {
            spec: self.spec,
            values,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<RasterGrid> {
        RasterGrid::new(self.spec, self.values.iter().map(|v| v.map(&f)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregator {
    Mean,
    Sum,
    Count,
}

/// Bins points into `grid` and aggregates `attr` per cell. Points outside
/// the grid are ignored. Empty cells are no-data for `Mean` and zero for
/// `Sum`/`Count`.
pub fn rasterize(d: &PointDataset, attr: &str, grid: &GridSpec, aggregator: Aggregator) -> Result<RasterGrid> {
    grid.validate()?;
    let values = d.column(attr)?;
    let mut sum = vec![0.0; grid.len()];
    let mut count = vec![0usize; grid.len()];
    for (rec, v) in d.records.iter().zip(values) {
        if let Some((c, r)) = grid.locate(rec.x, rec.y) {
            let i = grid.index(c, r);
            sum[i] += v;
            count[i] += 1;
        }
    }
    let cells = sum
        .into_iter()
        .zip(count)
        .map(|(s, n)| match aggregator {
            Aggregator::Sum => Some(s),
            Aggregator::Count => Some(n as f64),
            Aggregator::Mean => (n > 0).then(|| s / n as f64),
        })
        .collect();
    RasterGrid::new(*grid, cells)
}

/// Column mapping for [`load_points_csv`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub x: String,
    pub y: String,
    #[serde(default)]
    pub attrs: Vec<String>,
    #[serde(default)]
    pub group: Option<String>,
}

impl CsvSchema {
    pub fn new(x: &str, y: &str, attrs: &[&str], group: Option<&str>) -> Self {
        Self {
            x: x.into(),
            y: y.into(),
            attrs: attrs.iter().map(|s| s.to_string()).collect(),
            group: group.map(Into::into),
        }
    }
}

fn parse_cell(raw: &str, row: usize, column: &str) -> Result<f64> {
    let t = raw.trim();
    t.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse {
            row,
            column: column.to_string(),
            value: raw.to_string(),
        })
}

/// Reads a comma-separated point file with a header row. Row numbers in
/// parse errors count the header as row 1.
pub fn load_points_csv<R: Read>(source: R, schema: &CsvSchema) -> Result<PointDataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::Schema {
            column: name.to_string(),
        })
    };
    let xi = find(&schema.x)?;
    let yi = find(&schema.y)?;
    let attr_idx = schema.attrs.iter().map(|a| find(a)).collect::<Result<Vec<_>>>()?;
    let group_idx = schema.group.as_deref().map(find).transpose()?;

    let mut records = Vec::new();
    for (k, row) in reader.records().enumerate() {
        let row = row?;
        let line = k + 2;
        let cell = |i: usize| row.get(i).unwrap_or("");
        let x = parse_cell(cell(xi), line, &schema.x)?;
        let y = parse_cell(cell(yi), line, &schema.y)?;
        let values = attr_idx
            .iter()
            .zip(&schema.attrs)
            .map(|(&i, name)| parse_cell(cell(i), line, name))
            .collect::<Result<Vec<_>>>()?;
        let group = group_idx.map(|i| cell(i).trim().to_string()).filter(|g| !g.is_empty());
        records.push(PointRecord { x, y, values, group });
    }
    if records.is_empty() {
        return Err(Error::EmptyInput("CSV contains no data rows".into()));
    }
    PointDataset::new(schema.attrs.clone(), records)
}

/// Writes `x,y,<attrs...>[,group]`. Floats use the shortest representation
/// that parses back to the same value.
pub fn write_points_csv<W: Write>(sink: W, d: &PointDataset) -> Result<()> {
    let has_group = d.records.iter().any(|r| r.group.is_some());
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["x".to_string(), "y".to_string()];
    header.extend(d.attr_names.iter().cloned());
    if has_group {
        header.push("group".into());
    }
    w.write_record(&header)?;
    for r in &d.records {
        let mut row = vec![r.x.to_string(), r.y.to_string()];
        row.extend(r.values.iter().map(|v| v.to_string()));
        if has_group {
            row.push(r.group.clone().unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv sink>", e))?;
    Ok(())
}

/// Reads a GeoJSON `FeatureCollection` of `Point` features. Listed numeric
/// properties become attributes; `group` names an optional label property.
pub fn load_points_geojson<R: Read>(source: R, attrs: &[String], group: Option<&str>) -> Result<PointDataset> {
    let doc: serde_json::Value = serde_json::from_reader(source)?;
    let features = doc
        .get("features")
        .and_then(|f| f.as_array())
        .ok_or_else(|| Error::param("GeoJSON document has no `features` array"))?;
    let mut records = Vec::with_capacity(features.len());
    for (row, feat) in features.iter().enumerate() {
        let geom = &feat["geometry"];
        if geom["type"] != "Point" {
            return Err(Error::param(format!("feature {row} is not a Point")));
        }
        let coords = geom["coordinates"]
            .as_array()
            .filter(|c| c.len() >= 2)
            .ok_or_else(|| Error::param(format!("feature {row} has malformed coordinates")))?;
        let num = |v: &serde_json::Value, column: &str| {
            v.as_f64().ok_or_else(|| Error::Parse {
                row,
                column: column.to_string(),
                value: v.to_string(),
            })
        };
        let x = num(&coords[0], "x")?;
        let y = num(&coords[1], "y")?;
        let props = &feat["properties"];
        let values = attrs
            .iter()
            .map(|a| match props.get(a) {
                None => Err(Error::Schema { column: a.clone() }),
                Some(v) => num(v, a),
            })
            .collect::<Result<Vec<_>>>()?;
        let group = match group {
            None => None,
            Some(key) => match props.get(key) {
                None | Some(serde_json::Value::Null) => None,
                Some(serde_json::Value::String(s)) => Some(s.clone()).filter(|s| !s.is_empty()),
                Some(other) => Some(other.to_string()),
            },
        };
        records.push(PointRecord { x, y, values, group });
    }
    if records.is_empty() {
        return Err(Error::EmptyInput("GeoJSON contains no features".into()));
    }
    PointDataset::new(attrs.to_vec(), records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(points: &[(f64, f64)]) -> PointDataset {
        PointDataset::new(
            vec!["v".into()],
            points
                .iter()
                .map(|&(x, y)| PointRecord {
                    x,
                    y,
                    values: vec![1.0],
                    group: None,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn parses_small_csv() {
        let d = load_points_csv("x,y,v\n0,0,1\n1,1,2".as_bytes(), &CsvSchema::new("x", "y", &["v"], None)).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.column("v").unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn header_only_is_empty_input() {
        let err = load_points_csv("x,y,v\n".as_bytes(), &CsvSchema::new("x", "y", &["v"], None)).unwrap_err();
        assert!(matches!(err, Error::EmptyInput(_)));
    }

    #[test]
    fn missing_column_is_named() {
        let err = load_points_csv("x,y\n0,0\n".as_bytes(), &CsvSchema::new("x", "y", &["v"], None)).unwrap_err();
        assert!(matches!(err, Error::Schema { column } if column == "v"));
    }

    #[test]
    fn non_numeric_cell_reports_row() {
        let err = load_points_csv("x,y,v\n0,0,1\n1,1,abc\n".as_bytes(), &CsvSchema::new("x", "y", &["v"], None))
            .unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }), "{err}");
    }

    #[test]
    fn group_column_is_read() {
        let d = load_points_csv(
            "x,y,g\n0,0,A\n1,1,B\n".as_bytes(),
            &CsvSchema::new("x", "y", &[], Some("g")),
        )
        .unwrap();
        assert_eq!(d.records()[1].group.as_deref(), Some("B"));
    }

    #[test]
    fn bounding_box_cases() {
        let b = bounding_box(&ds(&[(0.0, 0.0), (2.0, 3.0)])).unwrap();
        assert_eq!(b, Rect::new(0.0, 0.0, 2.0, 3.0).unwrap());
        let b = bounding_box(&ds(&[(5.0, 5.0)])).unwrap();
        assert_eq!(b, Rect::new(5.0, 5.0, 5.0, 5.0).unwrap());
        assert!(matches!(bounding_box(&ds(&[])), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn rasterize_single_point_mean() {
        let d = PointDataset::new(
            vec!["v".into()],
            vec![PointRecord {
                x: 0.5,
                y: 0.5,
                values: vec![7.0],
                group: None,
            }],
        )
        .unwrap();
        let g = GridSpec::new(0.0, 0.0, 1.0, 1, 1).unwrap();
        let r = rasterize(&d, "v", &g, Aggregator::Mean).unwrap();
        assert_eq!(r.get(0, 0), Some(7.0));
    }

    #[test]
    fn rasterize_empty_count_is_zero_and_mean_is_nodata() {
        let d = ds(&[]);
        let g = GridSpec::new(0.0, 0.0, 1.0, 3, 2).unwrap();
        let c = rasterize(&d, "v", &g, Aggregator::Count).unwrap();
        assert!(c.values().iter().all(|v| *v == Some(0.0)));
        let m = rasterize(&d, "v", &g, Aggregator::Mean).unwrap();
        assert!(m.values().iter().all(|v| v.is_none()));
    }

    #[test]
    fn rasterize_unknown_attr() {
        let g = GridSpec::new(0.0, 0.0, 1.0, 1, 1).unwrap();
        assert!(matches!(
            rasterize(&ds(&[(0.0, 0.0)]), "nope", &g, Aggregator::Sum),
            Err(Error::Schema { .. })
        ));
    }

    #[test]
    fn far_edge_goes_to_last_cell() {
        let g = GridSpec::new(0.0, 0.0, 1.0, 4, 4).unwrap();
        assert_eq!(g.locate(4.0, 4.0), Some((3, 3)));
        assert_eq!(g.locate(1.0, 0.0), Some((1, 0)));
        assert_eq!(g.locate(4.0000001, 0.0), None);
    }

    #[test]
    fn geojson_points() {
        let doc = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","geometry":{"type":"Point","coordinates":[1.5,2.0]},"properties":{"v":3,"g":"A"}}]}"#;
        let d = load_points_geojson(doc.as_bytes(), &["v".into()], Some("g")).unwrap();
        assert_eq!(d.records()[0].x, 1.5);
        assert_eq!(d.column("v").unwrap(), vec![3.0]);
        assert_eq!(d.records()[0].group.as_deref(), Some("A"));
    }

    #[test]
    fn rejects_empty_group_label_and_bad_coords() {
        let rec = |g: Option<&str>, x: f64| PointRecord {
            x,
            y: 0.0,
            values: vec![],
            group: g.map(Into::into),
        };
        assert!(PointDataset::new(vec![], vec![rec(Some(""), 0.0)]).is_err());
        assert!(PointDataset::new(vec![], vec![rec(None, f64::NAN)]).is_err());
    }

    #[test]
    fn normalized_constant_surface_is_half() {
        let g = GridSpec::new(0.0, 0.0, 1.0, 2, 1).unwrap();
        let r = RasterGrid::from_values(g, vec![3.0, 3.0]).unwrap().normalized();
        assert_eq!(r.values(), &[Some(0.5), Some(0.5)]);
    }
}
