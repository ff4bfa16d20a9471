//! Well-log ingestion and geographic gridding.
//!
//! Records are `value lat lon [time]`, separated by commas or whitespace, one
//! per line. Lines starting with `#` and blank lines are skipped. Points are
//! placed on a plate-carrée grid whose row 0 is the southern edge.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Padding (degrees) applied on each side of a zero-width bounding-box axis.
pub const DEGENERATE_PAD_DEG: f64 = 1e-3;

/// Slack (degrees) when testing whether a point lies inside a grid box.
const BOX_SLACK_DEG: f64 = 1e-9;

/// One observation: a head/depth value at a geographic position.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidingPoint {
    pub value: f64,
    pub lat: f64,
    pub lon: f64,
    pub time_index: Option<u32>,
    /// `(row, col)` once located on a grid.
    pub cell: Option<(usize, usize)>,
    /// Number of raw records merged into this point.
    pub count: u32,
}

impl GuidingPoint {
    pub fn new(value: f64, lat: f64, lon: f64, time_index: Option<u32>) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite value {value}")));
        }
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::InvalidParameter(format!("latitude {lat} outside [-90, 90]")));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(Error::InvalidParameter(format!("longitude {lon} outside [-180, 180]")));
        }
        Ok(Self { value, lat, lon, time_index, cell: None, count: 1 })
    }

    /// A point given directly in grid coordinates (synthetic data, tests).
    pub fn at_cell(row: usize, col: usize, value: f64) -> Self {
        Self { value, lat: 0.0, lon: 0.0, time_index: None, cell: Some((row, col)), count: 1 }
    }
}

/// Latitude/longitude extent in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl GeoBox {
    pub fn lat_extent(&self) -> f64 {
        self.lat_max - self.lat_min
    }

    pub fn lon_extent(&self) -> f64 {
        self.lon_max - self.lon_min
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.lat_extent() > 0.0 && self.lon_extent() > 0.0)
    }

    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        lat >= self.lat_min - BOX_SLACK_DEG
            && lat <= self.lat_max + BOX_SLACK_DEG
            && lon >= self.lon_min - BOX_SLACK_DEG
            && lon <= self.lon_max + BOX_SLACK_DEG
    }
}

/// A [`GeoBox`] divided into `rows x cols` cells of `lat_det x lon_det` degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoGrid {
    pub bbox: GeoBox,
    pub lat_det: f64,
    pub lon_det: f64,
    pub rows: usize,
    pub cols: usize,
}

impl GeoGrid {
    pub fn new(bbox: GeoBox, lat_det: f64, lon_det: f64) -> Result<Self> {
        if bbox.is_degenerate() {
            return Err(Error::DegenerateBox);
        }
        if !(lat_det > 0.0 && lon_det > 0.0 && lat_det.is_finite() && lon_det.is_finite()) {
            return Err(Error::InvalidParameter("cell size must be positive".into()));
        }
        let rows = ceil_count(bbox.lat_extent() / lat_det);
        let cols = ceil_count(bbox.lon_extent() / lon_det);
        Ok(Self { bbox, lat_det, lon_det, rows, cols })
    }

    /// Latitude and longitude of a cell centre.
    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        (self.bbox.lat_min + (row as f64 + 0.5) * self.lat_det, self.bbox.lon_min + (col as f64 + 0.5) * self.lon_det)
    }

    fn index(offset: f64, det: f64, count: usize) -> usize {
        let raw = (offset / det).floor();
        if raw <= 0.0 {
            0
        } else {
            (raw as usize).min(count - 1)
        }
    }

    pub fn cell_of(&self, lat: f64, lon: f64) -> (usize, usize) {
        (
            Self::index(lat - self.bbox.lat_min, self.lat_det, self.rows),
            Self::index(lon - self.bbox.lon_min, self.lon_det, self.cols),
        )
    }
}

/// `ceil` that forgives round-off just above an integer; never below 1.
fn ceil_count(x: f64) -> usize {
    let c = (x - 1e-9 * x.abs().max(1.0)).ceil();
    if c < 1.0 {
        1
    } else {
        c as usize
    }
}

fn parse_error(line: usize, token: &str, message: impl Into<String>) -> Error {
    Error::Parse { line, token: token.to_string(), message: message.into() }
}

fn parse_real(line: usize, token: &str, what: &str) -> Result<f64> {
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(parse_error(line, token, format!("invalid {what}"))),
    }
}

/// Parses a well log. An empty or comment-only input yields an empty list.
pub fn parse_well_log(text: &str) -> Result<Vec<GuidingPoint>> {
    let mut points = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> =
            trimmed.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).collect();
        if tokens.len() < 3 {
            return Err(parse_error(line, trimmed, "expected `value lat lon [time]`"));
        }
        if tokens.len() > 4 {
            return Err(parse_error(line, tokens[4], "unexpected extra field"));
        }
        let value = parse_real(line, tokens[0], "value")?;
        let lat = parse_real(line, tokens[1], "latitude")?;
        if !(-90.0..=90.0).contains(&lat) {
            return Err(parse_error(line, tokens[1], "latitude outside [-90, 90]"));
        }
        let lon = parse_real(line, tokens[2], "longitude")?;
        if !(-180.0..=180.0).contains(&lon) {
            return Err(parse_error(line, tokens[2], "longitude outside [-180, 180]"));
        }
        let time_index = match tokens.get(3) {
            Some(t) => Some(t.parse::<u32>().map_err(|_| parse_error(line, t, "invalid time index"))?),
            None => None,
        };
        points.push(GuidingPoint::new(value, lat, lon, time_index)?);
    }
    Ok(points)
}

/// Writes points in the well-log format; `parse_well_log` reads it back exactly.
pub fn write_well_log(points: &[GuidingPoint]) -> String {
    let mut out = String::new();
    for p in points {
        let _ = write!(out, "{} {} {}", p.value, p.lat, p.lon);
        if let Some(t) = p.time_index {
            let _ = write!(out, " {t}");
        }
        out.push('\n');
    }
    out
}

/// Extent of the points, with zero-width axes padded by [`DEGENERATE_PAD_DEG`].
pub fn bounding_box(points: &[GuidingPoint]) -> Result<GeoBox> {
    bounding_box_with_pad(points, DEGENERATE_PAD_DEG)
}

pub fn bounding_box_with_pad(points: &[GuidingPoint], pad: f64) -> Result<GeoBox> {
    let first = points.first().ok_or(Error::EmptySamples)?;
    let mut b = GeoBox { lat_min: first.lat, lat_max: first.lat, lon_min: first.lon, lon_max: first.lon };
    for p in &points[1..] {
        b.lat_min = b.lat_min.min(p.lat);
        b.lat_max = b.lat_max.max(p.lat);
        b.lon_min = b.lon_min.min(p.lon);
        b.lon_max = b.lon_max.max(p.lon);
    }
    if b.lat_extent() == 0.0 {
        b.lat_min -= pad;
        b.lat_max += pad;
    }
    if b.lon_extent() == 0.0 {
        b.lon_min -= pad;
        b.lon_max += pad;
    }
    Ok(b)
}

/// Picks a square cell size (in degrees) so that `rows * cols` is the largest
/// product not exceeding `target_cells`.
pub fn determine_resolution(bbox: &GeoBox, target_cells: usize) -> Result<GeoGrid> {
    if target_cells < 4 {
        return Err(Error::InvalidParameter(format!("target cell count must be >= 4, got {target_cells}")));
    }
    if bbox.is_degenerate() || !bbox.lat_extent().is_finite() || !bbox.lon_extent().is_finite() {
        return Err(Error::DegenerateBox);
    }
    let (lat_ext, lon_ext) = (bbox.lat_extent(), bbox.lon_extent());
    let mut best: Option<(usize, f64)> = None;
    let mut consider = |det: f64| -> bool {
        let cells = ceil_count(lat_ext / det) * ceil_count(lon_ext / det);
        if cells > target_cells {
            return false;
        }
        if best.is_none_or(|(b, _)| cells > b) {
            best = Some((cells, det));
        }
        true
    };
    // cell counts grow monotonically as the cell shrinks, so each scan stops
    // at the first overshoot
    for rows in 1..=target_cells {
        if !consider(lat_ext / rows as f64) {
            break;
        }
    }
    for cols in 1..=target_cells {
        if !consider(lon_ext / cols as f64) {
            break;
        }
    }
    let (_, det) = best.ok_or(Error::DegenerateBox)?;
    GeoGrid::new(*bbox, det, det)
}

/// Assigns grid cells, merging points that share a cell and time index into
/// one point carrying their mean value and total count. Output keeps
/// first-occurrence order.
pub fn locate(points: &[GuidingPoint], grid: &GeoGrid) -> Result<Vec<GuidingPoint>> {
    let mut slots: HashMap<((usize, usize), Option<u32>), usize> = HashMap::new();
    let mut sums: Vec<(f64, f64, f64, u32)> = Vec::new();
    let mut out: Vec<GuidingPoint> = Vec::new();
    for (index, p) in points.iter().enumerate() {
        if !grid.bbox.contains(p.lat, p.lon) {
            return Err(Error::OutsideBox { index, lat: p.lat, lon: p.lon });
        }
        let cell = grid.cell_of(p.lat, p.lon);
        let w = p.count.max(1);
        let wf = w as f64;
        match slots.get(&(cell, p.time_index)) {
            Some(&k) => {
                let s = &mut sums[k];
                s.0 += p.value * wf;
                s.1 += p.lat * wf;
                s.2 += p.lon * wf;
                s.3 += w;
            }
            None => {
                slots.insert((cell, p.time_index), out.len());
                sums.push((p.value * wf, p.lat * wf, p.lon * wf, w));
                out.push(GuidingPoint { cell: Some(cell), count: w, ..p.clone() });
            }
        }
    }
    for (p, &(v, lat, lon, n)) in out.iter_mut().zip(&sums) {
        if n > p.count || n > 1 {
            let nf = n as f64;
            p.value = v / nf;
            p.lat = lat / nf;
            p.lon = lon / nf;
        }
        p.count = n;
    }
    Ok(out)
}

/// First pair of records at the same position and time with different values.
pub fn find_coincident_conflict(points: &[GuidingPoint]) -> Option<(usize, usize)> {
    let mut seen: HashMap<(u64, u64, Option<u32>), usize> = HashMap::new();
    for (k, p) in points.iter().enumerate() {
        match seen.get(&(p.lat.to_bits(), p.lon.to_bits(), p.time_index)) {
            Some(&first) if points[first].value != p.value => return Some((first, k)),
            Some(_) => {}
            None => {
                seen.insert((p.lat.to_bits(), p.lon.to_bits(), p.time_index), k);
            }
        }
    }
    None
}

/// Splits time-stamped points into snapshots. Time indices must appear in
/// non-decreasing order in the input; each run of equal indices is one snapshot.
pub fn group_by_time(points: &[GuidingPoint]) -> Result<Vec<(u32, Vec<GuidingPoint>)>> {
    let mut groups: Vec<(u32, Vec<GuidingPoint>)> = Vec::new();
    for (index, p) in points.iter().enumerate() {
        let t =
            p.time_index.ok_or_else(|| Error::InvalidParameter(format!("record {} has no time index", index + 1)))?;
        match groups.last_mut() {
            Some((last, members)) if *last == t => members.push(p.clone()),
            Some((last, _)) if *last > t => return Err(Error::UnsortedTimes { previous: *last, next: t }),
            _ => groups.push((t, vec![p.clone()])),
        }
    }
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(value: f64, lat: f64, lon: f64) -> GuidingPoint {
        GuidingPoint::new(value, lat, lon, None).unwrap()
    }

    #[test]
    fn parse_formats_and_errors() {
        let pts = parse_well_log("# header\n\n1.5, 36.6, -76.1\n2 36.7\t-76.2 30\n").unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0].time_index, None);
        assert_eq!(pts[1].time_index, Some(30));
        assert_eq!(pts[1].lon, -76.2);

        assert!(parse_well_log("").unwrap().is_empty());

        match parse_well_log("abc 36.6 -76.1") {
            Err(Error::Parse { line, token, .. }) => {
                assert_eq!(line, 1);
                assert_eq!(token, "abc");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_well_log("1 2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_well_log("#\n1 2 3 4 5"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_well_log("1 95 3"), Err(Error::Parse { token, .. }) if token == "95"));
        assert!(matches!(parse_well_log("1 5 3 -2"), Err(Error::Parse { token, .. }) if token == "-2"));
        assert!(matches!(parse_well_log("nan 5 3"), Err(Error::Parse { .. })));
    }

    #[test]
    fn box_and_degenerate_padding() {
        let b = bounding_box(&[pt(1.0, 10.0, 20.0)]).unwrap();
        assert_eq!(b.lat_min, 10.0 - DEGENERATE_PAD_DEG);
        assert_eq!(b.lon_max, 20.0 + DEGENERATE_PAD_DEG);
        assert!(!b.is_degenerate());
        assert!(matches!(bounding_box(&[]), Err(Error::EmptySamples)));

        // collinear along a meridian: only longitude gets padded
        let b = bounding_box(&[pt(1.0, 10.0, 20.0), pt(1.0, 11.0, 20.0)]).unwrap();
        assert_eq!((b.lat_min, b.lat_max), (10.0, 11.0));
        assert!(b.lon_extent() > 0.0);
    }

    #[test]
    fn resolution_examples() {
        let square = GeoBox { lat_min: 0.0, lat_max: 1.0, lon_min: 0.0, lon_max: 1.0 };
        let g = determine_resolution(&square, 100).unwrap();
        assert_eq!((g.rows, g.cols), (10, 10));

        let tall = GeoBox { lat_min: 0.0, lat_max: 2.0, lon_min: 0.0, lon_max: 1.0 };
        let g = determine_resolution(&tall, 200).unwrap();
        assert_eq!((g.rows, g.cols), (20, 10));

        assert!(determine_resolution(&square, 3).is_err());
        let flat = GeoBox { lat_min: 0.0, lat_max: 0.0, lon_min: 0.0, lon_max: 1.0 };
        assert!(matches!(determine_resolution(&flat, 100), Err(Error::DegenerateBox)));
    }

    #[test]
    fn locate_corners_and_merge() {
        let b = GeoBox { lat_min: 0.0, lat_max: 1.0, lon_min: 0.0, lon_max: 2.0 };
        let g = determine_resolution(&b, 50).unwrap();
        assert_eq!((g.rows, g.cols), (5, 10));
        let pts = [pt(4.0, 0.0, 0.0), pt(1.0, 1.0, 2.0), pt(6.0, 0.01, 0.01)];
        let located = locate(&pts, &g).unwrap();
        assert_eq!(located.len(), 2);
        assert_eq!(located[0].cell, Some((0, 0)));
        assert_eq!(located[0].value, 5.0);
        assert_eq!(located[0].count, 2);
        assert_eq!(located[1].cell, Some((4, 9)));
        assert_eq!(located[1].count, 1);

        assert!(matches!(locate(&[pt(1.0, 1.5, 0.5)], &g), Err(Error::OutsideBox { index: 0, .. })));
    }

    #[test]
    fn locate_keeps_times_apart() {
        let b = GeoBox { lat_min: 0.0, lat_max: 1.0, lon_min: 0.0, lon_max: 1.0 };
        let g = determine_resolution(&b, 4).unwrap();
        let a = GuidingPoint::new(1.0, 0.1, 0.1, Some(1)).unwrap();
        let c = GuidingPoint::new(3.0, 0.1, 0.1, Some(2)).unwrap();
        assert_eq!(locate(&[a, c], &g).unwrap().len(), 2);
    }

    #[test]
    fn conflicts_and_grouping() {
        let pts = [pt(1.0, 5.0, 5.0), pt(1.0, 5.0, 5.0), pt(2.0, 5.0, 5.0)];
        assert_eq!(find_coincident_conflict(&pts), Some((0, 2)));
        assert_eq!(find_coincident_conflict(&pts[..2]), None);

        let timed = parse_well_log("1 0 0 1\n2 0 1 1\n3 0 0 5\n").unwrap();
        let groups = group_by_time(&timed).unwrap();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].1.len(), 2);
        assert_eq!(groups[1].0, 5);

        let unsorted = parse_well_log("1 0 0 5\n2 0 1 1\n").unwrap();
        assert!(matches!(group_by_time(&unsorted), Err(Error::UnsortedTimes { previous: 5, next: 1 })));
        assert!(group_by_time(&[pt(1.0, 0.0, 0.0)]).is_err());
    }

    fn record() -> impl Strategy<Value = GuidingPoint> {
        (-1e6f64..1e6, -90f64..=90.0, -180f64..=180.0, proptest::option::of(0u32..1000))
            .prop_map(|(v, lat, lon, t)| GuidingPoint::new(v, lat, lon, t).unwrap())
    }

    proptest! {
        #[test]
        fn write_then_parse_is_identity(points in proptest::collection::vec(record(), 0..20)) {
            let text = write_well_log(&points);
            prop_assert_eq!(parse_well_log(&text).unwrap(), points);
        }

        #[test]
        fn located_points_are_in_range_and_monotone(
            points in proptest::collection::vec((0f64..10.0, 30f64..31.0, -77f64..-76.0), 1..30),
            target in 4usize..2000,
        ) {
            let pts: Vec<_> = points.iter().map(|&(v, lat, lon)| pt(v, lat, lon)).collect();
            let b = bounding_box(&pts).unwrap();
            for p in &pts {
                prop_assert!(b.contains(p.lat, p.lon));
            }
            let g = determine_resolution(&b, target).unwrap();
            prop_assert!(g.rows * g.cols <= target);
            let located = locate(&pts, &g).unwrap();
            prop_assert!(located.len() <= pts.len());
            prop_assert_eq!(located.iter().map(|p| p.count).sum::<u32>() as usize, pts.len());
            for p in &located {
                let (i, j) = p.cell.unwrap();
                prop_assert!(i < g.rows && j < g.cols);
            }
            let mut by_lat = pts.clone();
            by_lat.sort_by(|a, b| a.lat.total_cmp(&b.lat));
            let rows: Vec<usize> = by_lat.iter().map(|p| g.cell_of(p.lat, p.lon).0).collect();
            prop_assert!(rows.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
