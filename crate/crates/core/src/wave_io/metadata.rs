use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::{Error, Result};

/// Duration of one label frame.
pub const LABEL_FRAME_SECONDS: f64 = 0.1;

/// How the distance column of a metadata file is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceUnit {
    Meters,
    Centimeters,
    /// Centimeters when every distance in the file exceeds 50, meters otherwise.
    #[default]
    Auto,
}

impl FromStr for DistanceUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "m" => Ok(DistanceUnit::Meters),
            "cm" => Ok(DistanceUnit::Centimeters),
            "auto" => Ok(DistanceUnit::Auto),
            other => Err(Error::param(
                "distance_unit",
                format!("expected m, cm or auto, got `{other}`"),
            )),
        }
    }
}

impl std::fmt::Display for DistanceUnit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DistanceUnit::Meters => "m",
            DistanceUnit::Centimeters => "cm",
            DistanceUnit::Auto => "auto",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    /// Label frame index at 100 ms resolution.
    pub frame: u32,
    pub class_id: usize,
    pub source_id: i64,
    /// Degrees in [-180, 180).
    pub azimuth_deg: f64,
    /// Degrees in [-90, 90].
    pub elevation_deg: f64,
    /// Meters, strictly positive.
    pub distance_m: f64,
}

/// Events of one clip in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventList {
    pub events: Vec<Event>,
    /// Whether the source file carried an elevation column.
    pub has_elevation: bool,
}

impl EventList {
    pub fn new(events: Vec<Event>, has_elevation: bool) -> Self {
        EventList {
            events,
            has_elevation,
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Event> {
        self.events.iter()
    }
}

/// Maps any finite azimuth into [-180, 180). Values already in range are
/// returned bit-for-bit.
pub fn wrap_azimuth(az: f64) -> f64 {
    if (-180.0..180.0).contains(&az) {
        az
    } else {
        (az + 180.0).rem_euclid(360.0) - 180.0
    }
}

fn field<T: FromStr>(raw: &str, name: &str, path: &Path, line: usize) -> Result<T> {
    raw.trim().parse().map_err(|_| Error::Metadata {
        path: path.to_path_buf(),
        line,
        message: format!("non-numeric {name} field `{}`", raw.trim()),
    })
}

/// Parses metadata text. `path` is only used in error messages.
pub fn parse_metadata(text: &str, unit: DistanceUnit, path: &Path) -> Result<EventList> {
    let err = |line: usize, message: String| Error::Metadata {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut events = Vec::new();
    let mut columns: Option<usize> = None;
    let mut seen = HashSet::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 && cols.len() != 6 {
            return Err(err(
                line_no,
                format!("expected 5 or 6 columns, found {}", cols.len()),
            ));
        }
        match columns {
            None => columns = Some(cols.len()),
            Some(c) if c != cols.len() => {
                return Err(err(
                    line_no,
                    format!("found {} columns after earlier rows with {c}", cols.len()),
                ))
            }
            _ => {}
        }
        let frame: u32 = field(cols[0], "frame", path, line_no)?;
        let class_id: usize = field(cols[1], "class", path, line_no)?;
        let source_id: i64 = field(cols[2], "source", path, line_no)?;
        let azimuth: f64 = field(cols[3], "azimuth", path, line_no)?;
        let (elevation, distance): (f64, f64) = if cols.len() == 6 {
            (
                field(cols[4], "elevation", path, line_no)?,
                field(cols[5], "distance", path, line_no)?,
            )
        } else {
            (0.0, field(cols[4], "distance", path, line_no)?)
        };

        if !azimuth.is_finite() {
            return Err(err(line_no, format!("azimuth {azimuth} outside [-180, 180)")));
        }
        // `+ 0.0` folds -0 into +0 so azimuth negation stays an involution.
        let azimuth_deg = wrap_azimuth(azimuth) + 0.0;
        if !(-180.0..180.0).contains(&azimuth_deg) {
            return Err(err(line_no, format!("azimuth {azimuth} outside [-180, 180)")));
        }
        if !(-90.0..=90.0).contains(&elevation) {
            return Err(err(line_no, format!("elevation {elevation} outside [-90, 90]")));
        }
        if !distance.is_finite() {
            return Err(err(line_no, format!("non-finite distance {distance}")));
        }
        if distance < 0.0 {
            return Err(err(line_no, format!("negative distance {distance}")));
        }
        if distance == 0.0 {
            return Err(err(line_no, "distance must be positive".to_string()));
        }
        if !seen.insert((frame, class_id, source_id)) {
            return Err(err(
                line_no,
                format!("duplicate event (frame {frame}, class {class_id}, source {source_id})"),
            ));
        }
        events.push(Event {
            frame,
            class_id,
            source_id,
            azimuth_deg,
            elevation_deg: elevation,
            distance_m: distance,
        });
    }

    let centimeters = match unit {
        DistanceUnit::Meters => false,
        DistanceUnit::Centimeters => true,
        DistanceUnit::Auto => !events.is_empty() && events.iter().all(|e| e.distance_m > 50.0),
    };
    if centimeters {
        for e in &mut events {
            e.distance_m /= 100.0;
        }
    }
    Ok(EventList {
        events,
        has_elevation: columns == Some(6),
    })
}

pub fn read_metadata_csv(path: impl AsRef<Path>, unit: DistanceUnit) -> Result<EventList> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_metadata(&text, unit, path)
}

/// Writes events in the same column layout they were read with; distances in
/// meters.
pub fn write_metadata_csv(path: impl AsRef<Path>, list: &EventList) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for e in &list.events {
        if list.has_elevation {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                e.frame, e.class_id, e.source_id, e.azimuth_deg, e.elevation_deg, e.distance_m
            );
        } else {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                e.frame, e.class_id, e.source_id, e.azimuth_deg, e.distance_m
            );
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
