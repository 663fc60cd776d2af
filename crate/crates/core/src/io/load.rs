//! CSV input loaders. Files are UTF-8 with headers; a leading BOM and CRLF
//! line endings are tolerated. Errors carry file, line, and column.

use std::io::Cursor;
use std::path::{Path, PathBuf};

use crate::io::{io_err, IoError};
use crate::network::{
    build_corridor_network, build_from_corridor_rows, CorridorNetwork, CorridorRow, Municipality,
    RoadSegment,
};

const MUNICIPALITY_HEADER: [&str; 6] = ["id", "name", "population", "beds", "lat", "lon"];
const ROAD_HEADER: [&str; 4] = ["road_id", "muni_a", "muni_b", "length_km"];
const CORRIDOR_HEADER: [&str; 4] = ["muni_a", "muni_b", "length_km", "road_count"];

/// Where the edges come from: raw road segments (bundled during the build)
/// or pre-aggregated corridors.
#[derive(Debug, Clone)]
pub enum NetworkSource {
    Roads(PathBuf),
    Corridors(PathBuf),
}

#[derive(Debug, Clone)]
pub struct NetworkInputs {
    pub municipalities: PathBuf,
    pub source: NetworkSource,
}

pub fn load_network(inputs: &NetworkInputs) -> Result<CorridorNetwork, IoError> {
    let municipalities = load_municipalities(&inputs.municipalities)?;
    let net = match &inputs.source {
        NetworkSource::Roads(path) => {
            let roads = load_roads(path)?;
            build_corridor_network(municipalities, &roads)?
        }
        NetworkSource::Corridors(path) => {
            let rows = load_corridor_rows(path)?;
            build_from_corridor_rows(municipalities, &rows)?
        }
    };
    Ok(net)
}

fn open_reader(path: &Path, expected_header: &[&str]) -> Result<csv::Reader<Cursor<Vec<u8>>>, IoError> {
    let mut bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    if bytes.starts_with(&[0xEF, 0xBB, 0xBF]) {
        bytes.drain(..3);
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(Cursor::new(bytes));
    let headers = reader.headers().map_err(|e| IoError::Malformed {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let found: Vec<&str> = headers.iter().collect();
    if found != expected_header {
        return Err(IoError::Header {
            path: path.display().to_string(),
            expected: expected_header.join(","),
            found: found.join(","),
        });
    }
    Ok(reader)
}

struct RowContext<'a> {
    path: &'a Path,
    line: u64,
}

impl RowContext<'_> {
    fn field(&self, column: &str, message: String) -> IoError {
        IoError::Field {
            path: self.path.display().to_string(),
            line: self.line,
            column: column.to_string(),
            message,
        }
    }

    fn parse_u64(&self, column: &str, raw: &str) -> Result<u64, IoError> {
        raw.parse::<u64>()
            .map_err(|_| self.field(column, format!("invalid nonnegative integer `{raw}`")))
    }

    fn parse_u32(&self, column: &str, raw: &str) -> Result<u32, IoError> {
        raw.parse::<u32>()
            .map_err(|_| self.field(column, format!("invalid nonnegative integer `{raw}`")))
    }

    fn parse_f64(&self, column: &str, raw: &str) -> Result<f64, IoError> {
        let value: f64 = raw
            .parse()
            .map_err(|_| self.field(column, format!("invalid number `{raw}`")))?;
        if !value.is_finite() {
            return Err(self.field(column, format!("non-finite number `{raw}`")));
        }
        Ok(value)
    }

    fn parse_positive_f64(&self, column: &str, raw: &str) -> Result<f64, IoError> {
        let value = self.parse_f64(column, raw)?;
        if value <= 0.0 {
            return Err(self.field(column, format!("must be positive, got `{raw}`")));
        }
        Ok(value)
    }

    fn non_empty(&self, column: &str, raw: &str) -> Result<String, IoError> {
        if raw.is_empty() {
            return Err(self.field(column, "must not be empty".to_string()));
        }
        Ok(raw.to_string())
    }
}

fn rows(
    reader: &mut csv::Reader<Cursor<Vec<u8>>>,
    path: &Path,
) -> Result<Vec<(u64, csv::StringRecord)>, IoError> {
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| IoError::Malformed {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        out.push((line, record));
    }
    Ok(out)
}

pub fn load_municipalities(path: &Path) -> Result<Vec<Municipality>, IoError> {
    let mut reader = open_reader(path, &MUNICIPALITY_HEADER)?;
    let mut municipalities = Vec::new();
    for (line, record) in rows(&mut reader, path)? {
        let ctx = RowContext { path, line };
        municipalities.push(Municipality {
            id: ctx.non_empty("id", &record[0])?,
            name: record[1].to_string(),
            population: ctx.parse_u64("population", &record[2])?,
            beds: ctx.parse_u64("beds", &record[3])?,
            lat: ctx.parse_f64("lat", &record[4])?,
            lon: ctx.parse_f64("lon", &record[5])?,
        });
    }
    Ok(municipalities)
}

pub fn load_roads(path: &Path) -> Result<Vec<RoadSegment>, IoError> {
    let mut reader = open_reader(path, &ROAD_HEADER)?;
    let mut roads = Vec::new();
    for (line, record) in rows(&mut reader, path)? {
        let ctx = RowContext { path, line };
        roads.push(RoadSegment {
            road_id: ctx.non_empty("road_id", &record[0])?,
            muni_a: ctx.non_empty("muni_a", &record[1])?,
            muni_b: ctx.non_empty("muni_b", &record[2])?,
            length_km: ctx.parse_positive_f64("length_km", &record[3])?,
        });
    }
    Ok(roads)
}

pub fn load_corridor_rows(path: &Path) -> Result<Vec<CorridorRow>, IoError> {
    let mut reader = open_reader(path, &CORRIDOR_HEADER)?;
    let mut out = Vec::new();
    for (line, record) in rows(&mut reader, path)? {
        let ctx = RowContext { path, line };
        out.push(CorridorRow {
            muni_a: ctx.non_empty("muni_a", &record[0])?,
            muni_b: ctx.non_empty("muni_b", &record[1])?,
            length_km: ctx.parse_positive_f64("length_km", &record[2])?,
            road_count: ctx.parse_u32("road_count", &record[3])?,
        });
    }
    Ok(out)
}
