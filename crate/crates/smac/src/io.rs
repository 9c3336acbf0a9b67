//! Point-cloud files: CSV (`x,y,z,c`) and PLY (ASCII or binary
//! little-endian).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use smac_core::PointCloud4D;

use crate::error::{Result, SmacError};

pub const DEFAULT_COLOR_PROPERTY: &str = "quality";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Csv,
    Ply,
}

impl CloudFormat {
    /// Guess from the file extension (anything but `.ply` is CSV).
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("ply") => Self::Ply,
            _ => Self::Csv,
        }
    }
}

/// Load a cloud, merging exactly coincident points.
pub fn load_cloud(path: &Path, format: CloudFormat) -> Result<PointCloud4D> {
    load_cloud_with(path, format, DEFAULT_COLOR_PROPERTY)
}

pub fn load_cloud_with(path: &Path, format: CloudFormat, color_property: &str) -> Result<PointCloud4D> {
    let (positions, color) = match format {
        CloudFormat::Csv => read_csv(path)?,
        CloudFormat::Ply => read_ply(path, color_property)?,
    };
    let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("cloud").to_string();
    let (cloud, _merged) = PointCloud4D::with_merged_duplicates(id, positions, color)?;
    Ok(cloud)
}

pub fn save_cloud(cloud: &PointCloud4D, path: &Path, format: CloudFormat) -> Result<()> {
    match format {
        CloudFormat::Csv => write_csv(cloud, path),
        CloudFormat::Ply => write_ply(cloud, path, &[]),
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| SmacError::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| SmacError::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> SmacError {
    SmacError::Parse { path: path.into(), line, message: message.into() }
}

fn read_csv(path: &Path) -> Result<(Vec<[f64; 3]>, Vec<f64>)> {
    let reader = BufReader::new(open(path)?);
    let mut positions = Vec::new();
    let mut color = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| SmacError::io(path, e))?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        if positions.is_empty() && color.is_empty() && fields.iter().all(|f| f.parse::<f64>().is_err()) {
            continue; // header
        }
        if fields.len() != 4 {
            return Err(parse_err(path, i + 1, format!("expected 4 fields x,y,z,c, found {}", fields.len())));
        }
        let mut v = [0.0; 4];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f
                .parse()
                .map_err(|_| parse_err(path, i + 1, format!("'{f}' is not a number")))?;
        }
        positions.push([v[0], v[1], v[2]]);
        color.push(v[3]);
    }
    Ok((positions, color))
}

fn write_csv(cloud: &PointCloud4D, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| SmacError::io(path, e);
    writeln!(w, "x,y,z,c").map_err(io)?;
    for (p, c) in cloud.positions().iter().zip(cloud.color()) {
        // shortest representation that parses back to the same bits
        writeln!(w, "{},{},{},{}", p[0], p[1], p[2], c).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn decode(self, b: &[u8]) -> f64 {
        match self {
            Self::I8 => b[0] as i8 as f64,
            Self::U8 => b[0] as f64,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Self::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug)]
enum Property {
    Scalar(String, Scalar),
    List(Scalar, Scalar),
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

fn read_ply(path: &Path, color_property: &str) -> Result<(Vec<[f64; 3]>, Vec<f64>)> {
    let mut reader = BufReader::new(open(path)?);
    let mut line = String::new();
    let mut lineno = 0;
    let mut next_line = |reader: &mut BufReader<File>, line: &mut String| -> Result<usize> {
        line.clear();
        lineno += 1;
        let n = reader.read_line(line).map_err(|e| SmacError::io(path, e))?;
        if n == 0 {
            return Err(parse_err(path, lineno, "unexpected end of header"));
        }
        Ok(lineno)
    };
    next_line(&mut reader, &mut line)?;
    if line.trim() != "ply" {
        return Err(parse_err(path, 1, "missing 'ply' magic"));
    }
    let mut binary = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let at = next_line(&mut reader, &mut line)?;
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["format", "ascii", _] => binary = Some(false),
            ["format", "binary_little_endian", _] => binary = Some(true),
            ["format", other, _] => return Err(parse_err(path, at, format!("unsupported format '{other}'"))),
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count.parse().map_err(|_| parse_err(path, at, "bad element count"))?,
                properties: Vec::new(),
            }),
            ["property", "list", ct, it, _] => {
                let (c, i) = (Scalar::parse(ct), Scalar::parse(it));
                let el = elements.last_mut().ok_or_else(|| parse_err(path, at, "property before element"))?;
                match (c, i) {
                    (Some(c), Some(i)) => el.properties.push(Property::List(c, i)),
                    _ => return Err(parse_err(path, at, "unknown list property type")),
                }
            }
            ["property", ty, name] => {
                let t = Scalar::parse(ty).ok_or_else(|| parse_err(path, at, format!("unknown property type '{ty}'")))?;
                let el = elements.last_mut().ok_or_else(|| parse_err(path, at, "property before element"))?;
                el.properties.push(Property::Scalar(name.to_string(), t));
            }
            ["end_header"] => break,
            _ => return Err(parse_err(path, at, format!("unrecognized header line '{}'", line.trim()))),
        }
    }
    let binary = binary.ok_or_else(|| parse_err(path, lineno, "missing format line"))?;
    let vi = elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| SmacError::Format { path: path.into(), message: "no vertex element".into() })?;
    let vertex = &elements[vi];
    let find = |name: &str| {
        vertex
            .properties
            .iter()
            .position(|p| matches!(p, Property::Scalar(n, _) if n == name))
            .ok_or_else(|| SmacError::Format { path: path.into(), message: format!("vertex property '{name}' missing") })
    };
    let cols = [find("x")?, find("y")?, find("z")?, find(color_property)?];

    // skip elements preceding the vertices
    for el in &elements[..vi] {
        for _ in 0..el.count {
            skip_record(&mut reader, el, binary, path, lineno)?;
            lineno += usize::from(!binary);
        }
    }
    let mut positions = Vec::with_capacity(vertex.count);
    let mut color = Vec::with_capacity(vertex.count);
    let mut values = vec![0.0; vertex.properties.len()];
    for v in 0..vertex.count {
        if binary {
            for (slot, p) in values.iter_mut().zip(&vertex.properties) {
                match p {
                    Property::Scalar(_, t) => *slot = read_scalar(&mut reader, *t, path)?,
                    Property::List(c, i) => {
                        let n = read_scalar(&mut reader, *c, path)? as usize;
                        for _ in 0..n {
                            read_scalar(&mut reader, *i, path)?;
                        }
                    }
                }
            }
        } else {
            line.clear();
            lineno += 1;
            reader.read_line(&mut line).map_err(|e| SmacError::io(path, e))?;
            let words: Vec<&str> = line.split_whitespace().collect();
            let mut w = words.iter();
            for (slot, p) in values.iter_mut().zip(&vertex.properties) {
                let mut take = || {
                    w.next()
                        .ok_or_else(|| parse_err(path, lineno, format!("vertex {v} has too few values")))
                        .and_then(|s| s.parse::<f64>().map_err(|_| parse_err(path, lineno, format!("'{s}' is not a number"))))
                };
                match p {
                    Property::Scalar(..) => *slot = take()?,
                    Property::List(..) => {
                        let n = take()? as usize;
                        for _ in 0..n {
                            take()?;
                        }
                    }
                }
            }
        }
        positions.push([values[cols[0]], values[cols[1]], values[cols[2]]]);
        color.push(values[cols[3]]);
    }
    Ok((positions, color))
}

fn read_scalar(r: &mut impl Read, t: Scalar, path: &Path) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf[..t.size()]).map_err(|e| SmacError::io(path, e))?;
    Ok(t.decode(&buf))
}

fn skip_record(r: &mut BufReader<File>, el: &Element, binary: bool, path: &Path, lineno: usize) -> Result<()> {
    if binary {
        for p in &el.properties {
            match p {
                Property::Scalar(_, t) => {
                    read_scalar(r, *t, path)?;
                }
                Property::List(c, i) => {
                    let n = read_scalar(r, *c, path)? as usize;
                    for _ in 0..n {
                        read_scalar(r, *i, path)?;
                    }
                }
            }
        }
    } else {
        let mut line = String::new();
        if r.read_line(&mut line).map_err(|e| SmacError::io(path, e))? == 0 {
            return Err(parse_err(path, lineno + 1, format!("element '{}' truncated", el.name)));
        }
    }
    Ok(())
}

/// Binary little-endian PLY with double x, y, z, quality and any extra
/// per-vertex scalar attributes.
pub fn write_ply(cloud: &PointCloud4D, path: &Path, extra: &[(&str, &[f64])]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| SmacError::io(path, e);
    let mut header = format!(
        "ply\nformat binary_little_endian 1.0\ncomment {}\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nproperty double {DEFAULT_COLOR_PROPERTY}\n",
        cloud.id(),
        cloud.len()
    );
    for (name, values) in extra {
        if values.len() != cloud.len() {
            return Err(SmacError::Format { path: path.into(), message: format!("attribute '{name}' has wrong length") });
        }
        header.push_str(&format!("property double {name}\n"));
    }
    header.push_str("end_header\n");
    w.write_all(header.as_bytes()).map_err(io)?;
    for (i, (p, c)) in cloud.positions().iter().zip(cloud.color()).enumerate() {
        for v in [p[0], p[1], p[2], *c].into_iter().chain(extra.iter().map(|(_, a)| a[i])) {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}
