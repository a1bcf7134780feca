//! Readers for XYZ ASCII and vertex-only PLY point files.

use std::fs;
use std::path::Path;

use nalgebra::Point3;

use crate::error::{Error, Result};

/// Reads `.ply` files as PLY and anything else as whitespace-separated XYZ.
pub fn read_points(path: &Path) -> Result<Vec<Point3<f64>>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let is_ply = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ply"))
        || bytes.starts_with(b"ply\n")
        || bytes.starts_with(b"ply\r\n");
    if is_ply {
        parse_ply(&bytes, path)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| Error::parse(path, 0, "file is not UTF-8 text"))?;
        parse_xyz(&text, path)
    }
}

/// One `x y z` triple per line; `#` starts a comment. Extra columns (normals,
/// colours) are ignored.
pub fn parse_xyz(text: &str, path: &Path) -> Result<Vec<Point3<f64>>> {
    let mut points = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 3 {
            return Err(Error::parse(path, lineno + 1, "expected three coordinates"));
        }
        let mut xyz = [0.0; 3];
        for (slot, f) in xyz.iter_mut().zip(&fields) {
            *slot = f
                .parse::<f64>()
                .map_err(|_| Error::parse(path, lineno + 1, format!("bad number `{f}`")))?;
        }
        points.push(Point3::new(xyz[0], xyz[1], xyz[2]));
    }
    if points.is_empty() {
        return Err(Error::parse(path, 0, "no points"));
    }
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Format {
    Ascii,
    BinaryLe,
    BinaryBe,
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
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read(self, b: &[u8], format: Format) -> f64 {
        macro_rules! num {
            ($t:ty, $n:expr) => {{
                let arr: [u8; $n] = b[..$n].try_into().unwrap();
                (if format == Format::BinaryBe {
                    <$t>::from_be_bytes(arr)
                } else {
                    <$t>::from_le_bytes(arr)
                }) as f64
            }};
        }
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => num!(i16, 2),
            Scalar::U16 => num!(u16, 2),
            Scalar::I32 => num!(i32, 4),
            Scalar::U32 => num!(u32, 4),
            Scalar::F32 => num!(f32, 4),
            Scalar::F64 => num!(f64, 8),
        }
    }
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<(String, Scalar)>,
}

/// Reads the `vertex` element's `x`, `y`, `z` properties. Elements declared
/// before `vertex` must not contain list properties in binary files; elements
/// after it are ignored.
pub fn parse_ply(bytes: &[u8], path: &Path) -> Result<Vec<Point3<f64>>> {
    let mut pos = 0;
    let mut lineno = 0;
    let next_line = |pos: &mut usize| -> Option<String> {
        if *pos >= bytes.len() {
            return None;
        }
        let end = bytes[*pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map_or(bytes.len(), |e| *pos + e);
        let line = String::from_utf8_lossy(&bytes[*pos..end]).trim().to_string();
        *pos = (end + 1).min(bytes.len());
        Some(line)
    };

    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    let mut has_list = Vec::new();
    loop {
        lineno += 1;
        let line = next_line(&mut pos).ok_or_else(|| Error::parse(path, lineno, "missing end_header"))?;
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["ply"] if lineno == 1 => {}
            _ if lineno == 1 => return Err(Error::parse(path, 1, "missing `ply` magic")),
            ["format", f, _version] => {
                format = Some(match *f {
                    "ascii" => Format::Ascii,
                    "binary_little_endian" => Format::BinaryLe,
                    "binary_big_endian" => Format::BinaryBe,
                    other => return Err(Error::parse(path, lineno, format!("unknown format `{other}`"))),
                });
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| Error::parse(path, lineno, "bad element count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
                has_list.push(false);
            }
            ["property", "list", ..] => {
                *has_list
                    .last_mut()
                    .ok_or_else(|| Error::parse(path, lineno, "property before element"))? = true;
            }
            ["property", ty, name] => {
                let scalar = Scalar::parse(ty)
                    .ok_or_else(|| Error::parse(path, lineno, format!("unknown property type `{ty}`")))?;
                elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(path, lineno, "property before element"))?
                    .properties
                    .push((name.to_string(), scalar));
            }
            ["end_header"] => break,
            _ => return Err(Error::parse(path, lineno, format!("unrecognised header line `{line}`"))),
        }
    }
    let format = format.ok_or_else(|| Error::parse(path, lineno, "missing format line"))?;
    let vi = elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| Error::parse(path, lineno, "no vertex element"))?;
    if has_list[vi] {
        return Err(Error::parse(
            path,
            lineno,
            "list properties on vertex are not supported",
        ));
    }
    let vertex = &elements[vi];
    let find = |axis: &str| {
        vertex
            .properties
            .iter()
            .position(|(n, _)| n == axis)
            .ok_or_else(|| Error::parse(path, lineno, format!("vertex has no `{axis}` property")))
    };
    let axes = [find("x")?, find("y")?, find("z")?];

    let mut points = Vec::with_capacity(vertex.count);
    match format {
        Format::Ascii => {
            // Skip lines of elements preceding the vertex block.
            let skip: usize = elements[..vi].iter().map(|e| e.count).sum();
            let text = String::from_utf8_lossy(&bytes[pos..]);
            let mut lines = text
                .lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .skip(skip);
            for _ in 0..vertex.count {
                let (off, line) = lines
                    .next()
                    .ok_or_else(|| Error::parse(path, lineno, "truncated vertex data"))?;
                let vals: Vec<f64> = line
                    .split_whitespace()
                    .map(|w| w.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::parse(path, lineno + off + 1, "bad vertex value"))?;
                if vals.len() < vertex.properties.len() {
                    return Err(Error::parse(path, lineno + off + 1, "too few vertex values"));
                }
                points.push(Point3::new(vals[axes[0]], vals[axes[1]], vals[axes[2]]));
            }
        }
        Format::BinaryLe | Format::BinaryBe => {
            for (e, list) in elements[..vi].iter().zip(&has_list) {
                if *list {
                    return Err(Error::parse(path, lineno, "list element before vertex in binary file"));
                }
                pos += e.count * e.properties.iter().map(|(_, s)| s.size()).sum::<usize>();
            }
            let offsets: Vec<usize> = vertex
                .properties
                .iter()
                .scan(0, |acc, (_, s)| {
                    let o = *acc;
                    *acc += s.size();
                    Some(o)
                })
                .collect();
            let stride: usize = vertex.properties.iter().map(|(_, s)| s.size()).sum();
            if bytes.len() < pos + stride * vertex.count {
                return Err(Error::parse(path, lineno, "truncated binary vertex data"));
            }
            for v in 0..vertex.count {
                let rec = &bytes[pos + v * stride..pos + (v + 1) * stride];
                let get = |a: usize| vertex.properties[a].1.read(&rec[offsets[a]..], format);
                points.push(Point3::new(get(axes[0]), get(axes[1]), get(axes[2])));
            }
        }
    }
    if points.is_empty() {
        return Err(Error::parse(path, lineno, "no points"));
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xyz_with_comments_and_extra_columns() {
        let text = "# header\n1 2 3\n\n4.5 -5 6e1 0 0 1 # normal\n";
        let pts = parse_xyz(text, Path::new("t.xyz")).unwrap();
        assert_eq!(pts, vec![Point3::new(1.0, 2.0, 3.0), Point3::new(4.5, -5.0, 60.0)]);
    }

    #[test]
    fn xyz_errors_name_the_line() {
        let err = parse_xyz("1 2 3\n1 2\n", Path::new("t.xyz")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_xyz("1 x 3\n", Path::new("t.xyz")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn ascii_ply() {
        let text = "ply\nformat ascii 1.0\ncomment hi\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\nelement face 0\nproperty list uchar int vertex_indices\nend_header\n0 1 2 255\n3 4 5 0\n";
        let pts = parse_ply(text.as_bytes(), Path::new("t.ply")).unwrap();
        assert_eq!(pts, vec![Point3::new(0.0, 1.0, 2.0), Point3::new(3.0, 4.0, 5.0)]);
    }

    #[test]
    fn binary_little_and_big_endian_ply() {
        for (fmt, be) in [("binary_little_endian", false), ("binary_big_endian", true)] {
            let mut bytes = format!(
                "ply\nformat {fmt} 1.0\nelement vertex 2\nproperty double x\nproperty float y\nproperty double z\nend_header\n"
            )
            .into_bytes();
            for (x, y, z) in [(1.5f64, -2.0f32, 3.25f64), (0.0, 7.0, -1.0)] {
                if be {
                    bytes.extend(x.to_be_bytes());
                    bytes.extend(y.to_be_bytes());
                    bytes.extend(z.to_be_bytes());
                } else {
                    bytes.extend(x.to_le_bytes());
                    bytes.extend(y.to_le_bytes());
                    bytes.extend(z.to_le_bytes());
                }
            }
            let pts = parse_ply(&bytes, Path::new("t.ply")).unwrap();
            assert_eq!(pts, vec![Point3::new(1.5, -2.0, 3.25), Point3::new(0.0, 7.0, -1.0)]);
        }
    }

    #[test]
    fn ply_without_vertex_is_rejected() {
        let text = "ply\nformat ascii 1.0\nelement face 0\nend_header\n";
        assert!(parse_ply(text.as_bytes(), Path::new("t.ply")).is_err());
    }
}
