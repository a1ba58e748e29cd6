//! Report serialization: JSON with every float written to 17 significant
//! digits, `x,y` point CSV, and atomic file replacement.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::Formatter;

use crate::geom::Point;

struct FixedDigits;

impl Formatter for FixedDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{}", format_f64(value))
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Scientific notation with 17 significant digits.
pub fn format_f64(value: f64) -> String {
    format!("{value:.16e}")
}

pub fn to_json_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedDigits);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serializer emits UTF-8"))
}

pub fn points_to_csv(points: &[Point]) -> String {
    let mut out = String::from("x,y\n");
    for p in points {
        out.push_str(&format_f64(p.x));
        out.push(',');
        out.push_str(&format_f64(p.y));
        out.push('\n');
    }
    out
}

/// Writes `contents` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = match dir {
        Some(d) => d.join(tmp_name),
        None => tmp_name.into(),
    };
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Sample {
        a: f64,
        b: Vec<f64>,
        n: u64,
    }

    #[test]
    fn floats_carry_seventeen_digits() {
        let s = to_json_string(&Sample {
            a: 0.1,
            b: vec![1.0, f64::NAN],
            n: 3,
        })
        .unwrap();
        assert_eq!(
            s,
            "{\"a\":1.0000000000000001e-1,\"b\":[1.0000000000000000e0,null],\"n\":3}\n"
        );
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"].as_f64().unwrap(), 0.1);
    }

    #[test]
    fn csv_layout() {
        let csv = points_to_csv(&[Point::new(0.5, 2.0)]);
        assert_eq!(csv, "x,y\n5.0000000000000000e-1,2.0000000000000000e0\n");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = std::env::temp_dir().join(format!("limit-shapes-io-{}", std::process::id()));
        let path = dir.join("out.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        fs::remove_dir_all(dir).unwrap();
    }
}
