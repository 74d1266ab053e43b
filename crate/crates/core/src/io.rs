//! Plain-text point-set files.
//!
//! ```text
//! # dim=3 n=2
//! 0 0 1
//! 0 0 -1
//! ```
//!
//! The header is optional and gives the ambient dimension `d + 1` and the
//! point count. Without a header the dimension is taken from the first data
//! line. Blank lines and further `#` lines are ignored.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sphere::{norm, PointSet, NORM_RENORM_TOL};

/// Parses point-set text; `path` only decorates error messages.
pub fn parse_pointset(text: &str, path: Option<&Path>) -> Result<PointSet> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.map(Path::to_path_buf),
        line,
        message,
    };
    let mut ambient: Option<usize> = None;
    let mut declared_n: Option<usize> = None;
    let mut coords = Vec::new();
    let mut rows = 0usize;
    let mut seen_data = false;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if seen_data {
                continue;
            }
            for field in rest.split_whitespace() {
                if let Some(v) = field.strip_prefix("dim=") {
                    let a: usize = v
                        .parse()
                        .map_err(|_| err(lineno, format!("bad header field '{field}'")))?;
                    if a < 3 {
                        return Err(err(lineno, format!("ambient dimension {a} below 3")));
                    }
                    ambient = Some(a);
                } else if let Some(v) = field.strip_prefix("n=") {
                    declared_n = Some(
                        v.parse()
                            .map_err(|_| err(lineno, format!("bad header field '{field}'")))?,
                    );
                }
            }
            continue;
        }
        seen_data = true;
        let start = coords.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| err(lineno, format!("non-numeric token '{tok}'")))?;
            if !v.is_finite() {
                return Err(err(lineno, format!("non-finite value '{tok}'")));
            }
            coords.push(v);
        }
        let width = coords.len() - start;
        let a = *ambient.get_or_insert(width);
        if a < 3 {
            return Err(err(lineno, format!("{a} coordinates per point; need at least 3")));
        }
        if width != a {
            return Err(err(lineno, format!("expected {a} coordinates, found {width}")));
        }
        let nrm = norm(&coords[start..]);
        if (nrm - 1.0).abs() > NORM_RENORM_TOL {
            return Err(err(lineno, format!("point norm {nrm} is not 1")));
        }
        rows += 1;
    }
    let last = text.lines().count().max(1);
    if rows == 0 {
        return Err(err(last, "no points in file".into()));
    }
    if let Some(n) = declared_n {
        if n != rows {
            return Err(err(last, format!("header declares n={n} but file has {rows} points")));
        }
    }
    let a = ambient.unwrap_or(3);
    PointSet::from_flat(a - 1, coords)
}

pub fn read_pointset(path: impl AsRef<Path>) -> Result<PointSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let x = parse_pointset(&text, Some(path))?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    Ok(match stem {
        Some(s) => x.with_label(s),
        None => x,
    })
}

/// Text form with header; 17 significant digits round-trip every `f64`.
pub fn format_pointset(x: &PointSet) -> String {
    let mut out = String::with_capacity(x.len() * x.ambient_dim() * 25 + 32);
    let _ = writeln!(out, "# dim={} n={}", x.ambient_dim(), x.len());
    for p in x.iter() {
        for (k, v) in p.iter().enumerate() {
            if k > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v:.16e}");
        }
        out.push('\n');
    }
    out
}

pub fn write_pointset(x: &PointSet, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_pointset(x))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_octahedron_without_header() {
        let text = "1 0 0\n-1 0 0\n0 1 0\n0 -1 0\n0 0 1\n0 0 -1\n";
        let x = parse_pointset(text, None).unwrap();
        assert_eq!(x.len(), 6);
        assert_eq!(x.dim(), 2);
    }

    #[test]
    fn slightly_off_norm_is_renormalized() {
        let x = parse_pointset("# dim=3 n=1\n1.000000001 0 0\n", None).unwrap();
        assert_eq!(x.point(0), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn errors_name_the_line() {
        let e = parse_pointset("# dim=3\n1 0 0\n\n0.5 0 0\n", None).unwrap_err();
        match e {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        let e = parse_pointset("1 0 0\n0 x 1\n", None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e = parse_pointset("1 0 0\n0 1\n", None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let e = parse_pointset("# dim=3 n=3\n1 0 0\n0 1 0\n", None).unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
        assert!(e.to_string().contains("n=3"));
    }
}
