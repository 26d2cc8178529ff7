//! MatrixMarket reader and writer for real dense (`array`) and sparse
//! (`coordinate`) matrices.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use super::LinopError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

fn bad(msg: impl Into<String>) -> LinopError {
    LinopError::Mtx(msg.into())
}

pub fn read_mtx(path: impl AsRef<Path>) -> Result<DMatrix<f64>, LinopError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    parse_mtx(&text)
}

pub fn parse_mtx(text: &str) -> Result<DMatrix<f64>, LinopError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file"))?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() < 4 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(bad(format!("bad header: {header}")));
    }
    let coordinate = match tokens[2].as_str() {
        "coordinate" => true,
        "array" => false,
        f => return Err(bad(format!("unsupported format {f}"))),
    };
    let field = tokens[3].as_str();
    let pattern = match field {
        "real" | "double" | "integer" => false,
        "pattern" if coordinate => true,
        f => return Err(bad(format!("unsupported field {f}"))),
    };
    let symmetry = match tokens.get(4).map(String::as_str).unwrap_or("general") {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        s => return Err(bad(format!("unsupported symmetry {s}"))),
    };

    let mut body = lines.map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('%'));
    let size_line = body.next().ok_or_else(|| bad("missing size line"))?;
    let sizes: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad(format!("bad size line: {size_line}"))))
        .collect::<Result<_, _>>()?;

    if coordinate {
        let [nr, nc, nnz] = sizes[..] else {
            return Err(bad(format!("bad size line: {size_line}")));
        };
        let mut m = DMatrix::zeros(nr, nc);
        let mut count = 0;
        for line in body {
            let t: Vec<&str> = line.split_whitespace().collect();
            let need = if pattern { 2 } else { 3 };
            if t.len() < need {
                return Err(bad(format!("bad entry: {line}")));
            }
            let i: usize = t[0].parse().map_err(|_| bad(format!("bad row index: {line}")))?;
            let j: usize = t[1].parse().map_err(|_| bad(format!("bad column index: {line}")))?;
            if i == 0 || j == 0 || i > nr || j > nc {
                return Err(bad(format!("index out of range: {line}")));
            }
            let v: f64 = if pattern {
                1.0
            } else {
                t[2].parse().map_err(|_| bad(format!("bad value: {line}")))?
            };
            m[(i - 1, j - 1)] += v;
            if i != j {
                match symmetry {
                    Symmetry::Symmetric => m[(j - 1, i - 1)] += v,
                    Symmetry::SkewSymmetric => m[(j - 1, i - 1)] -= v,
                    Symmetry::General => {}
                }
            }
            count += 1;
        }
        if count != nnz {
            return Err(bad(format!("expected {nnz} entries, found {count}")));
        }
        Ok(m)
    } else {
        let [nr, nc] = sizes[..] else {
            return Err(bad(format!("bad size line: {size_line}")));
        };
        let values: Vec<f64> = body
            .flat_map(str::split_whitespace)
            .map(|t| t.parse().map_err(|_| bad(format!("bad value: {t}"))))
            .collect::<Result<_, _>>()?;
        let mut m = DMatrix::zeros(nr, nc);
        let mut it = values.into_iter();
        // array storage is column-major; symmetric variants store the lower triangle
        for j in 0..nc {
            let start = match symmetry {
                Symmetry::General => 0,
                Symmetry::Symmetric => j,
                Symmetry::SkewSymmetric => j + 1,
            };
            for i in start..nr {
                let v = it.next().ok_or_else(|| bad("too few values"))?;
                m[(i, j)] = v;
                if i != j {
                    match symmetry {
                        Symmetry::Symmetric => m[(j, i)] = v,
                        Symmetry::SkewSymmetric => m[(j, i)] = -v,
                        Symmetry::General => {}
                    }
                }
            }
        }
        if it.next().is_some() {
            return Err(bad("too many values"));
        }
        Ok(m)
    }
}

/// Writes `array real general`, column-major, full precision.
pub fn write_mtx_dense(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<(), LinopError> {
    let mut s = String::from("%%MatrixMarket matrix array real general\n");
    s.push_str(&format!("{} {}\n", m.nrows(), m.ncols()));
    for v in m.iter() {
        s.push_str(&format!("{v:e}\n"));
    }
    write(path.as_ref(), &s)
}

/// Writes `coordinate real general` with the nonzero entries only.
pub fn write_mtx_coordinate(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<(), LinopError> {
    let mut entries = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != 0.0 {
                entries.push(format!("{} {} {v:e}\n", i + 1, j + 1));
            }
        }
    }
    let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
    s.push_str(&format!("{} {} {}\n", m.nrows(), m.ncols(), entries.len()));
    s.extend(entries);
    write(path.as_ref(), &s)
}

fn write(path: &Path, s: &str) -> Result<(), LinopError> {
    let mut f = fs::File::create(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    f.write_all(s.as_bytes()).map_err(|e| bad(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_coordinate_symmetric() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 3\n1 1 2.0\n2 1 -1\n3 3 4\n";
        let m = parse_mtx(text).unwrap();
        assert_eq!(m[(0, 1)], -1.0);
        assert_eq!(m[(1, 0)], -1.0);
        assert_eq!(m[(2, 2)], 4.0);
    }

    #[test]
    fn parses_array_column_major() {
        let text = "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n";
        let m = parse_mtx(text).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 2.0, 4.0]));
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_mtx("%%MatrixMarket matrix coordinate complex general\n1 1 0\n").is_err());
        assert!(parse_mtx("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n").is_err());
        assert!(parse_mtx("%%MatrixMarket matrix array real general\n2 2\n1 2 3\n").is_err());
        assert!(parse_mtx("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n").is_err());
    }

    #[test]
    fn round_trips_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let m = DMatrix::from_row_slice(2, 3, &[1.5, 0.0, -2.25, 0.0, 1e-300, 3.0]);
        let p1 = dir.path().join("a.mtx");
        let p2 = dir.path().join("b.mtx");
        write_mtx_dense(&p1, &m).unwrap();
        write_mtx_coordinate(&p2, &m).unwrap();
        assert_eq!(read_mtx(&p1).unwrap(), m);
        assert_eq!(read_mtx(&p2).unwrap(), m);
    }
}
