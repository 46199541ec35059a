//! Matrix Market exchange format, coordinate variant.
//!
//! Reads `real`, `integer` and `complex` fields with `general`, `symmetric`
//! or `hermitian` symmetry. Symmetric storage is expanded to general storage
//! and real values are widened to complex. Duplicate entries are summed.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::SparseMatrix;
use crate::error::{Error, Result};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    Hermitian,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_header(line: &str) -> Result<(Field, Symmetry)> {
    let toks: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if toks.len() != 5 || toks[0] != "%%matrixmarket" || toks[1] != "matrix" {
        return Err(parse_err(1, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'"));
    }
    match toks[2].as_str() {
        "coordinate" => {}
        "array" => return Err(Error::UnsupportedFormat("array format".into())),
        other => return Err(parse_err(1, format!("unknown format '{other}'"))),
    }
    let field = match toks[3].as_str() {
        "real" | "integer" | "double" => Field::Real,
        "complex" => Field::Complex,
        "pattern" => return Err(Error::UnsupportedFormat("pattern field".into())),
        other => return Err(parse_err(1, format!("unknown field '{other}'"))),
    };
    let symmetry = match toks[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "hermitian" => Symmetry::Hermitian,
        other => return Err(Error::UnsupportedFormat(format!("{other} symmetry"))),
    };
    Ok((field, symmetry))
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| parse_err(line, format!("cannot parse {what}")))
}

/// Parses Matrix Market text from any reader.
pub fn parse_matrix_market<R: BufRead>(reader: R) -> Result<SparseMatrix> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, l)) => l.map_err(|e| parse_err(1, e.to_string()))?,
        None => return Err(parse_err(1, "empty file")),
    };
    let (field, symmetry) = parse_header(&header)?;

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    let mut read_entries = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let mut toks = trimmed.split_whitespace();
        let Some((nr, nc, nnz)) = size else {
            let nr = parse_num(toks.next(), lineno, "row count")?;
            let nc = parse_num(toks.next(), lineno, "column count")?;
            let nnz = parse_num(toks.next(), lineno, "entry count")?;
            size = Some((nr, nc, nnz));
            triplets.reserve(if symmetry == Symmetry::General { nnz } else { 2 * nnz });
            continue;
        };
        if read_entries == nnz {
            return Err(parse_err(lineno, format!("more than the {nnz} declared entries")));
        }
        let i: usize = parse_num(toks.next(), lineno, "row index")?;
        let j: usize = parse_num(toks.next(), lineno, "column index")?;
        if i == 0 || j == 0 || i > nr || j > nc {
            return Err(parse_err(lineno, format!("index ({i}, {j}) out of range")));
        }
        let re: f64 = parse_num(toks.next(), lineno, "real part")?;
        let im: f64 = match field {
            Field::Real => 0.0,
            Field::Complex => parse_num(toks.next(), lineno, "imaginary part")?,
        };
        if !(re.is_finite() && im.is_finite()) {
            return Err(parse_err(lineno, "non-finite value"));
        }
        let v = C64::new(re, im);
        let (i, j) = (i - 1, j - 1);
        triplets.push((i, j, v));
        if i != j {
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => triplets.push((j, i, v)),
                Symmetry::Hermitian => triplets.push((j, i, v.conj())),
            }
        }
        read_entries += 1;
    }
    let (nr, nc, nnz) = size.ok_or_else(|| parse_err(1, "missing size line"))?;
    if read_entries != nnz {
        return Err(parse_err(0, format!("header declares {nnz} entries, found {read_entries}")));
    }
    SparseMatrix::from_triplets(nr, nc, triplets)
}

/// Reads a coordinate-format Matrix Market file.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_matrix_market(BufReader::new(file))
}

/// Writes `m` as `coordinate complex general`. Values use the shortest
/// round-trip float formatting, so reading the file back is bit-exact.
pub fn write_matrix_market(path: impl AsRef<Path>, m: &SparseMatrix) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    (|| -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate complex general")?;
        writeln!(w, "{} {} {}", m.n_rows(), m.n_cols(), m.nnz())?;
        for (i, j, v) in m.iter() {
            writeln!(w, "{} {} {:e} {:e}", i + 1, j + 1, v.re, v.im)?;
        }
        w.flush()
    })()
    .map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<SparseMatrix> {
        parse_matrix_market(s.as_bytes())
    }

    #[test]
    fn identity_real_general() {
        let m = parse(
            "%%MatrixMarket matrix coordinate real general\n% comment\n3 3 3\n1 1 1\n2 2 1\n3 3 1\n",
        )
        .unwrap();
        assert_eq!(m.nnz(), 3);
        assert!(m.iter().all(|(i, j, v)| i == j && v == C64::new(1.0, 0.0)));
    }

    #[test]
    fn symmetric_lower_triangle_is_expanded() {
        let m = parse("%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 2\n2 1 1\n2 2 3\n")
            .unwrap();
        assert_eq!(m.nnz(), 4);
        assert_eq!(m.get(0, 1), C64::new(1.0, 0.0));
        assert_eq!(m.get(1, 0), C64::new(1.0, 0.0));
    }

    #[test]
    fn hermitian_conjugates_mirror() {
        let m = parse("%%MatrixMarket matrix coordinate complex hermitian\n2 2 2\n1 1 1 0\n2 1 0 2\n")
            .unwrap();
        assert_eq!(m.get(1, 0), C64::new(0.0, 2.0));
        assert_eq!(m.get(0, 1), C64::new(0.0, -2.0));
    }

    #[test]
    fn duplicates_summed() {
        let m = parse("%%MatrixMarket matrix coordinate real general\n1 1 2\n1 1 1.5\n1 1 2.5\n").unwrap();
        assert_eq!(m.get(0, 0), C64::new(4.0, 0.0));
    }

    #[test]
    fn rejects_array_and_pattern() {
        assert!(matches!(
            parse("%%MatrixMarket matrix array real general\n1 1\n1\n"),
            Err(Error::UnsupportedFormat(_))
        ));
        assert!(matches!(
            parse("%%MatrixMarket matrix coordinate pattern general\n1 1 1\n1 1\n"),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn parse_error_carries_line_number() {
        let err = parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n2 x 1\n")
            .unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn entry_count_must_match_header() {
        assert!(parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n").is_err());
        assert!(parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 1\n2 2 1\n").is_err());
    }
}
