use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::CrsMatrix;
use crate::error::{MpkError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

fn perr<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(MpkError::Parse {
        line,
        msg: msg.into(),
    })
}

/// Reads a coordinate Matrix Market file. Symmetric storage is expanded,
/// duplicates are summed and pattern entries become 1.0.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<CrsMatrix> {
    let reader = BufReader::new(File::open(path)?);
    parse_matrix_market(reader)
}

pub(crate) fn parse_matrix_market(reader: impl BufRead) -> Result<CrsMatrix> {
    let mut lines = reader.lines().enumerate();

    let (field, symmetric) = match lines.next() {
        Some((_, line)) => parse_header(&line?)?,
        None => return perr(1, "empty file"),
    };

    let mut dims: Option<(usize, usize, usize)> = None;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut seen = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let mut tok = t.split_whitespace();
        let Some((m, n, nnz)) = dims else {
            let mut next = || -> Result<usize> {
                match tok.next().map(str::parse::<usize>) {
                    Some(Ok(v)) => Ok(v),
                    _ => perr(lineno, "size line must hold three non-negative integers"),
                }
            };
            let d = (next()?, next()?, next()?);
            if m_too_large(d.0, d.1) {
                return perr(lineno, "dimensions exceed 32-bit indexing");
            }
            triplets.reserve(if symmetric { 2 * d.2 } else { d.2 });
            dims = Some(d);
            continue;
        };
        if seen == nnz {
            return perr(lineno, format!("more than the declared {nnz} entries"));
        }
        let mut index = |what: &str, bound: usize| -> Result<usize> {
            let v = match tok.next().map(str::parse::<i64>) {
                Some(Ok(v)) => v,
                _ => return perr(lineno, format!("missing or malformed {what} index")),
            };
            if v < 1 || v as u64 > bound as u64 {
                return perr(lineno, format!("{what} index {v} outside 1..={bound}"));
            }
            Ok(v as usize - 1)
        };
        let i = index("row", m)?;
        let j = index("column", n)?;
        let v = match field {
            Field::Pattern => 1.0,
            Field::Real | Field::Integer => match tok.next().map(str::parse::<f64>) {
                Some(Ok(v)) => v,
                _ => return perr(lineno, "missing or malformed value"),
            },
        };
        triplets.push((i, j, v));
        if symmetric && i != j {
            triplets.push((j, i, v));
        }
        seen += 1;
    }
    let Some((m, n, nnz)) = dims else {
        return perr(1, "missing size line");
    };
    if seen != nnz {
        return perr(0, format!("declared {nnz} entries but found {seen}"));
    }
    CrsMatrix::from_triplets(m, n, triplets)
}

fn m_too_large(m: usize, n: usize) -> bool {
    m > u32::MAX as usize || n > u32::MAX as usize
}

fn parse_header(line: &str) -> Result<(Field, bool)> {
    let words: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" {
        return perr(1, "header must be '%%MatrixMarket matrix coordinate <field> <symmetry>'");
    }
    if words[1] != "matrix" {
        return perr(1, format!("unsupported object '{}'", words[1]));
    }
    if words[2] != "coordinate" {
        return perr(1, format!("unsupported format '{}', only coordinate", words[2]));
    }
    let field = match words[3].as_str() {
        "real" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        other => return perr(1, format!("unsupported field '{other}'")),
    };
    let symmetric = match words[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return perr(1, format!("unsupported symmetry '{other}'")),
    };
    Ok((field, symmetric))
}

/// Writes `a` as a general real coordinate file. Values use the shortest
/// representation that parses back to the same bits.
pub fn write_matrix_market(a: &CrsMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix_market_to(a, &mut w)?;
    w.flush()?;
    Ok(())
}

pub(crate) fn write_matrix_market_to(a: &CrsMatrix, w: &mut impl Write) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz())?;
    for r in 0..a.n_rows() {
        let (cols, vals) = a.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            writeln!(w, "{} {} {:?}", r + 1, c + 1, v)?;
        }
    }
    Ok(())
}

pub fn write_disorder(values: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for v in values {
        writeln!(w, "{v:?}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_disorder(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        match t.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) => return perr(idx + 1, format!("'{t}' is not a number")),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn parse(s: &str) -> Result<CrsMatrix> {
        parse_matrix_market(Cursor::new(s.as_bytes()))
    }

    #[test]
    fn symmetric_expansion_mirrors_off_diagonal_only() {
        let a = parse(
            "%%MatrixMarket matrix coordinate real symmetric\n% comment\n2 2 2\n1 1 4\n2 1 1\n",
        )
        .unwrap();
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(0, 0), Some(4.0));
        assert_eq!(a.get(0, 1), Some(1.0));
        assert_eq!(a.get(1, 0), Some(1.0));
        assert_eq!(a.get(1, 1), None);
    }

    #[test]
    fn pattern_entries_are_one() {
        let a = parse("%%MatrixMarket matrix coordinate pattern general\n2 3 2\n1 3\n2 1\n").unwrap();
        assert_eq!(a.get(0, 2), Some(1.0));
        assert_eq!(a.get(1, 0), Some(1.0));
        assert_eq!(a.n_cols(), 3);
    }

    #[test]
    fn duplicates_are_summed() {
        let a = parse("%%MatrixMarket matrix coordinate integer general\n1 1 2\n1 1 2\n1 1 3\n").unwrap();
        assert_eq!(a.get(0, 0), Some(5.0));
    }

    #[test]
    fn zero_index_is_rejected_with_line() {
        let err = parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n0 1 1.0\n").unwrap_err();
        match err {
            MpkError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_headers() {
        assert!(parse("%%MatrixMarket matrix array real general\n2 2\n").is_err());
        assert!(parse("%%MatrixMarket matrix coordinate complex general\n1 1 0\n").is_err());
        assert!(parse("%%MatrixMarket matrix coordinate real hermitian\n1 1 0\n").is_err());
        assert!(parse("MatrixMarket matrix coordinate real general\n1 1 0\n").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn entry_count_must_match() {
        assert!(parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n").is_err());
        assert!(
            parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 1\n2 2 1\n").is_err()
        );
    }

    #[test]
    fn out_of_range_index() {
        let e = parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n");
        assert!(matches!(e, Err(MpkError::Parse { line: 3, .. })));
    }

    #[test]
    fn write_read_round_trip() {
        let a = CrsMatrix::from_triplets(
            3,
            4,
            [(0, 3, 0.1), (1, 0, -1.0 / 3.0), (2, 2, 1e-300), (2, 1, -0.0)],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_matrix_market_to(&a, &mut buf).unwrap();
        let b = parse(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(a.row_ptr(), b.row_ptr());
        assert_eq!(a.col_idx(), b.col_idx());
        let bits = |m: &CrsMatrix| m.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }
}
