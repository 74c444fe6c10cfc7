//! Coordinate text format.
//!
//! ```text
//! # optional comment lines
//! T D1 ... DM
//! t i1 ... iM y
//! ```
//!
//! `t` is 1-based, mode indices are 0-based. Files ending in `.gz` are
//! gzip-compressed.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use super::{Schema, SparseCountSequence};
use crate::error::{Error, Result};

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

/// Reads a coordinate file; `expect` additionally pins the header.
pub fn read_coordinate_file(path: &Path, expect: Option<&Schema>) -> Result<SparseCountSequence> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader: Box<dyn Read> = if is_gz(path) {
        Box::new(MultiGzDecoder::new(file))
    } else {
        Box::new(file)
    };
    parse(BufReader::new(reader), path, expect)
}

fn parse<R: BufRead>(reader: R, path: &Path, expect: Option<&Schema>) -> Result<SparseCountSequence> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut schema: Option<Schema> = None;
    let mut entries = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let lineno = n + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<u64> = line
            .split_whitespace()
            .map(|f| f.parse::<u64>().map_err(|_| parse_err(lineno, format!("not a non-negative integer: {f:?}"))))
            .collect::<Result<_>>()?;
        let Some(schema) = schema.as_ref() else {
            if fields.len() < 2 {
                return Err(parse_err(lineno, "header needs T and at least one mode size".into()));
            }
            let dims = fields[1..].iter().map(|&d| d as usize).collect();
            let s = Schema::new(fields[0] as usize, dims).map_err(|e| parse_err(lineno, e.to_string()))?;
            if let Some(want) = expect {
                if *want != s {
                    return Err(Error::Dimension(format!(
                        "{}: header {:?} does not match expected {:?}",
                        path.display(),
                        s,
                        want
                    )));
                }
            }
            schema = Some(s);
            continue;
        };
        let m = schema.n_modes();
        if fields.len() != m + 2 {
            return Err(parse_err(
                lineno,
                format!("expected {} fields (t, {m} indices, count), got {}", m + 2, fields.len()),
            ));
        }
        let t = fields[0];
        if t == 0 || t as usize > schema.n_steps {
            return Err(parse_err(lineno, format!("time step {t} outside 1..={}", schema.n_steps)));
        }
        let mut idx = Vec::with_capacity(m);
        for (mode, (&i, &d)) in fields[1..=m].iter().zip(&schema.dims).enumerate() {
            if i as usize >= d {
                return Err(Error::Bounds {
                    path: path.to_path_buf(),
                    line: lineno,
                    mode,
                    index: i,
                    size: d,
                });
            }
            idx.push(i as u32);
        }
        entries.push((t as usize - 1, idx, fields[m + 1]));
    }
    let schema = match schema {
        Some(s) => s,
        None => match expect {
            Some(s) => s.clone(),
            None => return Err(parse_err(0, "missing header line".into())),
        },
    };
    SparseCountSequence::from_entries(schema, entries)
}

/// Writes `seq` in canonical order, preceded by `comments` as `#` lines.
pub fn write_coordinate_file(path: &Path, seq: &SparseCountSequence, comments: &[String]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    if is_gz(path) {
        let mut enc = GzEncoder::new(BufWriter::new(file), Compression::default());
        emit(&mut enc, seq, comments).map_err(|e| Error::io(path, e))?;
        enc.finish()
            .and_then(|mut w| w.flush())
            .map_err(|e| Error::io(path, e))
    } else {
        let mut w = BufWriter::new(file);
        emit(&mut w, seq, comments)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }
}

fn emit<W: Write>(w: &mut W, seq: &SparseCountSequence, comments: &[String]) -> std::io::Result<()> {
    for c in comments {
        for line in c.lines() {
            writeln!(w, "# {line}")?;
        }
    }
    write!(w, "{}", seq.n_steps())?;
    for d in seq.dims() {
        write!(w, " {d}")?;
    }
    writeln!(w)?;
    for (t, step) in seq.steps().iter().enumerate() {
        for (idx, y) in step.iter() {
            write!(w, "{}", t + 1)?;
            for i in idx {
                write!(w, " {i}")?;
            }
            writeln!(w, " {y}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_str(s: &str) -> Result<SparseCountSequence> {
        parse(s.as_bytes(), Path::new("mem"), None)
    }

    #[test]
    fn merges_repeated_coordinates() {
        let seq = parse_str("2 2 3 4\n1 1 2 3 5\n1 1 2 3 2\n").unwrap();
        assert_eq!(seq.nnz(), 1);
        assert_eq!(seq.step(0).get(&[1, 2, 3]), 7);
    }

    #[test]
    fn header_only_is_empty() {
        let seq = parse_str("# note\n4 2 2\n").unwrap();
        assert_eq!(seq.n_steps(), 4);
        assert_eq!(seq.nnz(), 0);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse_str("1 2\n\n1 0 x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_str("1 2 2\n1 0 5 1\n") {
            Err(Error::Bounds { line, mode, index, size, .. }) => {
                assert_eq!((line, mode, index, size), (2, 1, 5, 2))
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_str("3 2\n0 1 1\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse_str("3 2\n1 1\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn expected_schema_is_enforced() {
        let want = Schema::new(2, vec![2]).unwrap();
        assert!(parse("3 2\n".as_bytes(), Path::new("mem"), Some(&want)).is_err());
        assert!(parse("2 2\n".as_bytes(), Path::new("mem"), Some(&want)).is_ok());
    }
}
