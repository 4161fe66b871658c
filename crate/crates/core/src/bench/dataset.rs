//! Text input formats: sparse vector datasets and `element weight` streams.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Result, SketchError};
use crate::sketch::WeightedVector;
use crate::stream::StreamItem;

/// A collection of sparse vectors loaded from one file.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDataset {
    pub name: String,
    pub vectors: Vec<WeightedVector>,
    /// Largest 1-based feature index seen.
    pub feature_dim: u64,
}

impl SparseDataset {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> SketchError {
    SketchError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Parses one `[label] idx:val idx:val ...` line (1-based indices).
pub fn parse_sparse_line(text: &str, line: usize) -> Result<WeightedVector> {
    let mut tokens = text.split_whitespace().peekable();
    if tokens.peek().is_some_and(|t| !t.contains(':')) {
        tokens.next();
    }
    let mut pairs = Vec::new();
    for token in tokens {
        let (idx, val) = token
            .split_once(':')
            .ok_or_else(|| parse_err(line, format!("expected index:value, got {token:?}")))?;
        let idx: u64 = idx
            .parse()
            .map_err(|_| parse_err(line, format!("bad index {idx:?}")))?;
        let val: f64 = val
            .parse()
            .map_err(|_| parse_err(line, format!("bad value {val:?}")))?;
        if idx == 0 {
            return Err(parse_err(line, "indices are 1-based"));
        }
        // Written negated so NaN is rejected too.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(val > 0.0) {
            return Err(parse_err(
                line,
                format!("nonpositive weight {val} at index {idx}"),
            ));
        }
        pairs.push((idx, val));
    }
    WeightedVector::from_pairs(pairs).map_err(|e| parse_err(line, e.to_string()))
}

pub fn parse_sparse<R: BufRead>(reader: R, name: &str) -> Result<SparseDataset> {
    let mut vectors = Vec::new();
    let mut feature_dim = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let v = parse_sparse_line(trimmed, i + 1)?;
        feature_dim = feature_dim.max(v.max_element());
        vectors.push(v);
    }
    Ok(SparseDataset {
        name: name.to_string(),
        vectors,
        feature_dim,
    })
}

/// Loads a sparse dataset. Blank lines and `#` comments are skipped.
pub fn load_sparse(path: impl AsRef<Path>) -> Result<SparseDataset> {
    let path = path.as_ref();
    let name = path.file_stem().map_or_else(
        || "dataset".to_string(),
        |s| s.to_string_lossy().into_owned(),
    );
    parse_sparse(BufReader::new(File::open(path)?), &name)
}

/// Parses `element_id weight` lines into stream items.
pub fn parse_stream<R: BufRead>(reader: R) -> Result<Vec<StreamItem>> {
    let mut items = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let (Some(id), Some(w), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(parse_err(i + 1, "expected \"element_id weight\""));
        };
        let element: u64 = id
            .parse()
            .map_err(|_| parse_err(i + 1, format!("bad element id {id:?}")))?;
        let weight: f64 = w
            .parse()
            .map_err(|_| parse_err(i + 1, format!("bad weight {w:?}")))?;
        if element == 0 {
            return Err(parse_err(i + 1, "element ids are positive"));
        }
        // Written negated so NaN is rejected too.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(weight > 0.0) {
            return Err(parse_err(i + 1, format!("nonpositive weight {weight}")));
        }
        items.push(StreamItem::new(element, weight));
    }
    Ok(items)
}

pub fn load_stream(path: impl AsRef<Path>) -> Result<Vec<StreamItem>> {
    parse_stream(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labelled_line() {
        let v = parse_sparse_line("1 3:0.5 7:1.25", 1).unwrap();
        assert_eq!(v.iter().collect::<Vec<_>>(), vec![(3, 0.5), (7, 1.25)]);
        let v = parse_sparse_line("3:0.5 7:1.25", 1).unwrap();
        assert_eq!(v.n_plus(), 2);
        assert!(parse_sparse_line("-1", 1).unwrap().is_empty());
    }

    #[test]
    fn bad_lines_report_their_number() {
        let input = "1 1:0.5\n\n1 2:0.0\n";
        match parse_sparse(input.as_bytes(), "t") {
            Err(SketchError::Parse { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("nonpositive"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_sparse("1 0:1".as_bytes(), "t"),
            Err(SketchError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_sparse("1 a:1".as_bytes(), "t"),
            Err(SketchError::Parse { .. })
        ));
        assert!(matches!(
            parse_sparse("1 2:x".as_bytes(), "t"),
            Err(SketchError::Parse { .. })
        ));
        assert!(matches!(
            parse_sparse("1 2:1 2:3".as_bytes(), "t"),
            Err(SketchError::Parse { .. })
        ));
        assert!(matches!(
            parse_sparse("1 2:-1".as_bytes(), "t"),
            Err(SketchError::Parse { .. })
        ));
    }

    #[test]
    fn empty_input_is_an_empty_dataset() {
        let ds = parse_sparse("".as_bytes(), "empty").unwrap();
        assert!(ds.is_empty());
        assert_eq!(ds.feature_dim, 0);
    }

    #[test]
    fn feature_dim_tracks_max_index() {
        let ds = parse_sparse("0 4:1\n# note\n1 2:1 19:0.5\n".as_bytes(), "t").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.feature_dim, 19);
    }

    #[test]
    fn stream_lines() {
        let items = parse_stream("3 0.5\n\n7 1e-2\n".as_bytes()).unwrap();
        assert_eq!(
            items,
            vec![StreamItem::new(3, 0.5), StreamItem::new(7, 0.01)]
        );
        assert!(parse_stream("3".as_bytes()).is_err());
        assert!(parse_stream("3 1 2".as_bytes()).is_err());
        assert!(parse_stream("0 1".as_bytes()).is_err());
        assert!(parse_stream("2 0".as_bytes()).is_err());
    }
}
