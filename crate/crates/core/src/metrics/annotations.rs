//! Readers for LabelImg-style VOC XML annotations, detection CSV files and
//! per-image prediction CSV files.

use std::path::Path;

use roxmltree::{Document, Node};
use thiserror::Error;

use super::detection::{BoundingBox, Detection, GroundTruth};
use super::rtp::Predictions;
use super::MetricsError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("input is not valid UTF-8")]
    Utf8,
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("missing required element <{element}>")]
    MissingElement { element: &'static str },
    #[error("object {index}: element <{element}> is not a number: {text:?}")]
    BadNumber {
        index: usize,
        element: &'static str,
        text: String,
    },
    #[error("object {index}: {source}")]
    InvalidObject { index: usize, source: MetricsError },
    #[error("line {line}: expected {expected} columns, found {found}")]
    ColumnCount {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: cannot parse {field} from {text:?}")]
    BadField {
        line: u64,
        field: &'static str,
        text: String,
    },
    #[error("line {line}: {source}")]
    InvalidRecord { line: u64, source: MetricsError },
    #[error("line {line}: image {image_id:?} listed twice")]
    DuplicateImage { line: u64, image_id: String },
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
}

fn child<'a, 'input>(
    node: Node<'a, 'input>,
    name: &'static str,
) -> Result<Node<'a, 'input>, ParseError> {
    node.children()
        .find(|c| c.has_tag_name(name))
        .ok_or(ParseError::MissingElement { element: name })
}

fn text_of<'a>(node: Node<'a, '_>) -> &'a str {
    node.text().unwrap_or("").trim()
}

/// Parses one VOC annotation. Every `<object>` becomes a [`GroundTruth`]
/// whose `image_id` is the `<filename>` without its extension, so that
/// `scan01.png` matches detections reported for `scan01`.
pub fn parse_voc_xml(bytes: &[u8]) -> Result<Vec<GroundTruth>, ParseError> {
    let text = std::str::from_utf8(bytes).map_err(|_| ParseError::Utf8)?;
    let doc = Document::parse(text).map_err(|e| ParseError::Xml(e.to_string()))?;
    let root = doc.root_element();
    if !root.has_tag_name("annotation") {
        return Err(ParseError::MissingElement {
            element: "annotation",
        });
    }
    let filename = text_of(child(root, "filename")?);
    let image_id = Path::new(filename)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();

    let mut out = Vec::new();
    for (index, object) in root
        .children()
        .filter(|c| c.has_tag_name("object"))
        .enumerate()
    {
        let label = text_of(child(object, "name")?).to_string();
        let bndbox = child(object, "bndbox")?;
        let mut coords = [0.0; 4];
        for (slot, element) in coords.iter_mut().zip(["xmin", "ymin", "xmax", "ymax"]) {
            let raw = text_of(child(bndbox, element)?);
            *slot = raw
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| ParseError::BadNumber {
                    index,
                    element,
                    text: raw.to_string(),
                })?;
        }
        let bbox = BoundingBox::new(coords[0], coords[1], coords[2], coords[3])
            .map_err(|source| ParseError::InvalidObject { index, source })?;
        out.push(GroundTruth {
            image_id: image_id.clone(),
            label,
            bbox,
        });
    }
    Ok(out)
}

fn reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(bytes)
}

fn csv_error(e: csv::Error) -> ParseError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.kind() {
        csv::ErrorKind::Utf8 { .. } => ParseError::Csv {
            line,
            message: "invalid UTF-8".into(),
        },
        _ => ParseError::Csv {
            line,
            message: e.to_string(),
        },
    }
}

fn number(text: &str, line: u64, field: &'static str) -> Result<f64, ParseError> {
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ParseError::BadField {
            line,
            field,
            text: text.to_string(),
        })
}

/// Parses `image_id,label,score,xmin,ymin,xmax,ymax` lines. A first line
/// whose score column is not numeric is treated as a header.
pub fn parse_detections_csv(bytes: &[u8]) -> Result<Vec<Detection>, ParseError> {
    const FIELDS: [&str; 4] = ["xmin", "ymin", "xmax", "ymax"];
    let mut out = Vec::new();
    for (i, record) in reader(bytes).records().enumerate() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != 7 {
            return Err(ParseError::ColumnCount {
                line,
                expected: 7,
                found: record.len(),
            });
        }
        if i == 0 && record[2].parse::<f64>().is_err() {
            continue;
        }
        let score = number(&record[2], line, "score")?;
        let mut coords = [0.0; 4];
        for (k, slot) in coords.iter_mut().enumerate() {
            *slot = number(&record[3 + k], line, FIELDS[k])?;
        }
        let bbox = BoundingBox::new(coords[0], coords[1], coords[2], coords[3])
            .map_err(|source| ParseError::InvalidRecord { line, source })?;
        let det = Detection::new(&record[0], &record[1], score, bbox)
            .map_err(|source| ParseError::InvalidRecord { line, source })?;
        out.push(det);
    }
    Ok(out)
}

/// Parses `image_id,label` lines, skipping an optional `image_id,label`
/// header.
pub fn parse_predictions_csv(bytes: &[u8]) -> Result<Predictions, ParseError> {
    let mut out = Predictions::new();
    for (i, record) in reader(bytes).records().enumerate() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != 2 {
            return Err(ParseError::ColumnCount {
                line,
                expected: 2,
                found: record.len(),
            });
        }
        if i == 0 && &record[0] == "image_id" && &record[1] == "label" {
            continue;
        }
        if out
            .insert(record[0].to_string(), record[1].to_string())
            .is_some()
        {
            return Err(ParseError::DuplicateImage {
                line,
                image_id: record[0].to_string(),
            });
        }
    }
    Ok(out)
}
