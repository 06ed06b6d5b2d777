//! Dataset manifest CSV: `path,ghi,label` with optional empty fields.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::models::SkyClass;

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRecord {
    pub image_path: String,
    pub ghi: Option<f64>,
    pub label: Option<SkyClass>,
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "path,ghi,label" => {}
        _ => return Err(Error::MissingHeader),
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::MalformedRow {
                line: line_no,
                reason: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        let image_path = fields[0].trim();
        if image_path.is_empty() {
            return Err(Error::MalformedRow { line: line_no, reason: "empty path".into() });
        }
        let ghi = match fields[1].trim() {
            "" => None,
            s => Some(s.parse::<f64>().map_err(|_| Error::MalformedRow {
                line: line_no,
                reason: format!("unparseable ghi '{s}'"),
            })?),
        };
        if let Some(g) = ghi {
            if g < 0.0 || !g.is_finite() {
                return Err(Error::MalformedRow {
                    line: line_no,
                    reason: format!("ghi {g} out of range"),
                });
            }
        }
        let label = match fields[2].trim() {
            "" => None,
            s => Some(SkyClass::parse(s).ok_or_else(|| Error::MalformedRow {
                line: line_no,
                reason: format!("unknown label '{s}'"),
            })?),
        };
        records.push(ManifestRecord { image_path: image_path.to_string(), ghi, label });
    }
    Ok(records)
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestRecord>> {
    parse_manifest(&fs::read_to_string(path)?)
}
