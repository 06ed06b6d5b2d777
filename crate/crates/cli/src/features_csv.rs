//! Features CSV: header `pcnp0..pcnp{k-1},ghi,label`, one row per image.
//! The ghi and label columns pass through from the manifest and may be
//! empty.

use std::fs;
use std::path::Path;

use skyirr::models::SkyClass;
use skyirr::{Error, Matrix64, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub k: usize,
    pub rows: Vec<Vec<f64>>,
    pub ghi: Vec<Option<f64>>,
    pub labels: Vec<Option<SkyClass>>,
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn matrix(&self) -> Matrix64 {
        Matrix64::from_rows(&self.rows)
    }

    /// Rows carrying a label, for classifier training.
    pub fn labeled(&self) -> Result<(Matrix64, Vec<SkyClass>)> {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (i, label) in self.labels.iter().enumerate() {
            match label {
                Some(l) => {
                    rows.push(self.rows[i].clone());
                    labels.push(*l);
                }
                None => {
                    return Err(Error::MalformedRow {
                        line: i + 2,
                        reason: "missing label".into(),
                    })
                }
            }
        }
        Ok((Matrix64::from_rows(&rows), labels))
    }

    /// Rows carrying a positive GHI, for regressor training. Zero-GHI
    /// rows are excluded.
    pub fn with_ghi(&self) -> Result<(Matrix64, Vec<f64>)> {
        let mut rows = Vec::new();
        let mut targets = Vec::new();
        for (i, ghi) in self.ghi.iter().enumerate() {
            match ghi {
                Some(g) if *g > 0.0 => {
                    rows.push(self.rows[i].clone());
                    targets.push(*g);
                }
                Some(_) => {}
                None => {
                    return Err(Error::MalformedRow {
                        line: i + 2,
                        reason: "missing ghi".into(),
                    })
                }
            }
        }
        Ok((Matrix64::from_rows(&rows), targets))
    }
}

pub fn features_header(k: usize) -> String {
    let mut header: Vec<String> = (0..k).map(|i| format!("pcnp{i}")).collect();
    header.push("ghi".into());
    header.push("label".into());
    header.join(",")
}

pub fn write_features(table: &FeatureTable, path: impl AsRef<Path>) -> Result<()> {
    let mut out = features_header(table.k);
    out.push('\n');
    for i in 0..table.rows.len() {
        let mut fields: Vec<String> = table.rows[i].iter().map(|v| format!("{v}")).collect();
        fields.push(table.ghi[i].map(|g| format!("{g}")).unwrap_or_default());
        fields.push(table.labels[i].map(|l| l.as_str().to_string()).unwrap_or_default());
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn parse_features(text: &str) -> Result<FeatureTable> {
    let mut lines = text.lines().enumerate();
    let header = match lines.next() {
        Some((_, h)) => h.trim(),
        None => return Err(Error::MissingHeader),
    };
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3 || cols[cols.len() - 2] != "ghi" || cols[cols.len() - 1] != "label" {
        return Err(Error::MissingHeader);
    }
    let k = cols.len() - 2;
    for (i, col) in cols[..k].iter().enumerate() {
        if *col != format!("pcnp{i}") {
            return Err(Error::MissingHeader);
        }
    }
    let mut table = FeatureTable { k, rows: Vec::new(), ghi: Vec::new(), labels: Vec::new() };
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != k + 2 {
            return Err(Error::MalformedRow {
                line: line_no,
                reason: format!("expected {} fields, got {}", k + 2, fields.len()),
            });
        }
        let mut row = Vec::with_capacity(k);
        for f in &fields[..k] {
            row.push(f.trim().parse::<f64>().map_err(|_| Error::MalformedRow {
                line: line_no,
                reason: format!("unparseable feature '{f}'"),
            })?);
        }
        let ghi = match fields[k].trim() {
            "" => None,
            s => Some(s.parse::<f64>().map_err(|_| Error::MalformedRow {
                line: line_no,
                reason: format!("unparseable ghi '{s}'"),
            })?),
        };
        let label = match fields[k + 1].trim() {
            "" => None,
            s => Some(SkyClass::parse(s).ok_or_else(|| Error::MalformedRow {
                line: line_no,
                reason: format!("unknown label '{s}'"),
            })?),
        };
        table.rows.push(row);
        table.ghi.push(ghi);
        table.labels.push(label);
    }
    Ok(table)
}

pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureTable> {
    parse_features(&fs::read_to_string(path)?)
}
