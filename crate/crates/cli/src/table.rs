//! On-disk score tables: one row per segment holding the true label, the
//! softmax class probabilities, and the penultimate features of a stream.
//!
//! Floats are written with the shortest decimal representation that round
//! trips exactly, so a table read back from disk is bit-identical to the one
//! written — in particular probability rows still sum to one within the
//! tolerance the metrics layer enforces.

use std::path::Path;

use egoav_core::fusion::{StreamId, StreamScores};
use egoav_core::metrics::Prediction;
use egoav_core::{Error, Result};

/// One scored segment.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreRow {
    pub segment_id: String,
    pub label: usize,
    pub probs: Vec<f32>,
    pub feats: Vec<f32>,
}

/// A set of scored segments from a single stream (or from fusion, where the
/// stream column is empty).
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTable {
    stream: Option<StreamId>,
    num_classes: usize,
    num_features: usize,
    rows: Vec<ScoreRow>,
}

impl ScoreTable {
    pub fn new(stream: Option<StreamId>, num_classes: usize, num_features: usize) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::invalid("a score table needs at least one class"));
        }
        Ok(ScoreTable {
            stream,
            num_classes,
            num_features,
            rows: Vec::new(),
        })
    }

    pub fn stream(&self) -> Option<StreamId> {
        self.stream
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn rows(&self) -> &[ScoreRow] {
        &self.rows
    }

    pub fn push(&mut self, row: ScoreRow) -> Result<()> {
        if row.probs.len() != self.num_classes {
            return Err(Error::shape(format!(
                "segment {}: {} probabilities, table holds {}",
                row.segment_id,
                row.probs.len(),
                self.num_classes
            )));
        }
        if row.feats.len() != self.num_features {
            return Err(Error::shape(format!(
                "segment {}: {} features, table holds {}",
                row.segment_id,
                row.feats.len(),
                self.num_features
            )));
        }
        if row.label >= self.num_classes {
            return Err(Error::invalid(format!(
                "segment {}: label {} outside {} classes",
                row.segment_id, row.label, self.num_classes
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    /// Orders rows by segment id so tables from different streams align.
    pub fn sort_by_segment(&mut self) {
        self.rows.sort_by(|a, b| a.segment_id.cmp(&b.segment_id));
    }

    /// The rows as metric-layer predictions, in table order.
    pub fn predictions(&self) -> Result<Vec<Prediction>> {
        self.rows
            .iter()
            .map(|r| Prediction::new(r.segment_id.clone(), r.probs.clone()))
            .collect()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.label).collect()
    }

    /// One row's scores as a fusion-layer stream output. Errors when the
    /// table carries no stream column (already-fused tables cannot be fused
    /// again by stream identity).
    pub fn stream_scores(&self, index: usize) -> Result<StreamScores> {
        let stream = self
            .stream
            .ok_or_else(|| Error::invalid("table has no stream column"))?;
        let row = &self.rows[index];
        StreamScores::new(stream, row.probs.clone(), row.feats.clone())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let mut header = vec!["segment_id".to_string(), "label".into(), "stream".into()];
        header.extend((0..self.num_classes).map(|c| format!("p{c}")));
        header.extend((0..self.num_features).map(|f| format!("f{f}")));
        writer
            .write_record(&header)
            .map_err(|e| Error::Parse(e.to_string()))?;
        let stream_name = self.stream.map(StreamId::as_str).unwrap_or("");
        for row in &self.rows {
            let mut record = vec![
                row.segment_id.clone(),
                row.label.to_string(),
                stream_name.to_string(),
            ];
            record.extend(row.probs.iter().map(|p| p.to_string()));
            record.extend(row.feats.iter().map(|f| f.to_string()));
            writer
                .write_record(&record)
                .map_err(|e| Error::Parse(e.to_string()))?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let header = reader
            .headers()
            .map_err(|e| Error::Parse(e.to_string()))?
            .clone();
        let fixed = ["segment_id", "label", "stream"];
        if header.len() < fixed.len() || header.iter().take(3).ne(fixed) {
            return Err(Error::Parse(format!(
                "{}: header must start with segment_id,label,stream",
                path.display()
            )));
        }
        let num_classes = header.iter().filter(|h| h.starts_with('p')).count();
        let num_features = header.iter().filter(|h| h.starts_with('f')).count();
        if num_classes == 0 || fixed.len() + num_classes + num_features != header.len() {
            return Err(Error::Parse(format!(
                "{}: expected p0..pC and f0..fP columns after the fixed three",
                path.display()
            )));
        }

        let mut stream: Option<Option<StreamId>> = None;
        let mut table = ScoreTable::new(None, num_classes, num_features)?;
        for (index, row) in reader.records().enumerate() {
            let line = index + 2; // header is line 1
            let row = row.map_err(|e| Error::MalformedRecord {
                line,
                message: e.to_string(),
            })?;
            let this_stream = match &row[2] {
                "" => None,
                name => Some(StreamId::parse(name).map_err(|e| Error::MalformedRecord {
                    line,
                    message: e.to_string(),
                })?),
            };
            match stream {
                None => stream = Some(this_stream),
                Some(seen) if seen != this_stream => {
                    return Err(Error::MalformedRecord {
                        line,
                        message: "mixed stream ids in one table".into(),
                    })
                }
                Some(_) => {}
            }
            let label: usize = row[1].parse().map_err(|e| Error::MalformedRecord {
                line,
                message: format!("label: {e}"),
            })?;
            let parse_floats = |range: std::ops::Range<usize>| -> Result<Vec<f32>> {
                range
                    .map(|i| {
                        row[i].parse::<f32>().map_err(|e| Error::MalformedRecord {
                            line,
                            message: format!("column {}: {e}", &header[i]),
                        })
                    })
                    .collect()
            };
            let probs = parse_floats(3..3 + num_classes)?;
            let feats = parse_floats(3 + num_classes..header.len())?;
            table
                .push(ScoreRow {
                    segment_id: row[0].to_string(),
                    label,
                    probs,
                    feats,
                })
                .map_err(|e| Error::MalformedRecord {
                    line,
                    message: e.to_string(),
                })?;
        }
        table.stream = stream.flatten();
        Ok(table)
    }
}

/// Checks that every table lists the same segments in the same order with the
/// same labels, which fusion requires before combining rows position-wise.
pub fn check_aligned(tables: &[&ScoreTable]) -> Result<()> {
    let first = match tables.first() {
        Some(t) => t,
        None => return Err(Error::invalid("no score tables to align")),
    };
    for other in &tables[1..] {
        if other.rows.len() != first.rows.len() {
            return Err(Error::invalid(format!(
                "tables disagree on segment count: {} vs {}",
                first.rows.len(),
                other.rows.len()
            )));
        }
        for (a, b) in first.rows.iter().zip(&other.rows) {
            if a.segment_id != b.segment_id {
                return Err(Error::invalid(format!(
                    "segment order differs: {} vs {}",
                    a.segment_id, b.segment_id
                )));
            }
            if a.label != b.label {
                return Err(Error::invalid(format!(
                    "segment {}: labels differ across tables ({} vs {})",
                    a.segment_id, a.label, b.label
                )));
            }
        }
    }
    Ok(())
}
