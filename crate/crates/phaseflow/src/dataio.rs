//! File formats: feature and label ingestion, prediction output, model
//! persistence, and frame-rate post-processing.
//!
//! CSV is the canonical interchange format and always carries a header;
//! JSONL is accepted on ingest. Frame indices in files must run 0, 1, 2, …
//! so silent row loss is caught at parse time. All writers emit the
//! shortest decimal that round-trips each `f64`, making every write/read
//! pair lossless down to the bit.

use crate::error::{Error, Result};
use crate::hmm::HmmModel;
use crate::sequence::{LabelSequence, ObservationSequence, PhaseSet};

use serde::{Deserialize, Serialize};

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// Model file schema understood by this build.
pub const SCHEMA_VERSION: u64 = 1;

/// Streaming reader for per-frame score rows.
///
/// Sniffs the input: a first non-whitespace byte of `{` selects JSONL
/// (`{"frame":n,"scores":[...]}` per line), anything else selects CSV with
/// the mandatory header `frame,c0,...,c{D-1}`. Rows are validated as they
/// are pulled: the frame column must count 0, 1, 2, …, every row must carry
/// exactly `dims()` scores, and every score must be finite. The iterator
/// never reads past the row it yields, so online consumers see frames
/// strictly in arrival order.
pub struct LogprobReader<R: BufRead> {
    inner: Inner<R>,
    dims: usize,
    fps: f64,
    next_frame: usize,
    done: bool,
}

enum Inner<R: BufRead> {
    Csv(csv::StringRecordsIntoIter<R>),
    Jsonl {
        lines: std::io::Lines<R>,
        pending: Option<Vec<f64>>,
        line_no: u64,
    },
}

#[derive(Deserialize)]
struct JsonlRow {
    frame: usize,
    scores: Vec<f64>,
}

impl<R: BufRead> LogprobReader<R> {
    /// Reads the header (CSV) or the first record (JSONL) to learn `D`.
    pub fn new(mut reader: R, fps: f64) -> Result<Self> {
        let looks_like_jsonl = {
            let buf = reader.fill_buf()?;
            buf.iter()
                .find(|b| !b.is_ascii_whitespace())
                .is_some_and(|&b| b == b'{')
        };

        if looks_like_jsonl {
            let mut lines = reader.lines();
            let mut line_no = 0u64;
            let first = loop {
                let Some(line) = lines.next() else {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "JSONL input ended before the first record".into(),
                    });
                };
                line_no += 1;
                let line = line?;
                if !line.trim().is_empty() {
                    break parse_jsonl_row(&line, line_no)?;
                }
            };
            if first.frame != 0 {
                return Err(Error::NonContiguousFrames {
                    line: line_no,
                    expected: 0,
                    actual: first.frame,
                });
            }
            if first.scores.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "record carries zero scores".into(),
                });
            }
            check_finite(&first.scores, line_no)?;
            Ok(Self {
                dims: first.scores.len(),
                inner: Inner::Jsonl {
                    lines,
                    pending: Some(first.scores),
                    line_no,
                },
                fps,
                next_frame: 0,
                done: false,
            })
        } else {
            let mut csv_reader = csv::ReaderBuilder::new()
                .flexible(true)
                .trim(csv::Trim::All)
                .from_reader(reader);
            let headers = csv_reader.headers().map_err(csv_error)?;
            let dims = validate_score_header(headers)?;
            Ok(Self {
                dims,
                inner: Inner::Csv(csv_reader.into_records()),
                fps,
                next_frame: 0,
                done: false,
            })
        }
    }

    /// Score columns per row, `D`.
    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    /// Frames yielded so far.
    pub fn frames_read(&self) -> usize {
        self.next_frame
    }

    fn next_row(&mut self) -> Result<Option<Vec<f64>>> {
        let expected_frame = self.next_frame;
        let dims = self.dims;
        match &mut self.inner {
            Inner::Csv(records) => {
                let Some(record) = records.next() else {
                    return Ok(None);
                };
                let record = record.map_err(csv_error)?;
                let line = record.position().map_or(0, |p| p.line());
                if record.len() != dims + 1 {
                    return Err(Error::RaggedRows {
                        line,
                        expected: dims,
                        actual: record.len().saturating_sub(1),
                    });
                }
                let frame = parse_frame(&record[0], line)?;
                if frame != expected_frame {
                    return Err(Error::NonContiguousFrames {
                        line,
                        expected: expected_frame,
                        actual: frame,
                    });
                }
                let mut row = Vec::with_capacity(dims);
                for field in record.iter().skip(1) {
                    row.push(parse_score(field, line)?);
                }
                Ok(Some(row))
            }
            Inner::Jsonl {
                lines,
                pending,
                line_no,
            } => {
                if let Some(row) = pending.take() {
                    return Ok(Some(row));
                }
                loop {
                    let Some(line) = lines.next() else {
                        return Ok(None);
                    };
                    *line_no += 1;
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let row = parse_jsonl_row(&line, *line_no)?;
                    if row.scores.len() != dims {
                        return Err(Error::RaggedRows {
                            line: *line_no,
                            expected: dims,
                            actual: row.scores.len(),
                        });
                    }
                    if row.frame != expected_frame {
                        return Err(Error::NonContiguousFrames {
                            line: *line_no,
                            expected: expected_frame,
                            actual: row.frame,
                        });
                    }
                    check_finite(&row.scores, *line_no)?;
                    return Ok(Some(row.scores));
                }
            }
        }
    }

    /// Collects every remaining row into a sequence.
    pub fn into_sequence(mut self) -> Result<ObservationSequence> {
        let mut data = Vec::new();
        while let Some(row) = self.next_row()? {
            self.next_frame += 1;
            data.extend_from_slice(&row);
        }
        ObservationSequence::new(data, self.dims, self.fps)
    }
}

impl<R: BufRead> Iterator for LogprobReader<R> {
    type Item = Result<Vec<f64>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.next_row() {
            Ok(Some(row)) => {
                self.next_frame += 1;
                Some(Ok(row))
            }
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

fn parse_jsonl_row(line: &str, line_no: u64) -> Result<JsonlRow> {
    serde_json::from_str(line).map_err(|e| Error::Parse {
        line: line_no,
        msg: format!("invalid JSONL record: {e}"),
    })
}

fn check_finite(scores: &[f64], line: u64) -> Result<()> {
    if scores.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Parse {
            line,
            msg: "non-finite score".into(),
        })
    }
}

fn parse_frame(field: &str, line: u64) -> Result<usize> {
    field.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid frame index {field:?}"),
    })
}

fn parse_score(field: &str, line: u64) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid score {field:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: "non-finite score".into(),
        });
    }
    Ok(v)
}

fn validate_score_header(headers: &csv::StringRecord) -> Result<usize> {
    let err = |msg: String| Error::Parse { line: 1, msg };
    if headers.len() < 2 || &headers[0] != "frame" {
        return Err(err(format!(
            "expected header frame,c0,...; got {:?}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    for (i, field) in headers.iter().skip(1).enumerate() {
        if field != format!("c{i}") {
            return Err(err(format!(
                "expected score column c{i}, got {field:?}"
            )));
        }
    }
    Ok(headers.len() - 1)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, csv::Position::line);
    Error::Parse {
        line,
        msg: e.to_string(),
    }
}

/// Reads a feature file (CSV or JSONL) into an observation sequence.
pub fn read_logprobs<P: AsRef<Path>>(path: P, fps: f64) -> Result<ObservationSequence> {
    let reader = BufReader::new(File::open(path)?);
    LogprobReader::new(reader, fps)?.into_sequence()
}

/// Writes a feature CSV with the header `frame,c0,...,c{D-1}`.
pub fn write_logprobs<P: AsRef<Path>>(obs: &ObservationSequence, path: P) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "frame")?;
    for i in 0..obs.dims() {
        write!(w, ",c{i}")?;
    }
    writeln!(w)?;
    for (t, row) in obs.rows().enumerate() {
        write!(w, "{t}")?;
        for v in row {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a label CSV with the header `frame,phase`.
///
/// The phase column holds either integer indices or exact phase names.
/// Names require `phases`; when `phases` is given, integer labels are also
/// range-checked against it.
pub fn read_labels<P: AsRef<Path>>(
    path: P,
    fps: f64,
    phases: Option<&PhaseSet>,
) -> Result<LabelSequence> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(File::open(path)?));

    let headers = reader.headers().map_err(csv_error)?;
    if headers.len() != 2 || &headers[0] != "frame" || &headers[1] != "phase" {
        return Err(Error::Parse {
            line: 1,
            msg: format!(
                "expected header frame,phase; got {:?}",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(Error::RaggedRows {
                line,
                expected: 1,
                actual: record.len().saturating_sub(1),
            });
        }
        let frame = parse_frame(&record[0], line)?;
        if frame != labels.len() {
            return Err(Error::NonContiguousFrames {
                line,
                expected: labels.len(),
                actual: frame,
            });
        }
        labels.push(parse_phase(&record[1], line, phases)?);
    }
    LabelSequence::new(labels, fps)
}

fn parse_phase(field: &str, line: u64, phases: Option<&PhaseSet>) -> Result<usize> {
    if let Ok(index) = field.parse::<usize>() {
        if let Some(ps) = phases {
            if index >= ps.len() {
                return Err(Error::Parse {
                    line,
                    msg: format!("phase index {index} out of range for {} phases", ps.len()),
                });
            }
        }
        return Ok(index);
    }
    let Some(ps) = phases else {
        return Err(Error::Parse {
            line,
            msg: format!("phase {field:?} is not an integer and no phase set was supplied"),
        });
    };
    ps.index_of(field).ok_or_else(|| Error::Parse {
        line,
        msg: format!("unknown phase name {field:?}"),
    })
}

/// Writes a label CSV with integer phase indices.
pub fn write_labels<P: AsRef<Path>>(labels: &LabelSequence, path: P) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "frame,phase")?;
    for (t, l) in labels.labels().iter().enumerate() {
        writeln!(w, "{t},{l}")?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a label CSV with phase names resolved through `phases`.
pub fn write_labels_named<P: AsRef<Path>>(
    labels: &LabelSequence,
    path: P,
    phases: &PhaseSet,
) -> Result<()> {
    labels.check_range(phases.len())?;
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "frame,phase")?;
    for (t, &l) in labels.labels().iter().enumerate() {
        writeln!(w, "{t},{}", phases.name(l).expect("range checked above"))?;
    }
    w.flush()?;
    Ok(())
}

/// Expands 1 Hz predictions back to the native video frame rate.
///
/// Each label is repeated `factor` times; the result is cropped to
/// `target_frames` if longer and padded by repeating the final label if
/// shorter. The output frame rate is `fps * factor`.
pub fn upsample(
    pred: &LabelSequence,
    factor: usize,
    target_frames: usize,
) -> Result<LabelSequence> {
    if factor == 0 {
        return Err(Error::InvalidParameter(
            "upsample factor must be at least 1".into(),
        ));
    }
    let fps_out = pred.fps() * factor as f64;
    if pred.is_empty() {
        if target_frames > 0 {
            return Err(Error::EmptyInputWithPositiveTarget {
                target: target_frames,
            });
        }
        return LabelSequence::new(Vec::new(), fps_out);
    }
    let mut out = Vec::with_capacity(target_frames);
    'replicate: for &label in pred.labels() {
        for _ in 0..factor {
            if out.len() == target_frames {
                break 'replicate;
            }
            out.push(label);
        }
    }
    let last = *pred.labels().last().expect("non-empty checked above");
    out.resize(target_frames, last);
    LabelSequence::new(out, fps_out)
}

/// Writes a per-frame comparison CSV with the header
/// `frame,time_s,pred,gt,match`.
pub fn write_frame_dump<P: AsRef<Path>>(
    records: &[crate::metrics::FrameRecord],
    path: P,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "frame,time_s,pred,gt,match")?;
    for r in records {
        writeln!(w, "{},{},{},{},{}", r.frame, r.time_s, r.pred, r.gt, r.matches)?;
    }
    w.flush()?;
    Ok(())
}

/// On-disk model schema.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema_version: u64,
    phases: Vec<String>,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "D")]
    d: usize,
    initial: Vec<f64>,
    transition: Vec<Vec<f64>>,
    means: Vec<Vec<f64>>,
    covariances: Vec<Vec<Vec<f64>>>,
}

/// Saves a model with its phase vocabulary as pretty-printed JSON.
///
/// Parameters are encoded as shortest round-tripping decimals, so a
/// save/load cycle reproduces each `f64` bit-exactly.
pub fn save_model<P: AsRef<Path>>(model: &HmmModel, phases: &PhaseSet, path: P) -> Result<()> {
    let k = model.k();
    let d = model.dims();
    if phases.len() != k {
        return Err(Error::InvalidParameter(format!(
            "phase set has {} names, model has {k} states",
            phases.len()
        )));
    }
    let file = ModelFile {
        schema_version: SCHEMA_VERSION,
        phases: phases.names().to_vec(),
        k,
        d,
        initial: model.initial().to_vec(),
        transition: chunk2(model.transition(), k),
        means: chunk2(model.means(), d),
        covariances: model
            .covariances()
            .chunks_exact(d * d)
            .map(|m| chunk2(m, d))
            .collect(),
    };
    let json = serde_json::to_string_pretty(&file).expect("model file serializes");
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(json.as_bytes())?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn chunk2(flat: &[f64], width: usize) -> Vec<Vec<f64>> {
    flat.chunks_exact(width).map(<[f64]>::to_vec).collect()
}

/// Loads and validates a model saved by [`save_model`].
pub fn load_model<P: AsRef<Path>>(path: P) -> Result<(HmmModel, PhaseSet)> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line() as u64,
        msg: e.to_string(),
    })?;
    let version = value
        .get("schema_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::Parse {
            line: 1,
            msg: "model file is missing an integer schema_version".into(),
        })?;
    if version != SCHEMA_VERSION {
        return Err(Error::UnsupportedSchemaVersion {
            found: version,
            supported: SCHEMA_VERSION,
        });
    }
    let file: ModelFile = serde_json::from_value(value).map_err(|e| Error::Parse {
        line: 1,
        msg: format!("invalid model file: {e}"),
    })?;

    let (k, d) = (file.k, file.d);
    let bad = |msg: String| Error::InvariantViolation(msg);
    if file.phases.len() != k {
        return Err(bad(format!(
            "file declares K = {k} but lists {} phases",
            file.phases.len()
        )));
    }
    if file.initial.len() != k {
        return Err(bad(format!(
            "initial distribution has {} entries, expected {k}",
            file.initial.len()
        )));
    }
    let transition = flatten2(&file.transition, k, k, "transition")?;
    let means = flatten2(&file.means, k, d, "means")?;
    if file.covariances.len() != k {
        return Err(bad(format!(
            "covariances list {} states, expected {k}",
            file.covariances.len()
        )));
    }
    let mut covariances = Vec::with_capacity(k * d * d);
    for (s, m) in file.covariances.iter().enumerate() {
        covariances.extend(flatten2(m, d, d, &format!("covariance of state {s}"))?);
    }

    let phases = PhaseSet::new(file.phases)
        .map_err(|e| bad(format!("phase names: {e}")))?;
    let model = HmmModel::new(file.initial, transition, means, covariances)?;
    if model.dims() != d {
        return Err(bad(format!(
            "file declares D = {d} but means have width {}",
            model.dims()
        )));
    }
    Ok((model, phases))
}

fn flatten2(rows: &[Vec<f64>], outer: usize, inner: usize, what: &str) -> Result<Vec<f64>> {
    if rows.len() != outer {
        return Err(Error::InvariantViolation(format!(
            "{what} has {} rows, expected {outer}",
            rows.len()
        )));
    }
    let mut flat = Vec::with_capacity(outer * inner);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != inner {
            return Err(Error::InvariantViolation(format!(
                "{what} row {i} has {} entries, expected {inner}",
                row.len()
            )));
        }
        flat.extend_from_slice(row);
    }
    Ok(flat)
}
