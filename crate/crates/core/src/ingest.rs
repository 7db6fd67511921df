//! Parsing and validation of subjective-test data files.
//!
//! Two layouts are accepted, both delimiter-separated UTF-8 text with a
//! mandatory header row (see `docs/formats.md` at the repository root):
//!
//! * raw votes: `file_id, subject_id, vote` — one row per vote; MOS, vote
//!   count, and per-file variance are computed here,
//! * per-file summaries: `file_id, mos, n_votes, vote_var | vote_std` — the
//!   variance columns are optional and mutually exclusive per row.
//!
//! Comment lines start with `#`. Header names are matched case-insensitively
//! and the delimiter (comma, semicolon, or tab) is sniffed from the header.
//! Numbers use the decimal point only.

use crate::estimate::{FileRecord, MosDataset, VarianceConvention};
use crate::scale::{MosLattice, RatingScale};
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufReader, Read, Write};
use std::path::Path;
use thiserror::Error;

pub mod fixtures;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("file has no data rows")]
    EmptyFile,
    #[error("missing required column {0:?}")]
    MissingColumn(&'static str),
    #[error("row may carry a variance or a standard deviation, not both (line {line})")]
    ConflictingVariance { line: u64 },
    #[error("malformed row at line {line}: {message}")]
    MalformedRow { line: u64, message: String },
    #[error("vote {value} at line {line} is not a level of the declared scale")]
    OffScaleVote { line: u64, value: f64 },
    #[error("duplicate vote for file {file_id:?} by subject {subject_id:?} at line {line}")]
    DuplicateVote {
        line: u64,
        file_id: String,
        subject_id: String,
    },
    #[error("MOS {value} at line {line} is outside the scale range")]
    OutOfRangeMos { line: u64, value: f64 },
    #[error("negative variance {value} at line {line}")]
    NegativeVariance { line: u64, value: f64 },
    #[error("vote count at line {line} must be a positive integer")]
    BadVoteCount { line: u64 },
    #[error("dataset has a file with raw votes missing; cannot write a votes file")]
    MissingRawVotes,
}

/// Non-fatal findings collected during parsing.
#[derive(Debug, Clone, PartialEq)]
pub enum IngestWarning {
    /// A MOS is not reachable by averaging `n_votes` scale levels. Published
    /// datasets often round MOS values, so this is not an error.
    OffLatticeMos {
        file_id: String,
        mos: f64,
        n_votes: usize,
    },
}

impl fmt::Display for IngestWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IngestWarning::OffLatticeMos {
                file_id,
                mos,
                n_votes,
            } => write!(
                f,
                "file {file_id:?}: MOS {mos} is off the {n_votes}-vote lattice (rounded input?)"
            ),
        }
    }
}

/// A parsed dataset plus any warnings raised while reading it.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: MosDataset,
    pub warnings: Vec<IngestWarning>,
}

fn sniff_delimiter(text: &str) -> u8 {
    for line in text.lines() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let candidates = b",;\t";
        return *candidates
            .iter()
            .max_by_key(|&&d| t.bytes().filter(|&b| b == d).count())
            .unwrap();
    }
    b','
}

fn reader_from(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .delimiter(sniff_delimiter(text))
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes())
}

fn header_index(headers: &csv::StringRecord, names: &[&str]) -> Option<usize> {
    headers.iter().position(|h| {
        let h = h.trim().to_ascii_lowercase();
        names.iter().any(|n| h == *n)
    })
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn parse_f64(field: &str, line: u64, what: &str) -> Result<f64, IngestError> {
    let v: f64 = field.parse().map_err(|_| IngestError::MalformedRow {
        line,
        message: format!("cannot parse {what} from {field:?}"),
    })?;
    if !v.is_finite() {
        return Err(IngestError::MalformedRow {
            line,
            message: format!("{what} must be finite, got {field:?}"),
        });
    }
    Ok(v)
}

/// Loads a raw-votes file from a path.
pub fn load_votes(
    path: impl AsRef<Path>,
    scale: RatingScale,
    convention: VarianceConvention,
) -> Result<LoadedDataset, IngestError> {
    let name = dataset_name(path.as_ref());
    let file = std::fs::File::open(path)?;
    load_votes_from_reader(file, scale, convention, &name)
}

/// Loads a raw-votes file from any reader.
pub fn load_votes_from_reader(
    reader: impl Read,
    scale: RatingScale,
    convention: VarianceConvention,
    provenance: &str,
) -> Result<LoadedDataset, IngestError> {
    let mut text = String::new();
    BufReader::new(reader).read_to_string(&mut text)?;
    let mut rdr = reader_from(&text);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let col_file = header_index(&headers, &["file_id", "file"])
        .ok_or(IngestError::MissingColumn("file_id"))?;
    let col_subject = header_index(&headers, &["subject_id", "subject"])
        .ok_or(IngestError::MissingColumn("subject_id"))?;
    let col_vote =
        header_index(&headers, &["vote", "rating"]).ok_or(IngestError::MissingColumn("vote"))?;

    let mut order: Vec<String> = Vec::new();
    let mut votes: HashMap<String, Vec<f64>> = HashMap::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record_line(&record);
        let file_id = record.get(col_file).unwrap_or("").to_string();
        let subject_id = record.get(col_subject).unwrap_or("").to_string();
        if file_id.is_empty() || subject_id.is_empty() {
            return Err(IngestError::MalformedRow {
                line,
                message: "empty file_id or subject_id".into(),
            });
        }
        let vote = parse_f64(record.get(col_vote).unwrap_or(""), line, "vote")?;
        if !on_scale_level(scale, vote) {
            return Err(IngestError::OffScaleVote { line, value: vote });
        }
        if !seen.insert((file_id.clone(), subject_id.clone())) {
            return Err(IngestError::DuplicateVote {
                line,
                file_id,
                subject_id,
            });
        }
        votes
            .entry(file_id.clone())
            .or_insert_with(|| {
                order.push(file_id.clone());
                Vec::new()
            })
            .push(vote);
    }
    if order.is_empty() {
        return Err(IngestError::EmptyFile);
    }
    let files: Vec<FileRecord> = order
        .into_iter()
        .map(|id| {
            let vs = votes.remove(&id).unwrap();
            FileRecord::from_votes(id, vs, convention)
        })
        .collect();
    Ok(LoadedDataset {
        dataset: MosDataset {
            scale,
            provenance: provenance.to_string(),
            files,
        },
        warnings: Vec::new(),
    })
}

/// Loads a per-file summary (MOS) file from a path.
pub fn load_mos(path: impl AsRef<Path>, scale: RatingScale) -> Result<LoadedDataset, IngestError> {
    let name = dataset_name(path.as_ref());
    let file = std::fs::File::open(path)?;
    load_mos_from_reader(file, scale, &name)
}

/// Loads a per-file summary (MOS) file from any reader.
pub fn load_mos_from_reader(
    reader: impl Read,
    scale: RatingScale,
    provenance: &str,
) -> Result<LoadedDataset, IngestError> {
    let mut text = String::new();
    BufReader::new(reader).read_to_string(&mut text)?;
    let mut rdr = reader_from(&text);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let col_file = header_index(&headers, &["file_id", "file"])
        .ok_or(IngestError::MissingColumn("file_id"))?;
    let col_mos = header_index(&headers, &["mos"]).ok_or(IngestError::MissingColumn("mos"))?;
    let col_n = header_index(&headers, &["n_votes", "votes", "n"])
        .ok_or(IngestError::MissingColumn("n_votes"))?;
    let col_var = header_index(&headers, &["vote_var", "vote_variance", "variance"]);
    let col_std = header_index(&headers, &["vote_std", "vote_stddev", "stddev", "std"]);

    let mut files = Vec::new();
    let mut warnings = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record_line(&record);
        let file_id = record.get(col_file).unwrap_or("").to_string();
        if file_id.is_empty() {
            return Err(IngestError::MalformedRow {
                line,
                message: "empty file_id".into(),
            });
        }
        let mos = parse_f64(record.get(col_mos).unwrap_or(""), line, "mos")?;
        if !scale.contains(mos) {
            return Err(IngestError::OutOfRangeMos { line, value: mos });
        }
        let n_field = record.get(col_n).unwrap_or("");
        let n_votes: usize = n_field
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or(IngestError::BadVoteCount { line })?;

        let var_field = col_var.map(|c| record.get(c).unwrap_or("")).unwrap_or("");
        let std_field = col_std.map(|c| record.get(c).unwrap_or("")).unwrap_or("");
        let vote_variance = match (var_field.is_empty(), std_field.is_empty()) {
            (false, false) => return Err(IngestError::ConflictingVariance { line }),
            (false, true) => {
                let v = parse_f64(var_field, line, "vote variance")?;
                if v < 0.0 {
                    return Err(IngestError::NegativeVariance { line, value: v });
                }
                Some(v)
            }
            (true, false) => {
                let s = parse_f64(std_field, line, "vote standard deviation")?;
                if s < 0.0 {
                    return Err(IngestError::NegativeVariance { line, value: s });
                }
                Some(s * s)
            }
            (true, true) => None,
        };
        // A single vote has no within-file spread.
        let vote_variance = if n_votes == 1 { None } else { vote_variance };

        if let Ok(lattice) = MosLattice::new(scale, n_votes) {
            let k = lattice.nearest_index(mos);
            if (mos - lattice.point(k)).abs() > 1e-6 {
                warnings.push(IngestWarning::OffLatticeMos {
                    file_id: file_id.clone(),
                    mos,
                    n_votes,
                });
            }
        }
        files.push(FileRecord {
            file_id,
            mos,
            n_votes,
            vote_variance,
            raw_votes: None,
        });
    }
    if files.is_empty() {
        return Err(IngestError::EmptyFile);
    }
    Ok(LoadedDataset {
        dataset: MosDataset {
            scale,
            provenance: provenance.to_string(),
            files,
        },
        warnings,
    })
}

/// Writes a dataset back out as a raw-votes file. Every file record must
/// carry raw votes.
pub fn write_votes(ds: &MosDataset, mut writer: impl Write) -> Result<(), IngestError> {
    writeln!(writer, "file_id,subject_id,vote")?;
    for f in &ds.files {
        let votes = f.raw_votes.as_ref().ok_or(IngestError::MissingRawVotes)?;
        for (j, v) in votes.iter().enumerate() {
            writeln!(writer, "{},s{:03},{}", f.file_id, j, v)?;
        }
    }
    Ok(())
}

fn on_scale_level(scale: RatingScale, vote: f64) -> bool {
    if !scale.contains(vote) {
        return false;
    }
    let k = ((vote - scale.lo()) / scale.step()).round();
    let k = (k.max(0.0) as usize).min(scale.n_levels() - 1);
    (vote - scale.level(k)).abs() <= 1e-9
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string())
}

fn csv_error(e: csv::Error) -> IngestError {
    let line = match e.position() {
        Some(p) => p.line(),
        None => 0,
    };
    IngestError::MalformedRow {
        line,
        message: e.to_string(),
    }
}
