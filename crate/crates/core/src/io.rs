//! File formats: ratings CSV, opinions and other structured outputs as JSON,
//! traces as NDJSON.
//!
//! JSON objects are written with sorted keys and every float with 17
//! significant digits, so a file parses back to bit-identical values. All
//! writes go to a temporary file in the target directory that is renamed
//! into place once complete.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::diagnostics::{trace_statistics, TRACE_STATISTICS};
use crate::error::{Error, Result};
use crate::generative::GroundTruth;
use crate::inference::{PosteriorSummary, SamplerConfig, Trace};
use crate::model::{GibbsState, Opinion, Rating, RatingMatrix};

/// External string ids of the dense trustor and trustee indices.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IdMap {
    pub trustors: Vec<String>,
    pub trustees: Vec<String>,
}

impl IdMap {
    /// Ids `i0, i1, ...` and `j0, j1, ...`.
    pub fn dense(num_trustors: usize, num_trustees: usize) -> Self {
        Self {
            trustors: (0..num_trustors).map(|i| format!("i{i}")).collect(),
            trustees: (0..num_trustees).map(|j| format!("j{j}")).collect(),
        }
    }

    fn check(&self, ratings: &RatingMatrix) -> Result<()> {
        if self.trustors.len() != ratings.num_trustors()
            || self.trustees.len() != ratings.num_trustees()
        {
            return Err(Error::KeyMismatch(format!(
                "id map has {}x{} ids, ratings are {}x{}",
                self.trustors.len(),
                self.trustees.len(),
                ratings.num_trustors(),
                ratings.num_trustees()
            )));
        }
        Ok(())
    }
}

/// Writes `path` through a temporary sibling file and an atomic rename.
pub fn write_atomic<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<&mut File>) -> Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        write(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Formatter writing floats as `d.ddddddddddddddddde±x` (17 significant
/// digits), optionally pretty-printed.
struct ExactFloats {
    pretty: Option<PrettyFormatter<'static>>,
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            match &mut self.pretty {
                Some(p) => p.$name(writer $(, $arg)*),
                None => serde_json::ser::CompactFormatter.$name(writer $(, $arg)*),
            }
        })*
    };
}

impl Formatter for ExactFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );
}

fn to_sorted_value<T: Serialize>(value: &T) -> Result<serde_json::Value> {
    // serde_json's map is ordered by key unless `preserve_order` is enabled
    Ok(serde_json::to_value(value)?)
}

/// Serializes `value` as JSON with sorted keys and exact floats.
pub fn write_json<W: Write, T: Serialize>(writer: W, value: &T, pretty: bool) -> Result<()> {
    let v = to_sorted_value(value)?;
    let fmt = ExactFloats {
        pretty: pretty.then(|| PrettyFormatter::with_indent(b"  ")),
    };
    let mut ser = serde_json::Serializer::with_formatter(writer, fmt);
    v.serialize(&mut ser)?;
    Ok(())
}

pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        write_json(&mut *w, value, true)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

pub fn read_json_file<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let reader = BufReader::new(File::open(path)?);
    Ok(serde_json::from_reader(reader)?)
}

const RATINGS_HEADER: [&str; 3] = ["trustor", "trustee", "rating"];

/// Parses a ratings CSV with header `trustor,trustee,rating`. Ids are
/// arbitrary strings, numbered densely in order of first appearance.
pub fn read_ratings_csv<R: Read>(reader: R, levels: u32) -> Result<(RatingMatrix, IdMap)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r?,
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "missing header `trustor,trustee,rating`".into(),
            })
        }
    };
    if header.iter().collect::<Vec<_>>() != RATINGS_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header `trustor,trustee,rating`, found `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut ids = IdMap::default();
    let mut trustor_index: HashMap<String, usize> = HashMap::new();
    let mut trustee_index: HashMap<String, usize> = HashMap::new();
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    let mut entries = Vec::new();
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let (a, b, r) = (&record[0], &record[1], &record[2]);
        if a.is_empty() || b.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty id".into(),
            });
        }
        let rating: i64 = r.parse().map_err(|_| Error::Parse {
            line,
            message: format!("rating `{r}` is not an integer"),
        })?;
        if rating < 1 || rating > levels as i64 {
            return Err(Error::RatingOutOfRange {
                line,
                rating,
                levels,
            });
        }
        let i = *trustor_index.entry(a.to_string()).or_insert_with(|| {
            ids.trustors.push(a.to_string());
            ids.trustors.len() - 1
        });
        let j = *trustee_index.entry(b.to_string()).or_insert_with(|| {
            ids.trustees.push(b.to_string());
            ids.trustees.len() - 1
        });
        if seen.insert((i, j), line).is_some() {
            return Err(Error::DuplicateEdge {
                line,
                trustor: a.to_string(),
                trustee: b.to_string(),
            });
        }
        entries.push(Rating {
            trustor: i,
            trustee: j,
            level: rating as u32,
        });
    }
    let matrix = RatingMatrix::new(ids.trustors.len(), ids.trustees.len(), levels, entries)?;
    Ok((matrix, ids))
}

pub fn load_ratings_csv(path: &Path, levels: u32) -> Result<(RatingMatrix, IdMap)> {
    read_ratings_csv(BufReader::new(File::open(path)?), levels)
}

pub fn write_ratings_csv<W: Write>(writer: W, ratings: &RatingMatrix, ids: &IdMap) -> Result<()> {
    ids.check(ratings)?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RATINGS_HEADER)?;
    for r in ratings.entries() {
        w.write_record([
            ids.trustors[r.trustor].as_str(),
            ids.trustees[r.trustee].as_str(),
            &r.level.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_ratings_csv(path: &Path, ratings: &RatingMatrix, ids: &IdMap) -> Result<()> {
    write_atomic(path, |w| write_ratings_csv(w, ratings, ids))
}

/// One edge of the exported opinions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionRecord {
    pub trustor: String,
    pub trustee: String,
    pub alpha_mean: f64,
    pub beta_mean: f64,
    pub gamma_mean: f64,
    pub lambda_mean: f64,
    /// `[alpha, beta, gamma]`
    pub rounded: [u32; 3],
    pub bias_mean: f64,
    pub expected_belief_mean: f64,
    pub expected_belief_ci90: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionsFile {
    pub edges: Vec<OpinionRecord>,
    /// Posterior mean `[b, d, n]` per trustee id.
    pub behaviors: BTreeMap<String, [f64; 3]>,
    /// Posterior mean bias per trustor id.
    pub biases: BTreeMap<String, f64>,
    pub epsilon_mean: f64,
    pub theta_means: Vec<f64>,
    pub samples: usize,
}

impl OpinionsFile {
    pub fn new(summary: &PosteriorSummary, ids: &IdMap) -> Result<Self> {
        if summary.edges.is_empty() {
            return Err(Error::Precondition("summary has no edges".into()));
        }
        if ids.trustors.len() != summary.biases.len()
            || ids.trustees.len() != summary.behaviors.len()
        {
            return Err(Error::KeyMismatch("id map does not match summary".into()));
        }
        Ok(Self {
            edges: summary
                .edges
                .iter()
                .map(|e| OpinionRecord {
                    trustor: ids.trustors[e.trustor].clone(),
                    trustee: ids.trustees[e.trustee].clone(),
                    alpha_mean: e.alpha_mean,
                    beta_mean: e.beta_mean,
                    gamma_mean: e.gamma_mean,
                    lambda_mean: e.lambda_mean,
                    rounded: e.rounded.counts(),
                    bias_mean: e.bias_mean,
                    expected_belief_mean: e.expected_belief_mean,
                    expected_belief_ci90: e.expected_belief_ci90,
                })
                .collect(),
            behaviors: ids
                .trustees
                .iter()
                .cloned()
                .zip(summary.behaviors.iter().copied())
                .collect(),
            biases: ids
                .trustors
                .iter()
                .cloned()
                .zip(summary.biases.iter().copied())
                .collect(),
            epsilon_mean: summary.epsilon_mean,
            theta_means: summary.theta_means.clone(),
            samples: summary.samples,
        })
    }
}

pub fn export_opinions_json(summary: &PosteriorSummary, ids: &IdMap, path: &Path) -> Result<()> {
    write_json_file(path, &OpinionsFile::new(summary, ids)?)
}

pub fn read_opinions_json(path: &Path) -> Result<OpinionsFile> {
    read_json_file(path)
}

/// First line of a trace file: everything needed to interpret the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub format: String,
    pub config: SamplerConfig,
    pub ids: IdMap,
    pub levels: u32,
    /// Observed edges as `[trustor, trustee, rating]`.
    pub ratings: Vec<[u64; 3]>,
    pub statistics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SampleRecord {
    iteration: u64,
    statistics: Vec<f64>,
    state: GibbsState,
}

pub const TRACE_FORMAT: &str = "opinionforge-trace/1";

/// Writes a trace as NDJSON: one header line, then one line per retained
/// sample with its monitored statistics and state.
pub fn write_trace<W: Write>(
    mut writer: W,
    trace: &Trace,
    ratings: &RatingMatrix,
    ids: &IdMap,
) -> Result<()> {
    ids.check(ratings)?;
    let header = TraceHeader {
        format: TRACE_FORMAT.into(),
        config: trace.config.clone(),
        ids: ids.clone(),
        levels: ratings.levels(),
        ratings: ratings
            .entries()
            .iter()
            .map(|r| [r.trustor as u64, r.trustee as u64, r.level as u64])
            .collect(),
        statistics: TRACE_STATISTICS.iter().map(|s| s.to_string()).collect(),
    };
    write_json(&mut writer, &header, false)?;
    writer.write_all(b"\n")?;
    for s in &trace.samples {
        let record = SampleRecord {
            iteration: s.iteration,
            statistics: trace_statistics(s, ratings, &trace.config).to_vec(),
            state: s.clone(),
        };
        write_json(&mut writer, &record, false)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_trace(path: &Path, trace: &Trace, ratings: &RatingMatrix, ids: &IdMap) -> Result<()> {
    write_atomic(path, |w| write_trace(w, trace, ratings, ids))
}

/// A trace file read back: the samples and the ratings they were drawn for.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedTrace {
    pub trace: Trace,
    pub ratings: RatingMatrix,
    pub ids: IdMap,
}

pub fn read_trace<R: Read>(reader: R) -> Result<LoadedTrace> {
    let mut lines = BufReader::new(reader).lines();
    let first = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "empty trace file".into(),
    })??;
    let header: TraceHeader = serde_json::from_str(&first).map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if header.format != TRACE_FORMAT {
        return Err(Error::Parse {
            line: 1,
            message: format!("unsupported trace format `{}`", header.format),
        });
    }
    let entries = header
        .ratings
        .iter()
        .map(|&[i, j, l]| Rating {
            trustor: i as usize,
            trustee: j as usize,
            level: l as u32,
        })
        .collect();
    let ratings = RatingMatrix::new(
        header.ids.trustors.len(),
        header.ids.trustees.len(),
        header.levels,
        entries,
    )?;
    let mut samples = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SampleRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: k + 2,
            message: e.to_string(),
        })?;
        record.state.validate(&ratings, header.config.lambda_max)?;
        samples.push(record.state);
    }
    Ok(LoadedTrace {
        trace: Trace {
            samples,
            config: header.config,
        },
        ratings,
        ids: header.ids,
    })
}

pub fn load_trace(path: &Path) -> Result<LoadedTrace> {
    read_trace(File::open(path)?)
}

/// Ground truth of a synthetic data set together with the latent opinions
/// drawn for it, in the edge order of the generated ratings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub truth: GroundTruth,
    pub ids: IdMap,
    pub opinions: Vec<Opinion>,
}

/// Provenance record of one CLI run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub input: Option<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub arguments: Vec<String>,
    pub config: Option<SamplerConfig>,
    pub seed: u64,
    pub duration_seconds: f64,
}
