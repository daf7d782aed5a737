//! Chunked reading of delimited files into encoded design rows.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::path::{Path, PathBuf};

use rand::seq::IteratorRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::schema::{derive_response, ColumnKind, ResponseSpec, SchemaSpec};
use crate::linalg::DenseMatrix;
use crate::rng::stream_rng;
use crate::scatter::ScatterSummary;

/// A block of consecutive encoded rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMatrixChunk {
    pub design: DenseMatrix<f64>,
    pub response: Option<Vec<f64>>,
    /// Index of the first row among the file's valid (kept) rows.
    pub row_offset: usize,
    /// Valid-row index of every row in `design`.
    pub rows: Vec<usize>,
    /// Rows dropped for missing values while this chunk was read.
    pub dropped: usize,
}

impl ModelMatrixChunk {
    pub fn len(&self) -> usize {
        self.design.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.design.rows() == 0
    }
}

#[derive(Debug, Clone)]
enum ColumnPlan {
    Numeric {
        field: usize,
        offset: usize,
    },
    Categorical {
        field: usize,
        /// Level label to design column; `None` for the contrast reference.
        levels: HashMap<String, Option<usize>>,
    },
}

/// A schema bound to a file header with every categorical's levels fixed.
#[derive(Debug, Clone)]
pub struct ResolvedSchema {
    spec: SchemaSpec,
    names: Vec<String>,
    plan: Vec<ColumnPlan>,
    response: Option<(usize, ResponseSpec)>,
}

fn csv_reader(path: &Path, spec: &SchemaSpec) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    Ok(csv::ReaderBuilder::new()
        .delimiter(spec.delimiter as u8)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: e.to_string(),
    }
}

/// Sorted distinct non-missing values: numerically when every value parses
/// as a number, lexicographically otherwise.
fn sorted_levels(values: BTreeSet<String>) -> Vec<String> {
    let mut levels: Vec<String> = values.into_iter().collect();
    let numeric: Option<Vec<f64>> = levels.iter().map(|v| v.parse::<f64>().ok()).collect();
    if let Some(nums) = numeric {
        let mut pairs: Vec<(f64, String)> = nums.into_iter().zip(levels).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        levels = pairs.into_iter().map(|(_, s)| s).collect();
    }
    levels
}

impl ResolvedSchema {
    /// Binds `spec` to the header of `path`. Categoricals without declared
    /// levels trigger one pre-scan of the file to collect them.
    pub fn resolve(spec: &SchemaSpec, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        spec.validate()?;
        let mut reader = csv_reader(path, spec)?;
        let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
        let find = |name: &str| {
            header.iter().position(|h| h == name).ok_or_else(|| {
                Error::Schema(format!("{}: header has no column {name}", path.display()))
            })
        };
        let fields = spec.columns.iter().map(|c| find(&c.name)).collect::<Result<Vec<_>>>()?;
        let response = match &spec.response {
            Some(r) => Some((find(&r.source)?, r.clone())),
            None => None,
        };

        let undeclared: Vec<usize> = spec
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind == ColumnKind::Categorical && c.levels.is_none())
            .map(|(k, _)| k)
            .collect();
        let mut scanned: HashMap<usize, Vec<String>> = HashMap::new();
        if !undeclared.is_empty() {
            let mut seen: Vec<BTreeSet<String>> = vec![BTreeSet::new(); undeclared.len()];
            for record in reader.records() {
                let record = record.map_err(|e| csv_error(path, e))?;
                for (slot, &k) in seen.iter_mut().zip(&undeclared) {
                    let v = &record[fields[k]];
                    if !spec.is_missing(v) {
                        slot.insert(v.to_string());
                    }
                }
            }
            for (values, &k) in seen.into_iter().zip(&undeclared) {
                if values.is_empty() {
                    return Err(Error::Schema(format!(
                        "{}: categorical column {} has no non-missing values",
                        path.display(),
                        spec.columns[k].name
                    )));
                }
                scanned.insert(k, sorted_levels(values));
            }
        }

        let levels: Vec<Option<Vec<String>>> = spec
            .columns
            .iter()
            .enumerate()
            .map(|(k, c)| match c.kind {
                ColumnKind::Numeric => None,
                ColumnKind::Categorical => Some(match &c.levels {
                    Some(l) => l.iter().map(|l| l.label()).collect(),
                    None => scanned[&k].clone(),
                }),
            })
            .collect();
        let counts: Vec<Option<usize>> = levels.iter().map(|l| l.as_ref().map(Vec::len)).collect();
        let layout = spec.layout(&counts);

        let mut names = Vec::new();
        if spec.intercept {
            names.push("(Intercept)".to_string());
        }
        let mut plan = Vec::with_capacity(spec.columns.len());
        for (k, c) in spec.columns.iter().enumerate() {
            match &levels[k] {
                None => {
                    plan.push(ColumnPlan::Numeric {
                        field: fields[k],
                        offset: names.len(),
                    });
                    names.push(c.name.clone());
                }
                Some(labels) => {
                    let drop_first = layout[k].0;
                    let mut map = HashMap::with_capacity(labels.len());
                    for (j, label) in labels.iter().enumerate() {
                        if drop_first && j == 0 {
                            map.insert(label.clone(), None);
                        } else {
                            map.insert(label.clone(), Some(names.len()));
                            names.push(format!("{}={label}", c.name));
                        }
                    }
                    plan.push(ColumnPlan::Categorical {
                        field: fields[k],
                        levels: map,
                    });
                }
            }
        }
        Ok(Self {
            spec: spec.clone(),
            names,
            plan,
            response,
        })
    }

    pub fn spec(&self) -> &SchemaSpec {
        &self.spec
    }

    pub fn d(&self) -> usize {
        self.names.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.names
    }

    pub fn has_response(&self) -> bool {
        self.response.is_some()
    }

    /// Writes the encoded row into `out` and returns the response, or
    /// `Ok(None)` when a referenced field is missing.
    fn encode(&self, record: &csv::StringRecord, out: &mut [f64]) -> std::result::Result<Option<Option<f64>>, String> {
        out.fill(0.0);
        if self.spec.intercept {
            out[0] = 1.0;
        }
        for (c, col) in self.plan.iter().zip(&self.spec.columns) {
            match c {
                ColumnPlan::Numeric { field, offset } => {
                    let text = &record[*field];
                    if self.spec.is_missing(text) {
                        return Ok(None);
                    }
                    let v: f64 = text
                        .parse()
                        .map_err(|_| format!("column {}: cannot parse {text:?} as a number", col.name))?;
                    if !v.is_finite() {
                        return Err(format!("column {}: non-finite value {text:?}", col.name));
                    }
                    out[*offset] = v;
                }
                ColumnPlan::Categorical { field, levels } => {
                    let text = &record[*field];
                    if self.spec.is_missing(text) {
                        return Ok(None);
                    }
                    match levels.get(text) {
                        Some(Some(j)) => out[*j] = 1.0,
                        Some(None) => {}
                        None => return Err(format!("column {}: undeclared level {text:?}", col.name)),
                    }
                }
            }
        }
        match &self.response {
            None => Ok(Some(None)),
            Some((field, spec)) => Ok(derive_response(&record[*field], spec, &self.spec.missing)?.map(Some)),
        }
    }
}

/// Iterator over encoded chunks of a delimited file.
pub struct ChunkReader {
    path: PathBuf,
    schema: ResolvedSchema,
    reader: csv::Reader<File>,
    record: csv::StringRecord,
    chunk_rows: usize,
    next_row: usize,
    dropped_total: usize,
    done: bool,
}

impl ChunkReader {
    pub fn schema(&self) -> &ResolvedSchema {
        &self.schema
    }

    /// Rows dropped so far for missing values.
    pub fn dropped_total(&self) -> usize {
        self.dropped_total
    }

    /// Valid rows emitted so far.
    pub fn rows_read(&self) -> usize {
        self.next_row
    }

    /// Next kept row as (valid-row index, design row, response).
    fn next_row(&mut self, out: &mut [f64], dropped: &mut usize) -> Result<Option<(usize, Option<f64>)>> {
        loop {
            let more = self
                .reader
                .read_record(&mut self.record)
                .map_err(|e| csv_error(&self.path, e))?;
            if !more {
                return Ok(None);
            }
            match self.schema.encode(&self.record, out) {
                Ok(Some(y)) => {
                    let index = self.next_row;
                    self.next_row += 1;
                    return Ok(Some((index, y)));
                }
                Ok(None) => {
                    *dropped += 1;
                    self.dropped_total += 1;
                }
                Err(message) => {
                    return Err(Error::Parse {
                        path: self.path.display().to_string(),
                        line: self.record.position().map(|p| p.line()).unwrap_or(0),
                        message,
                    })
                }
            }
        }
    }

    fn read_chunk(&mut self) -> Result<Option<ModelMatrixChunk>> {
        let d = self.schema.d();
        let row_offset = self.next_row;
        let mut data = Vec::with_capacity(self.chunk_rows.min(1 << 16) * d);
        let mut response = self.schema.has_response().then(Vec::new);
        let mut rows = Vec::new();
        let mut dropped = 0;
        let mut buf = vec![0.0; d];
        while rows.len() < self.chunk_rows {
            match self.next_row(&mut buf, &mut dropped)? {
                None => {
                    self.done = true;
                    break;
                }
                Some((index, y)) => {
                    data.extend_from_slice(&buf);
                    rows.push(index);
                    if let (Some(resp), Some(y)) = (response.as_mut(), y) {
                        resp.push(y);
                    }
                }
            }
        }
        if rows.is_empty() && dropped == 0 {
            return Ok(None);
        }
        Ok(Some(ModelMatrixChunk {
            design: DenseMatrix::new(rows.len(), d, data)?,
            response,
            row_offset,
            rows,
            dropped,
        }))
    }
}

impl Iterator for ChunkReader {
    type Item = Result<ModelMatrixChunk>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.read_chunk() {
            Ok(chunk) => chunk.map(Ok),
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Streams `path` in chunks of at most `chunk_rows` kept rows. A final
/// chunk with no rows is emitted only to report trailing dropped rows.
pub fn read_chunks(path: impl AsRef<Path>, schema: &SchemaSpec, chunk_rows: usize) -> Result<ChunkReader> {
    let path = path.as_ref();
    let resolved = ResolvedSchema::resolve(schema, path)?;
    open_chunks(path, resolved, chunk_rows)
}

pub fn open_chunks(path: impl AsRef<Path>, schema: ResolvedSchema, chunk_rows: usize) -> Result<ChunkReader> {
    if chunk_rows == 0 {
        return Err(Error::InvalidArgument("chunk_rows must be at least 1".into()));
    }
    let path = path.as_ref();
    let mut reader = csv_reader(path, schema.spec())?;
    reader.headers().map_err(|e| csv_error(path, e))?;
    Ok(ChunkReader {
        path: path.to_path_buf(),
        schema,
        reader,
        record: csv::StringRecord::new(),
        chunk_rows,
        next_row: 0,
        dropped_total: 0,
        done: false,
    })
}

/// All kept rows of a file.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub design: DenseMatrix<f64>,
    pub response: Option<Vec<f64>>,
    pub column_names: Vec<String>,
    pub dropped: usize,
}

pub fn read_dataset(path: impl AsRef<Path>, schema: &SchemaSpec) -> Result<Dataset> {
    let mut reader = read_chunks(path, schema, 1 << 16)?;
    let d = reader.schema().d();
    let column_names = reader.schema().column_names().to_vec();
    let mut data = Vec::new();
    let mut response = reader.schema().has_response().then(Vec::new);
    let mut n = 0;
    for chunk in reader.by_ref() {
        let chunk = chunk?;
        n += chunk.len();
        data.extend_from_slice(chunk.design.as_slice());
        if let (Some(all), Some(part)) = (response.as_mut(), chunk.response) {
            all.extend(part);
        }
    }
    Ok(Dataset {
        design: DenseMatrix::new(n, d, data)?,
        response,
        column_names,
        dropped: reader.dropped_total(),
    })
}

/// Scatter summary of a whole file, accumulated chunk by chunk.
pub fn scatter_from_file(
    path: impl AsRef<Path>,
    schema: &SchemaSpec,
    chunk_rows: usize,
) -> Result<(ScatterSummary<f64>, usize)> {
    let mut reader = read_chunks(path, schema, chunk_rows)?;
    let mut summary = ScatterSummary::new(reader.schema().d());
    for chunk in reader.by_ref() {
        let chunk = chunk?;
        summary.accumulate(&chunk.design, chunk.response.as_deref())?;
    }
    Ok((summary, reader.dropped_total()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum SampleMode {
    /// `size` distinct kept rows drawn uniformly without replacement.
    Random { size: usize, seed: u64 },
    /// The first `size` kept rows.
    Head { size: usize },
}

impl SampleMode {
    pub fn size(self) -> usize {
        match self {
            SampleMode::Random { size, .. } | SampleMode::Head { size } => size,
        }
    }
}

/// Row indices `mode` selects among `n` rows, ascending. On a file with `n`
/// kept rows, [`sample_rows`] selects exactly these rows.
pub fn sample_indices(n: usize, mode: SampleMode) -> Result<Vec<usize>> {
    let size = mode.size();
    if size == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    if size > n {
        return Err(Error::InvalidArgument(format!(
            "sample of {size} rows requested but the data has only {n} valid rows"
        )));
    }
    let mut picked: Vec<usize> = match mode {
        SampleMode::Head { size } => (0..size).collect(),
        SampleMode::Random { size, seed } => (0..n).choose_multiple(&mut stream_rng(seed, 0), size),
    };
    picked.sort_unstable();
    Ok(picked)
}

/// Draws a row sample in one pass (reservoir sampling in random mode).
/// Sampled rows are returned in file order.
pub fn sample_rows(path: impl AsRef<Path>, schema: &SchemaSpec, mode: SampleMode) -> Result<ModelMatrixChunk> {
    let path = path.as_ref();
    let resolved = ResolvedSchema::resolve(schema, path)?;
    sample_resolved(path, resolved, mode)
}

pub fn sample_resolved(path: impl AsRef<Path>, schema: ResolvedSchema, mode: SampleMode) -> Result<ModelMatrixChunk> {
    let size = mode.size();
    if size == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    let d = schema.d();
    let mut reader = open_chunks(path, schema, 1)?;
    let mut failure = None;
    let mut dropped = 0;
    let mut stream = std::iter::from_fn(|| {
        if failure.is_some() {
            return None;
        }
        let mut buf = vec![0.0; d];
        match reader.next_row(&mut buf, &mut dropped) {
            Ok(Some((index, y))) => Some((index, buf, y)),
            Ok(None) => None,
            Err(e) => {
                failure = Some(e);
                None
            }
        }
    });
    let mut picked: Vec<(usize, Vec<f64>, Option<f64>)> = match mode {
        SampleMode::Head { size } => stream.by_ref().take(size).collect(),
        SampleMode::Random { size, seed } => stream.by_ref().choose_multiple(&mut stream_rng(seed, 0), size),
    };
    if let Some(e) = failure {
        return Err(e);
    }
    if picked.len() < size {
        return Err(Error::InvalidArgument(format!(
            "sample of {size} rows requested but the file has only {} valid rows",
            picked.len()
        )));
    }
    picked.sort_unstable_by_key(|p| p.0);
    let has_response = reader.schema().has_response();
    let rows: Vec<usize> = picked.iter().map(|p| p.0).collect();
    let response = has_response.then(|| picked.iter().map(|p| p.2.unwrap_or(f64::NAN)).collect());
    let data: Vec<f64> = picked.into_iter().flat_map(|p| p.1).collect();
    Ok(ModelMatrixChunk {
        design: DenseMatrix::new(rows.len(), d, data)?,
        response,
        row_offset: rows[0],
        rows,
        dropped: reader.dropped_total(),
    })
}
