//! Data sets experiments sample from: a delimited file read in chunks, or a
//! matrix already in memory.

use std::path::{Path, PathBuf};

use concordance_core::ingest::{
    open_chunks, read_dataset, sample_indices, sample_resolved, ModelMatrixChunk, ResolvedSchema, SampleMode,
    SchemaSpec,
};
use concordance_core::{Error, Matrix, Result, Scatter};

pub const DEFAULT_CHUNK_ROWS: usize = 65_536;

pub enum Source {
    File {
        path: PathBuf,
        schema: ResolvedSchema,
        chunk_rows: usize,
    },
    Memory {
        design: Matrix,
        response: Option<Vec<f64>>,
        column_names: Vec<String>,
    },
}

impl Source {
    pub fn file(path: impl AsRef<Path>, schema: &SchemaSpec, chunk_rows: usize) -> Result<Self> {
        let path = path.as_ref();
        if chunk_rows == 0 {
            return Err(Error::InvalidArgument("chunk rows must be at least 1".into()));
        }
        Ok(Source::File {
            schema: ResolvedSchema::resolve(schema, path)?,
            path: path.to_path_buf(),
            chunk_rows,
        })
    }

    pub fn memory(design: Matrix, response: Option<Vec<f64>>) -> Self {
        let column_names = (0..design.cols()).map(|j| format!("x{j}")).collect();
        Source::Memory {
            design,
            response,
            column_names,
        }
    }

    pub fn d(&self) -> usize {
        match self {
            Source::File { schema, .. } => schema.d(),
            Source::Memory { design, .. } => design.cols(),
        }
    }

    pub fn column_names(&self) -> &[String] {
        match self {
            Source::File { schema, .. } => schema.column_names(),
            Source::Memory { column_names, .. } => column_names,
        }
    }

    pub fn has_response(&self) -> bool {
        match self {
            Source::File { schema, .. } => schema.has_response(),
            Source::Memory { response, .. } => response.is_some(),
        }
    }

    /// Scatter of all kept rows, with response cross-products when the data
    /// has a response.
    pub fn total_scatter(&self) -> Result<Scatter> {
        match self {
            Source::File {
                path,
                schema,
                chunk_rows,
            } => {
                let mut summary = Scatter::new(schema.d());
                for chunk in open_chunks(path, schema.clone(), *chunk_rows)? {
                    let chunk = chunk?;
                    summary.accumulate(&chunk.design, chunk.response.as_deref())?;
                }
                Ok(summary)
            }
            Source::Memory { design, response, .. } => Scatter::from_matrix(design, response.as_deref()),
        }
    }

    pub fn sample(&self, mode: SampleMode) -> Result<ModelMatrixChunk> {
        match self {
            Source::File { path, schema, .. } => sample_resolved(path, schema.clone(), mode),
            Source::Memory { design, response, .. } => {
                let rows = sample_indices(design.rows(), mode)?;
                Ok(ModelMatrixChunk {
                    design: design.select_rows(&rows),
                    response: response.as_ref().map(|y| rows.iter().map(|&i| y[i]).collect()),
                    row_offset: rows[0],
                    rows,
                    dropped: 0,
                })
            }
        }
    }

    /// Every kept row in memory.
    pub fn load(&self) -> Result<(Matrix, Option<Vec<f64>>)> {
        match self {
            Source::File { path, schema, .. } => {
                let data = read_dataset(path, schema.spec())?;
                Ok((data.design, data.response))
            }
            Source::Memory { design, response, .. } => Ok((design.clone(), response.clone())),
        }
    }
}
