//! Delimited-file ingestion and model-matrix encoding.

mod reader;
mod schema;

pub use reader::{
    open_chunks, read_chunks, read_dataset, sample_indices, sample_resolved, sample_rows, scatter_from_file, ChunkReader, Dataset,
    ModelMatrixChunk, ResolvedSchema, SampleMode,
};
pub use schema::{derive_response, ColumnKind, ColumnSpec, Encoding, Level, ResponseRule, ResponseSpec, SchemaSpec};
