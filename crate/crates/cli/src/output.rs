//! JSON-lines or CSV record output.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

pub enum Sink {
    Json(Box<dyn Write>),
    Csv(csv::Writer<Box<dyn Write>>),
}

impl Sink {
    /// Standard output when `path` is `None`.
    pub fn open(path: Option<&Path>, csv: bool) -> io::Result<Self> {
        let out: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout())),
        };
        Ok(if csv {
            Sink::Csv(csv::Writer::from_writer(out))
        } else {
            Sink::Json(out)
        })
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> io::Result<()> {
        match self {
            Sink::Json(w) => {
                serde_json::to_writer(&mut *w, record)?;
                w.write_all(b"\n")
            }
            Sink::Csv(w) => w.serialize(record).map_err(io::Error::other),
        }
    }

    pub fn write_all<'a, T: Serialize + 'a>(&mut self, records: impl IntoIterator<Item = &'a T>) -> io::Result<()> {
        for r in records {
            self.write(r)?;
        }
        self.flush()
    }

    pub fn flush(&mut self) -> io::Result<()> {
        match self {
            Sink::Json(w) => w.flush(),
            Sink::Csv(w) => w.flush(),
        }
    }
}
