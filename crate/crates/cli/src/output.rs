//! Artifact writers. Every file is produced from ordered data in one pass,
//! so identical inputs give byte-identical files.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn bytes(&mut self, name: &str, data: &[u8]) -> io::Result<()> {
        let p = self.path(name);
        fs::write(&p, data)?;
        self.written.push(p);
        Ok(())
    }

    pub fn text(&mut self, name: &str, data: &str) -> io::Result<()> {
        self.bytes(name, data.as_bytes())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<()> {
        let mut s = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
        s.push('\n');
        self.text(name, &s)
    }

    pub fn jsonl<T: Serialize>(&mut self, name: &str, rows: &[T]) -> io::Result<()> {
        let mut s = String::new();
        for r in rows {
            s.push_str(&serde_json::to_string(r).map_err(io::Error::other)?);
            s.push('\n');
        }
        self.text(name, &s)
    }
}

/// CSV table accumulated in memory.
pub struct Csv {
    writer: csv::Writer<Vec<u8>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Self { writer }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.writer.write_record(cells).expect("in-memory write");
    }

    pub fn finish(self) -> String {
        let bytes = self.writer.into_inner().expect("in-memory flush");
        String::from_utf8(bytes).expect("cells are utf-8")
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
