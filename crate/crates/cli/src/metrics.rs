use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

/// One line of `metrics.jsonl`. Summary rows leave `trial` empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub trial: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub phase: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cycle: Option<usize>,
    pub iteration: Option<u64>,
    pub metric: String,
    pub value: f64,
}

impl MetricRecord {
    pub fn new(metric: impl Into<String>, value: f64) -> Self {
        MetricRecord { trial: None, phase: None, cycle: None, iteration: None, metric: metric.into(), value }
    }

    pub fn trial(mut self, t: usize) -> Self {
        self.trial = Some(t);
        self
    }

    pub fn phase(mut self, p: usize) -> Self {
        self.phase = Some(p);
        self
    }

    pub fn cycle(mut self, c: usize) -> Self {
        self.cycle = Some(c);
        self
    }

    pub fn iteration(mut self, i: u64) -> Self {
        self.iteration = Some(i);
        self
    }
}

pub fn write_jsonl(path: &Path, records: &[MetricRecord]) -> Result<()> {
    let mut f = std::io::BufWriter::new(
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
    );
    for r in records {
        serde_json::to_writer(&mut f, r)?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<MetricRecord>> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), n + 1))?);
    }
    Ok(out)
}
