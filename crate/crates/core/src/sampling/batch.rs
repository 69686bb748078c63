use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::ChainConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    HitAndRun,
    Exact,
}

impl SamplerKind {
    fn as_str(self) -> &'static str {
        match self {
            SamplerKind::HitAndRun => "hit-and-run",
            SamplerKind::Exact => "exact",
        }
    }
}

/// A batch of points stored row-major in one flat buffer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub descriptor: String,
    pub config: ChainConfig,
    pub sampler: SamplerKind,
    dim: usize,
    data: Vec<f64>,
}

impl SampleBatch {
    pub fn new(descriptor: String, config: ChainConfig, sampler: SamplerKind, dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0 && data.len() % dim == 0, "flat buffer does not hold whole points");
        Self { descriptor, config, sampler, dim, data }
    }

    /// Synthetic batch (for estimator tests), with a default configuration.
    pub fn from_points(descriptor: &str, points: &[Vec<f64>]) -> Self {
        let dim = points.first().map_or(1, Vec::len);
        let data = points.iter().flatten().copied().collect();
        Self::new(descriptor.to_string(), ChainConfig::new(0), SamplerKind::Exact, dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// The batch pushed through `f` point by point (e.g. a linear map).
    pub fn map_points<F: Fn(&[f64]) -> Vec<f64>>(&self, descriptor: String, f: F) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for p in self.points() {
            data.extend(f(p));
        }
        let dim = data.len() / self.count().max(1);
        Self::new(descriptor, self.config.clone(), self.sampler, dim.max(1), data)
    }

    /// Projections `⟨x, θ⟩` of all points.
    pub fn marginal(&self, theta: &[f64]) -> Vec<f64> {
        self.points().map(|p| crate::linalg::dot(p, theta)).collect()
    }

    /// The first `count` points.
    pub fn truncated(&self, count: usize) -> Self {
        let mut b = self.clone();
        b.data.truncate(count.min(self.count()) * self.dim);
        b
    }

    /// `groups` disjoint contiguous sub-batches of equal size (the remainder is dropped).
    pub fn split(&self, groups: usize) -> Vec<Self> {
        let per = self.count() / groups.max(1);
        (0..groups)
            .map(|g| {
                let data = self.data[g * per * self.dim..(g + 1) * per * self.dim].to_vec();
                Self::new(self.descriptor.clone(), self.config.clone(), self.sampler, self.dim, data)
            })
            .collect()
    }

    /// One point per row, preceded by `#` comment lines with the provenance.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# body: {}", self.descriptor)?;
        writeln!(out, "# sampler: {}", self.sampler.as_str())?;
        writeln!(out, "# seed: {}", self.config.seed)?;
        writeln!(out, "# burn_in: {}", self.config.burn_in.map_or("default".into(), |b| b.to_string()))?;
        writeln!(out, "# thinning: {}", self.config.thinning.map_or("default".into(), |b| b.to_string()))?;
        writeln!(out, "# count: {}", self.count())?;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for p in self.points() {
            w.write_record(p.iter().map(|v| format!("{v:e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut descriptor = String::new();
        let mut config = ChainConfig::new(0);
        let mut sampler = SamplerKind::HitAndRun;
        let mut dim = 0;
        let mut data = Vec::new();
        for line in input.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                if let Some((k, v)) = c.split_once(':') {
                    let v = v.trim();
                    match k.trim() {
                        "body" => descriptor = v.to_string(),
                        "sampler" if v == "exact" => sampler = SamplerKind::Exact,
                        "seed" => config.seed = v.parse().map_err(|_| Error::Parse(format!("bad seed {v:?}")))?,
                        "burn_in" => config.burn_in = v.parse().ok(),
                        "thinning" => config.thinning = v.parse().ok(),
                        _ => {}
                    }
                }
                continue;
            }
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number {s:?}"))))
                .collect::<Result<Vec<f64>>>()?;
            if dim == 0 {
                dim = row.len();
            } else if row.len() != dim {
                return Err(Error::Parse("ragged sample rows".into()));
            }
            data.extend(row);
        }
        if dim == 0 {
            return Err(Error::Parse("empty sample file".into()));
        }
        Ok(Self::new(descriptor, config, sampler, dim, data))
    }
}
