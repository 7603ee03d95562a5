//! Counting statistics: Poissonian count simulation, blocked-source noise
//! subtraction and Monte-Carlo error propagation.
//!
//! Everything here is deterministic given a 64-bit seed. Monte-Carlo samples
//! use independent, indexed ChaCha streams so results do not depend on
//! evaluation order.

use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Measured counts for one analyzer setting and outcome: the raw four-fold
/// counts plus the counts with each source blocked, over the same
/// integration time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub setting_q1: String,
    pub setting_q2: String,
    pub outcome: String,
    pub raw: u64,
    pub blocked_ct: u64,
    pub blocked_anc: u64,
    #[serde(skip, default = "default_integration_time")]
    pub integration_time_s: f64,
}

fn default_integration_time() -> f64 {
    1.0
}

impl CountRecord {
    pub fn new(
        setting_q1: impl Into<String>,
        setting_q2: impl Into<String>,
        outcome: impl Into<String>,
        raw: u64,
        blocked_ct: u64,
        blocked_anc: u64,
        integration_time_s: f64,
    ) -> CountRecord {
        CountRecord {
            setting_q1: setting_q1.into(),
            setting_q2: setting_q2.into(),
            outcome: outcome.into(),
            raw,
            blocked_ct,
            blocked_anc,
            integration_time_s,
        }
    }
}

/// `raw − blocked_ct − blocked_anc`. May be negative; negative values are
/// retained rather than clipped, since clipping biases small-count data.
/// Downstream estimators decide how to treat them.
pub fn noise_subtract(record: &CountRecord) -> f64 {
    record.raw as f64 - record.blocked_ct as f64 - record.blocked_anc as f64
}

/// One Poisson draw with mean `rate·time`, deterministic in the seed.
pub fn sample_counts(rate_hz: f64, time_s: f64, seed: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    poisson_draw(rate_hz * time_s, &mut rng)
}

pub(crate) fn poisson_draw(mean: f64, rng: &mut ChaCha8Rng) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("mean is positive");
    dist.sample(rng) as u64
}

/// Result of a Monte-Carlo error propagation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonteCarloResult {
    /// Componentwise mean over accepted samples.
    pub mean: Vec<f64>,
    /// Componentwise sample standard deviation over accepted samples.
    pub std: Vec<f64>,
    pub n_samples: usize,
    /// Samples rejected because the estimator failed on them.
    pub n_rejected: usize,
}

impl MonteCarloResult {
    pub fn rejection_fraction(&self) -> f64 {
        self.n_rejected as f64 / self.n_samples as f64
    }
}

/// Propagate Poissonian counting errors through an arbitrary estimator.
///
/// Every count (including the blocked-source noise counts) is resampled as
/// Poisson with mean equal to the observed count; the estimator maps the
/// resampled records to a vector of statistics. Samples on which the
/// estimator fails (unphysical counts, say) are rejected and counted.
/// Sample `i` uses ChaCha stream `i+1` of the seed, so output is
/// deterministic and independent of evaluation order.
pub fn monte_carlo<F>(
    records: &[CountRecord],
    estimator: F,
    n_samples: usize,
    seed: u64,
) -> Result<MonteCarloResult>
where
    F: Fn(&[CountRecord]) -> Result<Vec<f64>>,
{
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be positive".into()));
    }
    let mut accepted: Vec<Vec<f64>> = Vec::with_capacity(n_samples);
    let mut n_rejected = 0usize;
    for i in 0..n_samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64 + 1);
        let resampled: Vec<CountRecord> = records
            .iter()
            .map(|r| CountRecord {
                raw: poisson_draw(r.raw as f64, &mut rng),
                blocked_ct: poisson_draw(r.blocked_ct as f64, &mut rng),
                blocked_anc: poisson_draw(r.blocked_anc as f64, &mut rng),
                ..r.clone()
            })
            .collect();
        match estimator(&resampled) {
            Ok(v) => accepted.push(v),
            Err(_) => n_rejected += 1,
        }
    }
    if accepted.is_empty() {
        return Err(Error::Estimator(
            "estimator failed on every Monte-Carlo sample".into(),
        ));
    }
    let dim = accepted[0].len();
    if accepted.iter().any(|v| v.len() != dim) {
        return Err(Error::Estimator(
            "estimator returned vectors of inconsistent length".into(),
        ));
    }
    let n = accepted.len() as f64;
    let mut mean = vec![0.0; dim];
    for v in &accepted {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut std = vec![0.0; dim];
    if accepted.len() > 1 {
        for v in &accepted {
            for (s, (x, m)) in std.iter_mut().zip(v.iter().zip(&mean)) {
                *s += (x - m) * (x - m);
            }
        }
        for s in &mut std {
            *s = (*s / (n - 1.0)).sqrt();
        }
    }
    Ok(MonteCarloResult {
        mean,
        std,
        n_samples,
        n_rejected,
    })
}

const CSV_HEADER: [&str; 6] = [
    "setting_q1",
    "setting_q2",
    "outcome",
    "raw",
    "blocked_ct",
    "blocked_anc",
];

/// Write a count table in the CSV exchange format
/// (`setting_q1,setting_q2,outcome,raw,blocked_ct,blocked_anc`).
pub fn write_count_table<W: Write>(writer: W, records: &[CountRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)
        .map_err(|e| Error::CountTable { line: 1, message: e.to_string() })?;
    for (i, r) in records.iter().enumerate() {
        w.write_record([
            r.setting_q1.as_str(),
            r.setting_q2.as_str(),
            r.outcome.as_str(),
            &r.raw.to_string(),
            &r.blocked_ct.to_string(),
            &r.blocked_anc.to_string(),
        ])
        .map_err(|e| Error::CountTable { line: i + 2, message: e.to_string() })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_count_table_file(path: &Path, records: &[CountRecord]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_count_table(file, records)
}

/// Read a count table, reporting the line number of the first malformed
/// record. The integration time is not part of the format and is set to
/// `integration_time_s` on every record.
pub fn read_count_table<R: Read>(reader: R, integration_time_s: f64) -> Result<Vec<CountRecord>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    {
        let headers = r
            .headers()
            .map_err(|e| Error::CountTable { line: 1, message: e.to_string() })?;
        let got: Vec<&str> = headers.iter().collect();
        if got != CSV_HEADER {
            return Err(Error::CountTable {
                line: 1,
                message: format!("expected header {CSV_HEADER:?}, got {got:?}"),
            });
        }
    }
    let mut records = Vec::new();
    for (i, row) in r.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::CountTable { line, message: e.to_string() })?;
        if row.len() != 6 {
            return Err(Error::CountTable {
                line,
                message: format!("expected 6 fields, got {}", row.len()),
            });
        }
        let parse_count = |field: usize, name: &str| -> Result<u64> {
            row[field].trim().parse::<u64>().map_err(|_| Error::CountTable {
                line,
                message: format!("{name} must be a non-negative integer, got {:?}", &row[field]),
            })
        };
        records.push(CountRecord {
            setting_q1: row[0].trim().to_string(),
            setting_q2: row[1].trim().to_string(),
            outcome: row[2].trim().to_string(),
            raw: parse_count(3, "raw")?,
            blocked_ct: parse_count(4, "blocked_ct")?,
            blocked_anc: parse_count(5, "blocked_anc")?,
            integration_time_s,
        });
    }
    Ok(records)
}

pub fn read_count_table_file(path: &Path, integration_time_s: f64) -> Result<Vec<CountRecord>> {
    let file = std::fs::File::open(path)?;
    read_count_table(file, integration_time_s)
}
