//! Experiment runners behind the CLI.
//!
//! Every command takes an [`ExperimentSpec`], runs on a rayon pool of
//! `spec.workers` threads and returns a [`RunReport`]. Parallel work is
//! sharded by index and merged in index order, and every random draw comes
//! from a ChaCha8 stream keyed by `(seed, size, sample index)`, so a report
//! depends on the `ExperimentSpec` and seed only, never on the worker count.

mod cover;
pub mod enumerate;
mod geometry;
mod selftest;
mod sharpness;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::covering::{self, CoveringError};
use crate::gf::{FieldCtx, FieldDescriptor, GfError};
use crate::incidence::IncidenceError;

pub use cover::{cmd_cover_exhaustive, cmd_cover_sample};
pub use geometry::{cmd_geometry, structured_point_sets};
pub use selftest::{cmd_selftest, IDENTITY_TOL, SELFTEST_DIMS, SELFTEST_ROSTER};
pub use sharpness::cmd_sharpness;

pub const SCHEMA_VERSION: u32 = 1;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_COUNTEREXAMPLE: i32 = 2;
pub const EXIT_BAD_SPEC: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;

/// Counterexample lists in reports are cut at this length (the tally keeps
/// the full count).
pub const COUNTEREXAMPLE_LIST_LIMIT: usize = 64;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("bad experiment spec: {0}")]
    BadSpec(String),
    #[error("exhaustive enumeration of {count} subsets exceeds the budget of {budget}")]
    BudgetExceeded { count: u128, budget: u128 },
    #[error(transparent)]
    Field(#[from] GfError),
    #[error(transparent)]
    Covering(#[from] CoveringError),
    #[error(transparent)]
    Incidence(#[from] IncidenceError),
    #[error(transparent)]
    Fourier(#[from] crate::fourier::FourierError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::BudgetExceeded { .. } => EXIT_BUDGET,
            _ => EXIT_BAD_SPEC,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exhaustive,
    Sample,
    Structured,
}

impl FromStr for Mode {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exhaustive" => Ok(Mode::Exhaustive),
            "sample" => Ok(Mode::Sample),
            "structured" => Ok(Mode::Structured),
            _ => Err(HarnessError::BadSpec(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Cover,
    Remainder,
    Keylowerbound,
    Identities,
    SecondMoment,
    Bilinear,
}

impl Check {
    pub const ALL: [Check; 6] =
        [Check::Cover, Check::Remainder, Check::Keylowerbound, Check::Identities, Check::SecondMoment, Check::Bilinear];

    pub fn name(self) -> &'static str {
        match self {
            Check::Cover => "cover",
            Check::Remainder => "remainder",
            Check::Keylowerbound => "keylowerbound",
            Check::Identities => "identities",
            Check::SecondMoment => "second_moment",
            Check::Bilinear => "bilinear",
        }
    }
}

impl FromStr for Check {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| HarnessError::BadSpec(format!("unknown check {s:?}")))
    }
}

/// Parses a comma-separated check list.
pub fn parse_checks(list: &str) -> Result<Vec<Check>, HarnessError> {
    let mut out: Vec<Check> =
        list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect::<Result<_, _>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

/// Inclusive size range written `a..b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SizeRange {
    pub min: usize,
    pub max: usize,
}

impl SizeRange {
    pub fn contains(&self, k: usize) -> bool {
        self.min <= k && k <= self.max
    }
}

impl FromStr for SizeRange {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || HarnessError::BadSpec(format!("size range {s:?} is not of the form a..b"));
        let (a, b) = match s.split_once("..") {
            Some((a, b)) => (a, b.trim_start_matches('=')),
            None => (s, s),
        };
        let min = a.trim().parse().map_err(|_| bad())?;
        let max = b.trim().parse().map_err(|_| bad())?;
        if min > max {
            return Err(bad());
        }
        Ok(SizeRange { min, max })
    }
}

impl fmt::Display for SizeRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.min, self.max)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentSpec {
    pub p: u64,
    pub n: u32,
    pub d: usize,
    pub mode: Mode,
    pub sizes: Option<SizeRange>,
    pub samples: usize,
    #[serde(serialize_with = "crate::ser_u64")]
    pub seed: u64,
    pub checks: Vec<Check>,
    /// Largest number of summands for subfield closure in `sharpness`.
    pub max_d: usize,
    /// Not echoed: reports must not depend on the worker count.
    #[serde(skip)]
    pub workers: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            p: 5,
            n: 1,
            d: 2,
            mode: Mode::Sample,
            sizes: None,
            samples: 100,
            seed: 0,
            checks: Vec::new(),
            max_d: 6,
            workers: 1,
        }
    }
}

impl ExperimentSpec {
    pub fn field(&self) -> Result<Arc<FieldCtx>, HarnessError> {
        Ok(Arc::new(FieldCtx::new(self.p, self.n)?))
    }

    /// Requested checks, or `defaults` when none were given.
    pub fn checks_or(&self, defaults: &[Check]) -> Vec<Check> {
        if self.checks.is_empty() {
            defaults.to_vec()
        } else {
            self.checks.clone()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.d == 0 {
            return Err(HarnessError::BadSpec("d must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(HarnessError::BadSpec("workers must be at least 1".into()));
        }
        Ok(())
    }

    /// Random stream for sample `index` of size class `size`.
    pub fn rng(&self, size: usize, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((size as u64) << 32) | index as u64);
        rng
    }

    /// Runs `f` inside a rayon pool with `workers` threads.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T, HarnessError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| HarnessError::BadSpec(e.to_string()))?;
        Ok(pool.install(f))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub pass: u64,
    pub fail: u64,
}

impl Tally {
    pub fn record(&mut self, ok: bool) {
        if ok {
            self.pass += 1;
        } else {
            self.fail += 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counterexample {
    pub check: String,
    /// Element indices (scalar sets) or flat point indices (point sets).
    pub set: Vec<usize>,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub command: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldDescriptor>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<ExperimentSpec>,
    pub checks: BTreeMap<String, Tally>,
    /// Worst-case diagnostic ratios (e.g. remainder sharpness).
    pub sharpness: BTreeMap<String, f64>,
    pub counterexample_count: u64,
    pub counterexamples: Vec<Counterexample>,
    pub details: serde_json::Value,
    /// Only filled in when timing is requested, since it breaks determinism.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

impl RunReport {
    pub fn new(command: &str, field: Option<&FieldCtx>, spec: Option<&ExperimentSpec>) -> Self {
        RunReport {
            schema: SCHEMA_VERSION,
            command: command.to_string(),
            version: VERSION.to_string(),
            field: field.map(FieldCtx::descriptor),
            spec: spec.cloned(),
            checks: BTreeMap::new(),
            sharpness: BTreeMap::new(),
            counterexample_count: 0,
            counterexamples: Vec::new(),
            details: serde_json::Value::Null,
            elapsed_ms: None,
        }
    }

    pub fn tally(&mut self, check: &str, ok: bool) {
        self.checks.entry(check.to_string()).or_default().record(ok);
    }

    pub fn tally_many(&mut self, check: &str, t: &Tally) {
        let e = self.checks.entry(check.to_string()).or_default();
        e.pass += t.pass;
        e.fail += t.fail;
    }

    pub fn counterexample(&mut self, c: Counterexample) {
        self.counterexample_count += 1;
        if self.counterexamples.len() < COUNTEREXAMPLE_LIST_LIMIT {
            self.counterexamples.push(c);
        }
    }

    /// Keeps the larger of the stored and the new value.
    pub fn worst(&mut self, key: &str, value: f64) {
        let e = self.sharpness.entry(key.to_string()).or_insert(value);
        if value > *e {
            *e = value;
        }
    }

    pub fn failures(&self) -> u64 {
        self.checks.values().map(|t| t.fail).sum()
    }

    pub fn passed(&self) -> bool {
        self.counterexample_count == 0 && self.failures() == 0
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            EXIT_OK
        } else {
            EXIT_COUNTEREXAMPLE
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Clone, Debug, Serialize)]
struct DOfEps {
    eps: String,
    d_cover: i64,
    d_proportion: i64,
}

/// Summand counts for the size exponent `1/2 + eps`.
pub fn cmd_d_of_eps(eps: &str) -> Result<RunReport, HarnessError> {
    let eps: Ratio<i64> =
        eps.trim().parse().map_err(|_| HarnessError::BadSpec(format!("cannot parse {eps:?} as a rational")))?;
    let (d_cover, d_proportion) = covering::d_of_eps(eps).map_err(|e| HarnessError::BadSpec(e.to_string()))?;
    let mut report = RunReport::new("d-of-eps", None, None);
    report.details = serde_json::to_value(DOfEps { eps: eps.to_string(), d_cover, d_proportion }).expect("plain data");
    Ok(report)
}
