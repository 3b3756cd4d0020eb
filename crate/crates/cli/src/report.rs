//! Run reports, digests and the convergence CSV.
//!
//! Report keys appear in struct declaration order. The report digest is the
//! SHA-256 of the compact JSON encoding with `report_digest` blanked and
//! `timings_ms` emptied, so two runs on the same inputs share a digest.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use strong_envelope::{CheckReport, Envelope, Problem, SweepRow};

pub const REPORT_FORMAT: &str = "strong-envelope/report/1";
const INSTANCE_DOMAIN: &[u8] = b"strong-envelope/instance/1";

/// SHA-256 over a fixed little-endian encoding of the resolved instance:
/// node count, then per node the parent (`u64::MAX` at the root), transition
/// probability bits and obstacle bits, then grid times and weights.
pub fn instance_digest(inst: &Problem) -> String {
    let tree = &inst.tree;
    let mut h = Sha256::new();
    h.update(INSTANCE_DOMAIN);
    h.update((tree.len() as u64).to_le_bytes());
    for n in 0..tree.len() {
        let parent = tree.parent(n).map_or(u64::MAX, |p| p as u64);
        h.update(parent.to_le_bytes());
        h.update(tree.node(n).prob.to_bits().to_le_bytes());
        h.update(inst.obstacle[n].to_bits().to_le_bytes());
    }
    h.update((inst.grid.weights().len() as u64).to_le_bytes());
    for t in inst.grid.times() {
        h.update(t.to_bits().to_le_bytes());
    }
    for w in inst.grid.weights() {
        h.update(w.to_bits().to_le_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRow {
    pub path: String,
    pub level: usize,
    pub obstacle: f64,
    #[serde(rename = "U")]
    pub u: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "A")]
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub beta: f64,
    pub sup_gap: f64,
    pub domination_violation: f64,
}

impl From<&SweepRow<f64>> for SweepRecord {
    fn from(r: &SweepRow<f64>) -> Self {
        Self { beta: r.beta, sup_gap: r.sup_gap, domination_violation: r.domination_violation }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    pub worst_residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl From<&CheckReport> for CheckRecord {
    fn from(r: &CheckReport) -> Self {
        Self { name: r.name.clone(), passed: r.passed, worst_residual: r.worst_residual, witness: r.witness.clone() }
    }
}

impl std::fmt::Display for CheckRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let r = CheckReport::new(self.name.clone(), self.passed, self.worst_residual, self.witness.clone());
        r.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSection {
    pub converged: bool,
    pub cross_check_distance: f64,
    pub domination_violation: f64,
    pub nodes: Vec<NodeRow>,
    pub sweeps: Vec<SweepRecord>,
}

impl EnvelopeSection {
    pub fn new(inst: &Problem, env: &Envelope) -> Self {
        let tree = &inst.tree;
        let nodes = (0..tree.len())
            .map(|n| NodeRow {
                path: tree.path_label(n),
                level: tree.level(n),
                obstacle: inst.obstacle[n],
                u: env.envelope[n],
                m: env.martingale[n],
                a: env.compensator[n],
            })
            .collect();
        Self {
            converged: env.converged,
            cross_check_distance: env.cross_check_distance,
            domination_violation: env.domination_violation,
            nodes,
            sweeps: env.sweeps.iter().map(SweepRecord::from).collect(),
        }
    }

    pub fn row(&self, path: &str) -> Option<&NodeRow> {
        self.nodes.iter().find(|r| r.path == path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRange {
    pub start: u64,
    pub count: u64,
    pub draws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format: String,
    pub command: String,
    pub rng: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<SeedRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<EnvelopeSection>,
    pub checks: Vec<CheckRecord>,
    pub passed: bool,
    pub report_digest: String,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        Self {
            format: REPORT_FORMAT.into(),
            command: command.into(),
            rng: strong_envelope::suite::RNG_ALGORITHM.into(),
            instance_digest: None,
            seeds: None,
            envelope: None,
            checks: Vec::new(),
            passed: true,
            report_digest: String::new(),
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn push_checks<'a>(&mut self, checks: impl IntoIterator<Item = &'a CheckReport>) {
        self.checks.extend(checks.into_iter().map(CheckRecord::from));
        self.passed = self.checks.iter().all(|c| c.passed);
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn digest(&self) -> String {
        let mut stripped = self.clone();
        stripped.report_digest.clear();
        stripped.timings_ms.clear();
        let bytes = serde_json::to_vec(&stripped).expect("report serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Fills in `report_digest`.
    pub fn seal(mut self) -> Self {
        self.report_digest = self.digest();
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub const CSV_HEADER: [&str; 3] = ["beta", "sup_gap", "domination_violation"];

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([r.beta.to_string(), r.sup_gap.to_string(), r.domination_violation.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_csv(text: &str) -> csv::Result<Vec<SweepRecord>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize().collect()
}
