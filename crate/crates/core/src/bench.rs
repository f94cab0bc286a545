//! Synthetic document families and depth/width sweeps over the four digest
//! models.
//!
//! Hash counts are exact and machine-independent; wall times are medians
//! over repeated runs and only meaningful on the machine that produced them.

use std::fmt;
use std::io;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::distributions::{Alphanumeric, DistString};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{bertino_digest, dom_hash_digest, xhash_digest, SpaceMode};
use crate::csr::{csr_digest, ContextSet};
use crate::hash::{Digest, HashAlgorithmId, HashCounter};
use crate::xml_tree::{NodeSelector, Step, XmlNode};

/// Layout of a generated tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// `per_level` siblings on each of `depth` levels below the root, one
    /// of which parents the next level.
    DepthChain,
    /// The same node count with every non-root element directly under the root.
    WidthFlat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeSpec {
    pub depth: usize,
    pub per_level: usize,
    /// Bytes of text per element.
    pub payload: usize,
    /// Attributes per element.
    pub attributes: usize,
    pub topology: Topology,
}

impl Default for TreeSpec {
    fn default() -> Self {
        TreeSpec {
            depth: 10,
            per_level: 5,
            payload: 32,
            attributes: 1,
            topology: Topology::DepthChain,
        }
    }
}

impl TreeSpec {
    pub fn node_count(&self) -> usize {
        1 + self.per_level * self.depth
    }
}

const NAMES: [&str; 8] = ["item", "entry", "record", "field", "section", "value", "part", "data"];

struct Generator {
    rng: ChaCha8Rng,
    spec: TreeSpec,
    next_id: usize,
}

impl Generator {
    fn element(&mut self) -> XmlNode {
        let name = NAMES[self.rng.gen_range(0..NAMES.len())];
        let mut node = XmlNode::new(name).with_value(Alphanumeric.sample_string(&mut self.rng, self.spec.payload));
        for a in 0..self.spec.attributes {
            let value = if a == 0 {
                format!("n{}", self.next_id)
            } else {
                Alphanumeric.sample_string(&mut self.rng, 8)
            };
            let key = if a == 0 { "id".to_owned() } else { format!("a{a}") };
            node.set_attribute(key, value);
        }
        self.next_id += 1;
        node
    }

    fn level(&mut self, remaining: usize) -> Vec<XmlNode> {
        let mut siblings: Vec<XmlNode> = (0..self.spec.per_level).map(|_| self.element()).collect();
        if remaining > 1 && !siblings.is_empty() {
            let parent = self.rng.gen_range(0..siblings.len());
            *siblings[parent].children_mut() = self.level(remaining - 1);
        }
        siblings
    }
}

/// Deterministic tree for `(spec, seed)`.
pub fn generate_tree(spec: &TreeSpec, seed: u64) -> XmlNode {
    let mut gen = Generator {
        rng: ChaCha8Rng::seed_from_u64(seed),
        spec: *spec,
        next_id: 0,
    };
    let mut root = XmlNode::new("document");
    let payload = Alphanumeric.sample_string(&mut gen.rng, spec.payload);
    root.set_value(payload);
    if spec.attributes > 0 {
        root.set_attribute("id", "root");
    }
    match spec.topology {
        Topology::DepthChain => {
            if spec.depth > 0 {
                *root.children_mut() = gen.level(spec.depth);
            }
        }
        Topology::WidthFlat => {
            *root.children_mut() = (0..spec.per_level * spec.depth).map(|_| gen.element()).collect();
        }
    }
    root
}

/// A digest model under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Csr,
    DomHash,
    XHash,
    Bertino,
}

impl Model {
    pub const ALL: [Model; 4] = [Model::Csr, Model::DomHash, Model::XHash, Model::Bertino];

    pub fn name(self) -> &'static str {
        match self {
            Model::Csr => "csr",
            Model::DomHash => "domhash",
            Model::XHash => "xhash",
            Model::Bertino => "bertino",
        }
    }

    /// Digest of the whole document under this model. CSR signs the root
    /// with no context.
    pub fn digest(self, root: &XmlNode, algo: HashAlgorithmId, counter: &mut HashCounter) -> Digest {
        match self {
            Model::Csr => {
                let target = NodeSelector::Path(vec![Step {
                    name: root.name().to_owned(),
                    index: 1,
                }]);
                csr_digest(root, &target, &ContextSet::empty(), algo, counter)
                    .expect("root selector resolves")
                    .csr
            }
            Model::DomHash => dom_hash_digest(root, algo, counter),
            Model::XHash => xhash_digest(root, algo, counter, SpaceMode::Default),
            Model::Bertino => bertino_digest(root, algo, counter),
        }
    }

    /// Hash invocations needed for `root`.
    pub fn hash_count(self, root: &XmlNode, algo: HashAlgorithmId) -> u64 {
        let mut counter = HashCounter::new();
        self.digest(root, algo, &mut counter);
        counter.count()
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Model::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown model `{s}` (expected csr, domhash, xhash or bertino)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Depth,
    Width,
}

impl Axis {
    pub fn topology(self) -> Topology {
        match self {
            Axis::Depth => Topology::DepthChain,
            Axis::Width => Topology::WidthFlat,
        }
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "depth" => Ok(Axis::Depth),
            "width" => Ok(Axis::Width),
            other => Err(format!("unknown axis `{other}` (expected depth or width)")),
        }
    }
}

/// One measured `(model, algo, point)` cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchResult {
    pub model: Model,
    pub algo: HashAlgorithmId,
    pub axis: Axis,
    /// Sweep parameter: levels for `depth`, level-equivalents for `width`
    /// (the flat tree has `per_level * value` children).
    pub value: usize,
    pub nodes: usize,
    pub hash_count: u64,
    /// Machine-dependent median wall time.
    pub median_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SweepError {
    #[error("sweep range is empty")]
    EmptyRange,
    #[error("repeat count must be at least 1")]
    NoRepeats,
    #[error("no models or algorithms selected")]
    NothingToRun,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub axis: Axis,
    pub points: Vec<usize>,
    pub algos: Vec<HashAlgorithmId>,
    pub models: Vec<Model>,
    pub repeat: usize,
    pub per_level: usize,
    pub payload: usize,
    pub attributes: usize,
    pub seed: u64,
    /// Measure points on separate threads. Each timed run is still sequential.
    pub parallel: bool,
}

impl SweepConfig {
    /// Default family: five elements per level, 32-byte payloads, one
    /// attribute per element, ten repetitions.
    pub fn new(axis: Axis, points: Vec<usize>) -> Self {
        SweepConfig {
            axis,
            points,
            algos: vec![HashAlgorithmId::Sha1],
            models: Model::ALL.to_vec(),
            repeat: 10,
            per_level: 5,
            payload: 32,
            attributes: 1,
            seed: 0x5eed,
            parallel: false,
        }
    }

    pub fn tree_spec(&self, value: usize) -> TreeSpec {
        TreeSpec {
            depth: value,
            per_level: self.per_level,
            payload: self.payload,
            attributes: self.attributes,
            topology: self.axis.topology(),
        }
    }
}

/// `from..=to` stepping by `step`.
pub fn range_points(from: usize, to: usize, step: usize) -> Result<Vec<usize>, SweepError> {
    if step == 0 || from > to {
        return Err(SweepError::EmptyRange);
    }
    Ok((from..=to).step_by(step).collect())
}

fn median(mut samples: Vec<u64>) -> u64 {
    samples.sort_unstable();
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        (samples[n / 2 - 1] + samples[n / 2]) / 2
    }
}

fn measure_point(config: &SweepConfig, value: usize) -> Vec<BenchResult> {
    // a fresh tree per point, seeded from the family seed and the point
    let spec = config.tree_spec(value);
    let tree = generate_tree(&spec, config.seed ^ (value as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let nodes = tree.element_count();
    let mut rows = Vec::new();
    for &algo in &config.algos {
        for &model in &config.models {
            let mut times = Vec::with_capacity(config.repeat);
            let mut hash_count = None;
            for _ in 0..config.repeat {
                let mut counter = HashCounter::new();
                let start = Instant::now();
                let digest = model.digest(&tree, algo, &mut counter);
                let elapsed = start.elapsed();
                std::hint::black_box(digest);
                times.push(u64::try_from(elapsed.as_nanos()).unwrap_or(u64::MAX));
                match hash_count {
                    None => hash_count = Some(counter.count()),
                    Some(c) => assert_eq!(c, counter.count(), "hash count varied between repetitions"),
                }
            }
            rows.push(BenchResult {
                model,
                algo,
                axis: config.axis,
                value,
                nodes,
                hash_count: hash_count.expect("repeat >= 1"),
                median_ns: median(times),
            });
        }
    }
    rows
}

/// Runs every `(algo, model)` pair at every point, `repeat` times each.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<BenchResult>, SweepError> {
    if config.points.is_empty() {
        return Err(SweepError::EmptyRange);
    }
    if config.repeat == 0 {
        return Err(SweepError::NoRepeats);
    }
    if config.algos.is_empty() || config.models.is_empty() {
        return Err(SweepError::NothingToRun);
    }
    if !config.parallel {
        return Ok(config.points.iter().flat_map(|&v| measure_point(config, v)).collect());
    }
    let per_point: Vec<Vec<BenchResult>> = std::thread::scope(|scope| {
        let handles: Vec<_> = config
            .points
            .iter()
            .map(|&v| scope.spawn(move || measure_point(config, v)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("bench thread panicked")).collect()
    });
    Ok(per_point.into_iter().flatten().collect())
}

/// Ordering of hash counts at one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PointOrdering {
    pub algo: HashAlgorithmId,
    pub value: usize,
    pub csr: u64,
    pub domhash: u64,
    pub bertino: u64,
}

impl PointOrdering {
    /// `csr < domhash < bertino`.
    pub fn holds(&self) -> bool {
        self.csr < self.domhash && self.domhash < self.bertino
    }
}

/// Hash-count ordering per `(algo, value)`, for points where all three
/// models were measured.
pub fn orderings(results: &[BenchResult]) -> Vec<PointOrdering> {
    let mut keys: Vec<(HashAlgorithmId, usize)> = results.iter().map(|r| (r.algo, r.value)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .filter_map(|(algo, value)| {
            let count = |m: Model| {
                results
                    .iter()
                    .find(|r| r.algo == algo && r.value == value && r.model == m)
                    .map(|r| r.hash_count)
            };
            Some(PointOrdering {
                algo,
                value,
                csr: count(Model::Csr)?,
                domhash: count(Model::DomHash)?,
                bertino: count(Model::Bertino)?,
            })
        })
        .collect()
}

pub const CSV_HEADER: [&str; 7] = ["model", "algo", "axis", "value", "nodes", "hash_count", "median_ns"];

/// Writes results as CSV with a fixed header and column order.
pub fn write_results<W: io::Write>(results: &[BenchResult], writer: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in results {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_results(results: &[BenchResult], path: impl AsRef<Path>) -> io::Result<()> {
    let file = std::fs::File::create(path)?;
    write_results(results, io::BufWriter::new(file)).map_err(io::Error::other)
}

pub fn read_results<R: io::Read>(reader: R) -> csv::Result<Vec<BenchResult>> {
    csv::Reader::from_reader(reader).deserialize().collect()
}

/// Plain-text table of the results.
pub fn summary_table(results: &[BenchResult]) -> String {
    let mut out = format!(
        "{:<8} {:<7} {:<6} {:>6} {:>7} {:>11} {:>12}\n",
        "model", "algo", "axis", "value", "nodes", "hash_count", "median_ns"
    );
    for r in results {
        let axis = match r.axis {
            Axis::Depth => "depth",
            Axis::Width => "width",
        };
        out.push_str(&format!(
            "{:<8} {:<7} {:<6} {:>6} {:>7} {:>11} {:>12}\n",
            r.model, r.algo, axis, r.value, r.nodes, r.hash_count, r.median_ns
        ));
    }
    out
}
