//! Run configuration: one TOML file validated up front; unknown keys are
//! rejected everywhere.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use passforge_core::backend::{synthetic_backend, BackendModel, NoiseProfile, TopologyKind};
use passforge_core::circuit::generate::{benchmark_circuit, random_circuit, BenchmarkKind};
use passforge_core::circuit::QuantumCircuit;
use passforge_core::env::EnvConfig;
use passforge_core::ppo::{Curriculum, PpoConfig};
use passforge_core::sim::NoiseConfig;

#[derive(Debug, Clone, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub output: OutputSection,
    pub backend: BackendSpec,
    pub env: EnvConfig,
    pub ppo: PpoConfig,
    pub curriculum: Curriculum,
    pub noise: NoiseConfig,
    pub train: TrainSection,
    pub compile: CompileSection,
    pub eval: EvalSection,
    pub bruteforce: BruteforceSection,
    pub bench: BenchSection,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("runs"),
        }
    }
}

/// Device source: a calibration file or a synthetic topology.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackendSpec {
    /// "line" | "ring" | "grid" | "heavyhex" | "calibration" | "bundled".
    pub kind: String,
    pub n: usize,
    pub calibration: Option<PathBuf>,
    /// "uniform" | "heterogeneous".
    pub profile: String,
    pub seed: u64,
    pub spread: f64,
}

impl Default for BackendSpec {
    fn default() -> Self {
        Self {
            kind: "bundled".into(),
            n: 12,
            calibration: None,
            profile: "uniform".into(),
            seed: 0,
            spread: 0.3,
        }
    }
}

impl BackendSpec {
    pub fn build(&self) -> Result<BackendModel> {
        let profile = match self.profile.as_str() {
            "uniform" => NoiseProfile::default_uniform(),
            "heterogeneous" => NoiseProfile::Heterogeneous {
                seed: self.seed,
                spread: self.spread,
            },
            other => bail!("unknown noise profile `{other}`"),
        };
        let kind = match self.kind.as_str() {
            "line" => TopologyKind::Line,
            "ring" => TopologyKind::Ring,
            "grid" => TopologyKind::Grid,
            "heavyhex" => TopologyKind::HeavyHexFragment,
            "bundled" => return Ok(BackendModel::bundled_heavyhex_12()),
            "calibration" => {
                let path = self
                    .calibration
                    .as_ref()
                    .context("backend.kind = \"calibration\" requires backend.calibration")?;
                return BackendModel::load_calibration(path)
                    .with_context(|| format!("loading calibration {}", path.display()));
            }
            other => bail!("unknown backend kind `{other}`"),
        };
        Ok(synthetic_backend(kind, self.n, profile)?)
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub encoder_widths: Vec<usize>,
    pub trunk_widths: Vec<usize>,
    /// Perturbed variants added to the base backend.
    pub perturbed_backends: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            encoder_widths: vec![64, 64],
            trunk_widths: vec![64],
            perturbed_backends: 8,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct CompileSection {
    pub checkpoint: Option<PathBuf>,
    pub circuit: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub checkpoint: Option<PathBuf>,
    pub corpus: CorpusSpec,
    /// Methods to run: any of "policy", "fidelity", "time", "random",
    /// "greedy", "evolution". Empty means all available (the policy runs
    /// only when a checkpoint is configured).
    pub methods: Vec<String>,
    /// Evolution-strategy evaluation budget per circuit.
    pub es_budget: usize,
    /// Circuits examined by the greedy cross-stage diagnostic (0 disables).
    pub diagnostic_circuits: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            checkpoint: None,
            corpus: CorpusSpec::default(),
            methods: Vec::new(),
            es_budget: 28,
            diagnostic_circuits: 6,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusSpec {
    /// "random" | "benchmarks".
    pub kind: String,
    pub count: usize,
    pub min_qubits: usize,
    pub max_qubits: usize,
    pub min_depth_factor: usize,
    pub max_depth_factor: usize,
    pub seed: u64,
    pub benchmarks: Vec<BenchmarkEntry>,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            kind: "random".into(),
            count: 50,
            min_qubits: 4,
            max_qubits: 6,
            min_depth_factor: 2,
            max_depth_factor: 4,
            seed: 7,
            benchmarks: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkEntry {
    pub kind: String,
    pub n: usize,
}

impl CorpusSpec {
    pub fn build(&self) -> Result<Vec<(String, QuantumCircuit)>> {
        let mut out = Vec::new();
        match self.kind.as_str() {
            "random" => {
                if self.count == 0 {
                    bail!("corpus.count must be positive");
                }
                if self.min_qubits < 2 || self.min_qubits > self.max_qubits {
                    bail!("corpus qubit range is invalid");
                }
                for i in 0..self.count {
                    let span = self.max_qubits - self.min_qubits + 1;
                    let n = self.min_qubits + (i % span);
                    let dspan = self.max_depth_factor - self.min_depth_factor + 1;
                    let depth = n * (self.min_depth_factor + (i / span) % dspan);
                    let seed = self.seed.wrapping_add(i as u64).wrapping_mul(0x9e3779b9);
                    out.push((format!("random_{i:03}_n{n}"), random_circuit(n, depth, seed)));
                }
            }
            "benchmarks" => {
                if self.benchmarks.is_empty() {
                    bail!("corpus.kind = \"benchmarks\" requires entries");
                }
                for entry in &self.benchmarks {
                    let kind = BenchmarkKind::from_name(&entry.kind)
                        .with_context(|| format!("unknown benchmark `{}`", entry.kind))?;
                    out.push((
                        format!("{}_{}", entry.kind, entry.n),
                        benchmark_circuit(kind, entry.n)?,
                    ));
                }
            }
            other => bail!("unknown corpus kind `{other}`"),
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct BruteforceSection {
    pub circuit: Option<PathBuf>,
    /// Benchmark shorthand when no circuit file is given.
    pub benchmark: Option<BenchmarkEntry>,
    pub toggles: Vec<String>,
}

impl Default for BruteforceSection {
    fn default() -> Self {
        Self {
            circuit: None,
            benchmark: None,
            toggles: passforge_core::baselines::default_toggles()
                .iter()
                .map(|p| p.name().to_string())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchSection {
    pub checkpoint: Option<PathBuf>,
    /// Benchmark families to scale ("qft", "qpe").
    pub kinds: Vec<String>,
    pub base_n: usize,
    pub sizes: Vec<usize>,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            checkpoint: None,
            kinds: vec!["qft".into(), "qpe".into()],
            base_n: 4,
            sizes: vec![6, 8, 10, 12],
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig =
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok((cfg, text))
    }
}

/// Reads a circuit file by extension (.qasm or .json).
pub fn load_circuit(path: &Path) -> Result<QuantumCircuit> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading circuit {}", path.display()))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Ok(QuantumCircuit::from_json(&text)?),
        _ => Ok(passforge_core::circuit::qasm::parse_qasm_subset(&text)
            .map_err(|e| anyhow::anyhow!("{e}"))?),
    }
}

/// FNV-1a of the raw config text for artifact metadata.
pub fn config_text_hash(text: &str) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in text.as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}
