//! Device model: coupling topology, calibration data, gate durations, and
//! the training-time perturbation generator.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("calibration file error: {0}")]
    Io(#[from] std::io::Error),
    #[error("calibration schema error: {0}")]
    Schema(String),
    #[error("coupling graph is disconnected")]
    Disconnected,
    #[error("qubit {qubit}: t2 = {t2:.3e} exceeds 2*t1 = {:.3e}", 2.0 * t1)]
    T2ExceedsTwiceT1 { qubit: usize, t1: f64, t2: f64 },
    #[error("error probability {value} for {what} outside [0, 0.5]")]
    BadErrorRate { what: String, value: f64 },
    #[error("{kind} topology incompatible with n = {n}: {reason}")]
    IncompatibleSize {
        kind: &'static str,
        n: usize,
        reason: &'static str,
    },
    #[error("edge ({0}, {1}) references a qubit out of range")]
    EdgeOutOfRange(usize, usize),
}

/// Synthetic coupling topologies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TopologyKind {
    Line,
    Ring,
    Grid,
    HeavyHexFragment,
}

/// Noise profile for synthetic backends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NoiseProfile {
    /// Identical calibration on every qubit and edge.
    Uniform {
        eps_1q: f64,
        eps_2q: f64,
        eps_readout: f64,
        t1: f64,
        t2: f64,
    },
    /// Seeded per-qubit/per-edge variation around the default calibration;
    /// `spread` in [0, 1) scales the relative half-width.
    Heterogeneous { seed: u64, spread: f64 },
}

impl NoiseProfile {
    /// Default uniform profile with superconducting-scale magnitudes.
    pub fn default_uniform() -> Self {
        NoiseProfile::Uniform {
            eps_1q: 3e-4,
            eps_2q: 7e-3,
            eps_readout: 1.5e-2,
            t1: 120e-6,
            t2: 100e-6,
        }
    }
}

/// Gate durations per gate class, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateDurations {
    pub one_qubit: f64,
    pub two_qubit: f64,
    pub measure: f64,
}

impl Default for GateDurations {
    fn default() -> Self {
        // Superconducting-device orders of magnitude.
        Self {
            one_qubit: 35e-9,
            two_qubit: 300e-9,
            measure: 1e-6,
        }
    }
}

/// Coupling graph plus per-qubit/per-edge calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct BackendModel {
    pub num_physical: usize,
    /// Undirected edges stored as (min, max), sorted.
    edges: Vec<(usize, usize)>,
    eps_2q: BTreeMap<(usize, usize), f64>,
    pub eps_1q: Vec<f64>,
    pub eps_readout: Vec<f64>,
    /// Relaxation times in seconds.
    pub t1: Vec<f64>,
    /// Dephasing times in seconds.
    pub t2: Vec<f64>,
    pub durations: GateDurations,
    adjacency: Vec<Vec<usize>>,
}

impl BackendModel {
    pub fn new(
        num_physical: usize,
        mut edges: Vec<(usize, usize)>,
        eps_2q: impl Fn(usize, usize) -> f64,
        eps_1q: Vec<f64>,
        eps_readout: Vec<f64>,
        t1: Vec<f64>,
        t2: Vec<f64>,
        durations: GateDurations,
    ) -> Result<Self, BackendError> {
        for e in edges.iter_mut() {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let eps_map: BTreeMap<(usize, usize), f64> =
            edges.iter().map(|&(a, b)| ((a, b), eps_2q(a, b))).collect();
        let model = Self {
            num_physical,
            edges,
            eps_2q: eps_map,
            eps_1q,
            eps_readout,
            t1,
            t2,
            durations,
            adjacency: Vec::new(),
        };
        model.finish()
    }

    fn finish(mut self) -> Result<Self, BackendError> {
        for &(a, b) in &self.edges {
            if a >= self.num_physical || b >= self.num_physical || a == b {
                return Err(BackendError::EdgeOutOfRange(a, b));
            }
        }
        let per_qubit = [
            ("eps_1q", &self.eps_1q),
            ("eps_readout", &self.eps_readout),
        ];
        for (what, v) in per_qubit {
            if v.len() != self.num_physical {
                return Err(BackendError::Schema(format!(
                    "{what} must list {} entries, got {}",
                    self.num_physical,
                    v.len()
                )));
            }
            for (q, &p) in v.iter().enumerate() {
                if !(0.0..=0.5).contains(&p) {
                    return Err(BackendError::BadErrorRate {
                        what: format!("{what}[{q}]"),
                        value: p,
                    });
                }
            }
        }
        for (&e, &p) in &self.eps_2q {
            if !(0.0..=0.5).contains(&p) {
                return Err(BackendError::BadErrorRate {
                    what: format!("eps_2q[{}-{}]", e.0, e.1),
                    value: p,
                });
            }
        }
        if self.t1.len() != self.num_physical || self.t2.len() != self.num_physical {
            return Err(BackendError::Schema(
                "t1/t2 must list one entry per qubit".into(),
            ));
        }
        for q in 0..self.num_physical {
            if self.t1[q] <= 0.0 || self.t2[q] <= 0.0 {
                return Err(BackendError::Schema(format!(
                    "t1/t2 must be positive at qubit {q}"
                )));
            }
            if self.t2[q] > 2.0 * self.t1[q] + 1e-15 {
                return Err(BackendError::T2ExceedsTwiceT1 {
                    qubit: q,
                    t1: self.t1[q],
                    t2: self.t2[q],
                });
            }
        }
        let mut adjacency = vec![Vec::new(); self.num_physical];
        for &(a, b) in &self.edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for nbrs in adjacency.iter_mut() {
            nbrs.sort_unstable();
        }
        self.adjacency = adjacency;
        if !self.is_connected() {
            return Err(BackendError::Disconnected);
        }
        Ok(self)
    }

    fn is_connected(&self) -> bool {
        if self.num_physical == 0 {
            return false;
        }
        let mut seen = vec![false; self.num_physical];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.num_physical
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.adjacency[q]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let key = (a.min(b), a.max(b));
        self.eps_2q.contains_key(&key)
    }

    /// Two-qubit error rate of a coupling edge.
    pub fn eps_2q(&self, a: usize, b: usize) -> f64 {
        let key = (a.min(b), a.max(b));
        *self
            .eps_2q
            .get(&key)
            .unwrap_or_else(|| panic!("({a}, {b}) is not a coupling edge"))
    }

    pub fn mean_eps_2q(&self) -> f64 {
        if self.eps_2q.is_empty() {
            return 0.0;
        }
        self.eps_2q.values().sum::<f64>() / self.eps_2q.len() as f64
    }

    /// All-pairs shortest-path oracle over the coupling graph.
    pub fn path_oracle(&self) -> PathOracle {
        PathOracle::build(self)
    }

    /// Shortest-path distance between two physical qubits.
    pub fn swap_distance(&self, i: usize, j: usize) -> usize {
        assert!(i < self.num_physical && j < self.num_physical);
        self.bfs_dist_from(i)[j]
    }

    fn bfs_dist_from(&self, src: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.num_physical];
        dist[src] = 0;
        let mut queue = std::collections::VecDeque::from([src]);
        while let Some(v) = queue.pop_front() {
            for &w in &self.adjacency[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Bridges of the coupling graph (edges whose removal disconnects it).
    pub fn bridges(&self) -> Vec<(usize, usize)> {
        bridges_of(self.num_physical, &self.edges)
    }

    /// Training-time perturbation: multiplicative Gaussian jitter on error
    /// rates (sigma 0.2) and coherence times (sigma 0.1), plus random
    /// disabling of non-bridge coupling edges (p = 0.05 each). The result
    /// always satisfies every `BackendModel` invariant.
    pub fn perturb(&self, seed: u64) -> BackendModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gauss = move |rng: &mut ChaCha8Rng, sigma: f64| -> f64 {
            // Box-Muller.
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
            1.0 + sigma * z
        };
        let clamp_eps = |v: f64| v.clamp(1e-6, 0.5);
        let clamp_t = |v: f64| v.clamp(1e-6, 1.0);

        let eps_1q: Vec<f64> = self
            .eps_1q
            .iter()
            .map(|&e| clamp_eps(e * gauss(&mut rng, 0.2)))
            .collect();
        let eps_readout: Vec<f64> = self
            .eps_readout
            .iter()
            .map(|&e| clamp_eps(e * gauss(&mut rng, 0.2)))
            .collect();
        let eps_2q_jittered: BTreeMap<(usize, usize), f64> = self
            .eps_2q
            .iter()
            .map(|(&e, &p)| (e, clamp_eps(p * gauss(&mut rng, 0.2))))
            .collect();
        let t1: Vec<f64> = self
            .t1
            .iter()
            .map(|&t| clamp_t(t * gauss(&mut rng, 0.1)))
            .collect();
        let t2: Vec<f64> = self
            .t2
            .iter()
            .zip(&t1)
            .map(|(&t, &new_t1)| clamp_t(t * gauss(&mut rng, 0.1)).min(2.0 * new_t1))
            .collect();

        // Edge disabling: each edge draws its Bernoulli trial independently,
        // but removal is skipped when the edge is a bridge of the current
        // residual graph, so connectivity is preserved.
        let mut edges = self.edges.clone();
        let draws: Vec<bool> = edges.iter().map(|_| rng.gen_bool(0.05)).collect();
        for (idx, &(a, b)) in self.edges.iter().enumerate() {
            if !draws[idx] {
                continue;
            }
            let current_bridges = bridges_of(self.num_physical, &edges);
            if current_bridges.contains(&(a, b)) {
                continue;
            }
            edges.retain(|&e| e != (a, b));
        }

        let model = BackendModel {
            num_physical: self.num_physical,
            eps_2q: edges
                .iter()
                .map(|&e| (e, eps_2q_jittered[&e]))
                .collect(),
            edges,
            eps_1q,
            eps_readout,
            t1,
            t2,
            durations: self.durations,
            adjacency: Vec::new(),
        };
        model.finish().expect("perturbation preserves invariants")
    }

    /// Loads and validates a calibration file in the documented JSON schema.
    pub fn load_calibration(path: &Path) -> Result<BackendModel, BackendError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_calibration_json(&text)
    }

    /// Parses the calibration schema from a JSON string.
    pub fn from_calibration_json(text: &str) -> Result<BackendModel, BackendError> {
        let raw: CalibrationFile =
            serde_json::from_str(text).map_err(|e| BackendError::Schema(e.to_string()))?;
        raw.into_model()
    }

    /// Serializes this model into the calibration JSON schema.
    pub fn to_calibration_json(&self) -> String {
        let raw = CalibrationFile {
            num_qubits: self.num_physical,
            edges: self.edges.iter().map(|&(a, b)| [a, b]).collect(),
            eps_2q: self
                .eps_2q
                .iter()
                .map(|(&(a, b), &p)| (format!("{a}-{b}"), p))
                .collect(),
            eps_1q: self.eps_1q.clone(),
            eps_readout: self.eps_readout.clone(),
            t1_us: self.t1.iter().map(|t| t * 1e6).collect(),
            t2_us: self.t2.iter().map(|t| t * 1e6).collect(),
            durations_ns: DurationsNs {
                oneq: self.durations.one_qubit * 1e9,
                twoq: self.durations.two_qubit * 1e9,
                measure: self.durations.measure * 1e9,
            },
        };
        serde_json::to_string_pretty(&raw).expect("calibration serializes")
    }

    /// The 12-qubit heavy-hex fragment shipped with the crate.
    pub fn bundled_heavyhex_12() -> BackendModel {
        Self::from_calibration_json(include_str!("../../data/heavyhex_12.json"))
            .expect("bundled calibration is valid")
    }
}

/// Deterministic synthetic backend.
pub fn synthetic_backend(
    kind: TopologyKind,
    n: usize,
    profile: NoiseProfile,
) -> Result<BackendModel, BackendError> {
    let edges: Vec<(usize, usize)> = match kind {
        TopologyKind::Line => {
            if n < 2 {
                return Err(BackendError::IncompatibleSize {
                    kind: "Line",
                    n,
                    reason: "requires n >= 2",
                });
            }
            (0..n - 1).map(|i| (i, i + 1)).collect()
        }
        TopologyKind::Ring => {
            if n < 3 {
                return Err(BackendError::IncompatibleSize {
                    kind: "Ring",
                    n,
                    reason: "requires n >= 3",
                });
            }
            (0..n).map(|i| (i, (i + 1) % n)).collect()
        }
        TopologyKind::Grid => {
            let rows = (1..=n).filter(|r| n % r == 0).map(|r| (r, n / r)).fold(
                (1usize, n),
                |best, (r, c)| {
                    if r <= c && r > best.0 {
                        (r, c)
                    } else {
                        best
                    }
                },
            );
            let (r, c) = rows;
            if r < 2 || c < 2 {
                return Err(BackendError::IncompatibleSize {
                    kind: "Grid",
                    n,
                    reason: "requires n = rows*cols with rows, cols >= 2",
                });
            }
            let mut edges = Vec::new();
            for i in 0..r {
                for j in 0..c {
                    let v = i * c + j;
                    if j + 1 < c {
                        edges.push((v, v + 1));
                    }
                    if i + 1 < r {
                        edges.push((v, v + c));
                    }
                }
            }
            edges
        }
        TopologyKind::HeavyHexFragment => {
            if n < 7 {
                return Err(BackendError::IncompatibleSize {
                    kind: "HeavyHexFragment",
                    n,
                    reason: "requires n >= 7",
                });
            }
            // Hex-cell ring split by one rung; degree <= 3 throughout.
            let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
            edges.push((0, n / 2));
            edges
        }
    };

    let (eps_1q, eps_2q_fn, eps_readout, t1, t2): (
        Vec<f64>,
        Box<dyn Fn(usize, usize) -> f64>,
        Vec<f64>,
        Vec<f64>,
        Vec<f64>,
    ) = match profile {
        NoiseProfile::Uniform {
            eps_1q,
            eps_2q,
            eps_readout,
            t1,
            t2,
        } => (
            vec![eps_1q; n],
            Box::new(move |_, _| eps_2q),
            vec![eps_readout; n],
            vec![t1; n],
            vec![t2; n],
        ),
        NoiseProfile::Heterogeneous { seed, spread } => {
            let NoiseProfile::Uniform {
                eps_1q,
                eps_2q,
                eps_readout,
                t1,
                t2,
            } = NoiseProfile::default_uniform()
            else {
                unreachable!()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut jitter = move |base: f64| -> f64 {
                let u: f64 = rng.gen_range(-1.0..1.0);
                base * (1.0 + spread * u)
            };
            let e1: Vec<f64> = (0..n).map(|_| jitter(eps_1q).clamp(1e-6, 0.5)).collect();
            let er: Vec<f64> = (0..n).map(|_| jitter(eps_readout).clamp(1e-6, 0.5)).collect();
            let t1v: Vec<f64> = (0..n).map(|_| jitter(t1).max(1e-6)).collect();
            let t2v: Vec<f64> = (0..n)
                .zip(&t1v)
                .map(|(_, &t1q)| jitter(t2).max(1e-6).min(2.0 * t1q))
                .collect();
            // Per-edge rates drawn from a stream keyed by the endpoints so
            // the value does not depend on edge enumeration order.
            let e2 = move |a: usize, b: usize| -> f64 {
                let key = seed ^ ((a.min(b) as u64) << 32) ^ (a.max(b) as u64) ^ 0x9e3779b97f4a7c15;
                let mut r = ChaCha8Rng::seed_from_u64(key);
                let u: f64 = r.gen_range(-1.0..1.0);
                (eps_2q * (1.0 + spread * u)).clamp(1e-6, 0.5)
            };
            (e1, Box::new(e2), er, t1v, t2v)
        }
    };

    BackendModel::new(
        n,
        edges,
        eps_2q_fn,
        eps_1q,
        eps_readout,
        t1,
        t2,
        GateDurations::default(),
    )
}

fn bridges_of(num_nodes: usize, edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    // Tarjan bridge finding with explicit recursion over an adjacency list.
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); num_nodes];
    for (idx, &(a, b)) in edges.iter().enumerate() {
        adj[a].push((b, idx));
        adj[b].push((a, idx));
    }
    let mut disc = vec![usize::MAX; num_nodes];
    let mut low = vec![0usize; num_nodes];
    let mut timer = 0usize;
    let mut out = Vec::new();
    let mut stack: Vec<(usize, usize, usize)> = Vec::new(); // (node, parent edge, child cursor)
    for start in 0..num_nodes {
        if disc[start] != usize::MAX {
            continue;
        }
        disc[start] = timer;
        low[start] = timer;
        timer += 1;
        stack.push((start, usize::MAX, 0));
        while let Some(&mut (v, pedge, ref mut cursor)) = stack.last_mut() {
            if *cursor < adj[v].len() {
                let (w, eidx) = adj[v][*cursor];
                *cursor += 1;
                if eidx == pedge {
                    continue;
                }
                if disc[w] == usize::MAX {
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    stack.push((w, eidx, 0));
                } else {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&mut (parent, _, _)) = stack.last_mut() {
                    low[parent] = low[parent].min(low[v]);
                    if low[v] > disc[parent] {
                        out.push(edges[pedge]);
                    }
                }
            }
        }
    }
    out
}

/// All-pairs shortest-path distances plus canonical (lexicographically
/// smallest) shortest paths on the coupling graph.
#[derive(Debug, Clone)]
pub struct PathOracle {
    num_nodes: usize,
    dist: Vec<usize>,
}

impl PathOracle {
    fn build(backend: &BackendModel) -> Self {
        let n = backend.num_physical;
        let mut dist = vec![usize::MAX; n * n];
        for src in 0..n {
            let d = backend.bfs_dist_from(src);
            dist[src * n..(src + 1) * n].copy_from_slice(&d);
        }
        Self { num_nodes: n, dist }
    }

    pub fn dist(&self, i: usize, j: usize) -> usize {
        self.dist[i * self.num_nodes + j]
    }

    /// Lexicographically smallest shortest path from `i` to `j`, inclusive.
    pub fn canonical_path(&self, backend: &BackendModel, i: usize, j: usize) -> Vec<usize> {
        let mut path = vec![i];
        let mut cur = i;
        while cur != j {
            let next = backend
                .neighbors(cur)
                .iter()
                .copied()
                .filter(|&w| self.dist(w, j) + 1 == self.dist(cur, j))
                .min()
                .expect("connected graph has a descending neighbor");
            path.push(next);
            cur = next;
        }
        path
    }

    /// Mean two-qubit error rate along the canonical shortest path.
    pub fn mean_path_eps(&self, backend: &BackendModel, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let path = self.canonical_path(backend, i, j);
        let sum: f64 = path
            .windows(2)
            .map(|w| backend.eps_2q(w[0], w[1]))
            .sum();
        sum / (path.len() - 1) as f64
    }
}

/// Calibration JSON schema:
/// `{num_qubits, edges, eps_2q{"i-j": v}, eps_1q, eps_readout, t1_us, t2_us,
///   durations_ns{oneq,twoq,measure}}`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrationFile {
    num_qubits: usize,
    edges: Vec<[usize; 2]>,
    eps_2q: BTreeMap<String, f64>,
    eps_1q: Vec<f64>,
    eps_readout: Vec<f64>,
    t1_us: Vec<f64>,
    t2_us: Vec<f64>,
    durations_ns: DurationsNs,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DurationsNs {
    oneq: f64,
    twoq: f64,
    measure: f64,
}

impl CalibrationFile {
    fn into_model(self) -> Result<BackendModel, BackendError> {
        let mut eps_2q = BTreeMap::new();
        for (key, value) in &self.eps_2q {
            let parts: Vec<&str> = key.split('-').collect();
            if parts.len() != 2 {
                return Err(BackendError::Schema(format!("bad eps_2q key `{key}`")));
            }
            let a: usize = parts[0]
                .parse()
                .map_err(|_| BackendError::Schema(format!("bad eps_2q key `{key}`")))?;
            let b: usize = parts[1]
                .parse()
                .map_err(|_| BackendError::Schema(format!("bad eps_2q key `{key}`")))?;
            eps_2q.insert((a.min(b), a.max(b)), *value);
        }
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&[a, b]| (a.min(b), a.max(b)))
            .collect();
        for e in &edges {
            if !eps_2q.contains_key(e) {
                return Err(BackendError::Schema(format!(
                    "edge ({}, {}) missing from eps_2q",
                    e.0, e.1
                )));
            }
        }
        BackendModel::new(
            self.num_qubits,
            edges,
            |a, b| eps_2q[&(a.min(b), a.max(b))],
            self.eps_1q,
            self.eps_readout,
            self.t1_us.iter().map(|t| t * 1e-6).collect(),
            self.t2_us.iter().map(|t| t * 1e-6).collect(),
            GateDurations {
                one_qubit: self.durations_ns.oneq * 1e-9,
                two_qubit: self.durations_ns.twoq * 1e-9,
                measure: self.durations_ns.measure * 1e-9,
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line4() -> BackendModel {
        synthetic_backend(TopologyKind::Line, 4, NoiseProfile::default_uniform()).unwrap()
    }

    #[test]
    fn line_topology_edges() {
        let b = line4();
        assert_eq!(b.edges(), &[(0, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn ring_topology_degrees() {
        let b = synthetic_backend(TopologyKind::Ring, 5, NoiseProfile::default_uniform()).unwrap();
        assert_eq!(b.edges().len(), 5);
        for q in 0..5 {
            assert_eq!(b.neighbors(q).len(), 2);
        }
    }

    #[test]
    fn heterogeneous_is_deterministic() {
        let p = NoiseProfile::Heterogeneous { seed: 3, spread: 0.5 };
        let a = synthetic_backend(TopologyKind::Ring, 6, p).unwrap();
        let b = synthetic_backend(TopologyKind::Ring, 6, p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn swap_distance_on_line() {
        let b = line4();
        assert_eq!(b.swap_distance(0, 1), 1);
        assert_eq!(b.swap_distance(0, 3), 3);
    }

    #[test]
    fn path_oracle_matches_bfs_on_heavyhex() {
        let b = synthetic_backend(TopologyKind::HeavyHexFragment, 12, NoiseProfile::default_uniform())
            .unwrap();
        let oracle = b.path_oracle();
        for i in 0..12 {
            let d = b.bfs_dist_from(i);
            for j in 0..12 {
                assert_eq!(oracle.dist(i, j), d[j]);
                assert_eq!(oracle.dist(i, j), oracle.dist(j, i));
            }
            assert_eq!(oracle.dist(i, i), 0);
        }
    }

    #[test]
    fn perturb_is_deterministic() {
        let b = BackendModel::bundled_heavyhex_12();
        assert_eq!(b.perturb(9), b.perturb(9));
    }

    #[test]
    fn perturb_never_removes_bridges() {
        let b = line4();
        for seed in 0..200 {
            let p = b.perturb(seed);
            assert_eq!(p.edges(), b.edges(), "line edges are all bridges");
        }
    }

    #[test]
    fn perturb_mean_shift_small() {
        let b = BackendModel::bundled_heavyhex_12();
        let base: f64 = b.eps_1q.iter().sum::<f64>() / b.eps_1q.len() as f64;
        let mut total = 0.0;
        let trials = 1000;
        for seed in 0..trials {
            let p = b.perturb(seed);
            total += p.eps_1q.iter().sum::<f64>() / p.eps_1q.len() as f64;
        }
        let ratio = (total / trials as f64) / base;
        assert!(
            (0.95..=1.05).contains(&ratio),
            "mean multiplicative shift {ratio}"
        );
    }

    #[test]
    fn perturb_upholds_invariants() {
        let b = synthetic_backend(
            TopologyKind::HeavyHexFragment,
            12,
            NoiseProfile::Heterogeneous { seed: 1, spread: 0.4 },
        )
        .unwrap();
        for seed in 0..10_000 {
            // `finish` inside perturb revalidates every invariant.
            let p = b.perturb(seed);
            for q in 0..p.num_physical {
                assert!(p.t2[q] <= 2.0 * p.t1[q] + 1e-15);
            }
        }
    }

    #[test]
    fn bundled_calibration_shape() {
        let b = BackendModel::bundled_heavyhex_12();
        assert_eq!(b.num_physical, 12);
        assert_eq!(b.edges().len(), 13);
        assert!(b.neighbors(0).len() <= 3);
    }

    #[test]
    fn calibration_rejects_t2_violation() {
        let mut b = line4();
        b.t2[0] = 3.0 * b.t1[0];
        let text = b.to_calibration_json();
        let err = BackendModel::from_calibration_json(&text).unwrap_err();
        assert!(matches!(err, BackendError::T2ExceedsTwiceT1 { .. }));
    }

    #[test]
    fn calibration_rejects_disconnected_graph() {
        let text = r#"{
          "num_qubits": 4,
          "edges": [[0,1],[2,3]],
          "eps_2q": {"0-1": 0.01, "2-3": 0.01},
          "eps_1q": [0.001,0.001,0.001,0.001],
          "eps_readout": [0.01,0.01,0.01,0.01],
          "t1_us": [100,100,100,100],
          "t2_us": [80,80,80,80],
          "durations_ns": {"oneq": 35, "twoq": 300, "measure": 1000}
        }"#;
        let err = BackendModel::from_calibration_json(text).unwrap_err();
        assert!(matches!(err, BackendError::Disconnected));
    }
}
