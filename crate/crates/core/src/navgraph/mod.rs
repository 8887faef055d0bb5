//! Navigation graphs: viewpoints with 3D positions, weighted edges, semantic
//! labels, and a feature codebook. Serves panoramic observations and the
//! shortest-path teacher oracle.

mod connectivity;
mod generate;

pub use connectivity::load_connectivity;
pub use generate::generate_world;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_for;
use rand::Rng;

/// Candidate index of the STOP action.
pub const STOP: usize = 0;

/// Maximum candidates per observation, STOP included.
pub const MAX_CANDIDATES: usize = 12;

pub const WORLD_FORMAT_VERSION: &str = "uln-world/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Viewpoint {
    pub id: String,
    pub position: [f64; 3],
    /// Room label as a vocabulary index; absent for loaded scan data.
    pub room_label: Option<u32>,
    /// Up to three object labels as vocabulary indices.
    pub object_labels: Vec<u32>,
}

/// One selectable option at a step: STOP or an adjacent viewpoint.
#[derive(Debug, Clone)]
pub struct Candidate {
    /// Graph index of the target viewpoint; `None` for STOP.
    pub target: Option<usize>,
    pub visual: Vec<f64>,
    pub angle: Vec<f64>,
}

/// Panoramic observation: candidate 0 is always STOP, the rest are the
/// adjacent viewpoints ordered by relative bearing.
#[derive(Debug, Clone)]
pub struct Observation {
    pub candidates: Vec<Candidate>,
}

impl Observation {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WorldSpec {
    pub n_viewpoints: usize,
    pub mean_degree: f64,
    /// Number of distinct label words (rooms + objects) the world draws on.
    pub vocab_size: usize,
    pub feature_dim: usize,
    #[serde(default = "default_angle_dim")]
    pub angle_dim: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

fn default_angle_dim() -> usize {
    8
}

impl Default for WorldSpec {
    fn default() -> Self {
        WorldSpec {
            n_viewpoints: 30,
            mean_degree: 3.0,
            vocab_size: 48,
            feature_dim: 32,
            angle_dim: 8,
            noise_sigma: 0.05,
            seed: 0,
        }
    }
}

impl WorldSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_viewpoints < 4 {
            return Err(Error::Config("n_viewpoints must be ≥ 4".into()));
        }
        if self.mean_degree < 2.0 {
            return Err(Error::Config("mean_degree must be ≥ 2".into()));
        }
        if self.noise_sigma < 0.0 {
            return Err(Error::Config("noise_sigma must be ≥ 0".into()));
        }
        if self.feature_dim == 0 {
            return Err(Error::Config("feature_dim must be positive".into()));
        }
        if self.angle_dim < 4 || self.angle_dim % 4 != 0 {
            return Err(Error::Config("angle_dim must be a positive multiple of 4".into()));
        }
        if !(8..=60).contains(&self.vocab_size) {
            return Err(Error::Config("vocab_size must be in 8..=60".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct NavigationGraph {
    viewpoints: Vec<Viewpoint>,
    index: HashMap<String, usize>,
    /// Sorted adjacency: (neighbor index, edge length in meters).
    adj: Vec<Vec<(usize, f64)>>,
    codebook: BTreeMap<u32, Vec<f64>>,
    pub feature_dim: usize,
    pub angle_dim: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// On-disk form, `uln-world/1`.
#[derive(Serialize, Deserialize)]
struct WorldFile {
    version: String,
    seed: u64,
    feature_dim: usize,
    angle_dim: usize,
    noise_sigma: f64,
    viewpoints: Vec<Viewpoint>,
    /// Undirected edges as (id, id, meters); lengths are re-validated on load.
    edges: Vec<(String, String, f64)>,
    codebook: BTreeMap<u32, Vec<f64>>,
}

impl NavigationGraph {
    /// Build and validate a graph from parts. Edge lengths are computed from
    /// endpoint positions, so the length invariant holds by construction.
    pub fn from_parts(
        viewpoints: Vec<Viewpoint>,
        edges: &[(String, String)],
        codebook: BTreeMap<u32, Vec<f64>>,
        feature_dim: usize,
        angle_dim: usize,
        noise_sigma: f64,
        seed: u64,
    ) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, vp) in viewpoints.iter().enumerate() {
            if index.insert(vp.id.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate viewpoint id `{}`", vp.id)));
            }
            if !vp.position.iter().all(|v| v.is_finite()) {
                return Err(Error::Validation(format!("non-finite position for `{}`", vp.id)));
            }
            if vp.object_labels.len() > 3 {
                return Err(Error::Validation(format!(
                    "viewpoint `{}` has more than 3 object labels",
                    vp.id
                )));
            }
            for label in vp.object_labels.iter().chain(vp.room_label.iter()) {
                if !codebook.is_empty() && !codebook.contains_key(label) {
                    return Err(Error::Validation(format!(
                        "viewpoint `{}` uses label {label} missing from the codebook",
                        vp.id
                    )));
                }
            }
        }
        for vec in codebook.values() {
            if vec.len() != feature_dim {
                return Err(Error::Validation(format!(
                    "codebook vector length {} != feature_dim {}",
                    vec.len(),
                    feature_dim
                )));
            }
        }
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); viewpoints.len()];
        for (a, b) in edges {
            let &ia = index
                .get(a)
                .ok_or_else(|| Error::UnknownViewpoint(a.clone()))?;
            let &ib = index
                .get(b)
                .ok_or_else(|| Error::UnknownViewpoint(b.clone()))?;
            if ia == ib {
                return Err(Error::Validation(format!("self edge on `{a}`")));
            }
            let len = euclidean(&viewpoints[ia].position, &viewpoints[ib].position);
            if adj[ia].iter().any(|&(n, _)| n == ib) {
                continue;
            }
            adj[ia].push((ib, len));
            adj[ib].push((ia, len));
        }
        for list in &mut adj {
            list.sort_by(|a, b| a.0.cmp(&b.0));
        }
        let graph = NavigationGraph {
            viewpoints,
            index,
            adj,
            codebook,
            feature_dim,
            angle_dim,
            noise_sigma,
            seed,
        };
        let components = graph.components();
        if components.len() > 1 {
            let listing: Vec<String> = components
                .iter()
                .map(|c| {
                    let mut ids: Vec<&str> =
                        c.iter().map(|&i| graph.viewpoints[i].id.as_str()).collect();
                    ids.sort_unstable();
                    format!("[{}]", ids.join(", "))
                })
                .collect();
            return Err(Error::Validation(format!(
                "graph is disconnected; components: {}",
                listing.join(" ")
            )));
        }
        Ok(graph)
    }

    pub fn len(&self) -> usize {
        self.viewpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.viewpoints.is_empty()
    }

    pub fn viewpoint(&self, idx: usize) -> &Viewpoint {
        &self.viewpoints[idx]
    }

    pub fn viewpoints(&self) -> &[Viewpoint] {
        &self.viewpoints
    }

    pub fn codebook(&self) -> &BTreeMap<u32, Vec<f64>> {
        &self.codebook
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownViewpoint(id.to_string()))
    }

    pub fn neighbors(&self, idx: usize) -> &[(usize, f64)] {
        &self.adj[idx]
    }

    pub fn degree(&self, idx: usize) -> usize {
        self.adj[idx].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    fn components(&self) -> Vec<Vec<usize>> {
        let n = self.viewpoints.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut stack = vec![start];
            let mut comp = Vec::new();
            seen[start] = true;
            while let Some(u) = stack.pop() {
                comp.push(u);
                for &(v, _) in &self.adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    /// Dijkstra distances (meters) from `source` to every viewpoint.
    pub fn distances_from(&self, source: usize) -> Vec<f64> {
        let n = self.viewpoints.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(HeapEntry { cost: 0.0, node: source });
        while let Some(HeapEntry { cost, node }) = heap.pop() {
            if cost > dist[node] {
                continue;
            }
            for &(next, w) in &self.adj[node] {
                let c = cost + w;
                if c < dist[next] {
                    dist[next] = c;
                    heap.push(HeapEntry { cost: c, node: next });
                }
            }
        }
        dist
    }

    /// Shortest-path distance in meters between two viewpoint ids.
    pub fn geodesic_distance(&self, a: &str, b: &str) -> Result<f64> {
        let (ia, ib) = (self.index_of(a)?, self.index_of(b)?);
        Ok(self.geodesic_by_index(ia, ib))
    }

    pub fn geodesic_by_index(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        self.distances_from(a)[b]
    }

    /// Shortest path as a viewpoint index sequence, start and goal included.
    /// Ties between equal-length paths resolve toward the lowest next index.
    pub fn shortest_path(&self, start: usize, goal: usize) -> Result<Vec<usize>> {
        let dist = self.distances_from(goal);
        if !dist[start].is_finite() {
            return Err(Error::Infeasible(format!(
                "no path from `{}` to `{}`",
                self.viewpoints[start].id, self.viewpoints[goal].id
            )));
        }
        let mut path = vec![start];
        let mut here = start;
        while here != goal {
            let mut next = None;
            for &(v, w) in &self.adj[here] {
                if (w + dist[v] - dist[here]).abs() < 1e-9 {
                    next = Some(v);
                    break;
                }
            }
            let v = next.ok_or_else(|| {
                Error::Invariant("shortest-path reconstruction lost the gradient".into())
            })?;
            path.push(v);
            here = v;
        }
        Ok(path)
    }

    /// Hop count of the weighted shortest path.
    pub fn shortest_hops(&self, start: usize, goal: usize) -> Result<usize> {
        Ok(self.shortest_path(start, goal)?.len() - 1)
    }

    /// Bearing of the edge `from → to` in the world frame.
    pub fn bearing(&self, from: usize, to: usize) -> f64 {
        let p = &self.viewpoints[from].position;
        let q = &self.viewpoints[to].position;
        (q[1] - p[1]).atan2(q[0] - p[0])
    }

    /// Panoramic observation at a viewpoint. Candidate 0 is STOP with zero
    /// features; neighbors follow, ordered by bearing relative to `heading`.
    pub fn observe(&self, at: &str, heading: f64) -> Result<Observation> {
        let idx = self.index_of(at)?;
        self.observe_by_index(idx, heading)
    }

    pub fn observe_by_index(&self, at: usize, heading: f64) -> Result<Observation> {
        let here = &self.viewpoints[at].position;
        let mut order: Vec<(f64, usize)> = self.adj[at]
            .iter()
            .map(|&(v, _)| {
                let rel = normalize_angle(self.bearing(at, v) - heading);
                (rel, v)
            })
            .collect();
        order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
        if order.len() + 1 > MAX_CANDIDATES {
            return Err(Error::Validation(format!(
                "viewpoint `{}` has {} neighbors; max is {}",
                self.viewpoints[at].id,
                order.len(),
                MAX_CANDIDATES - 1
            )));
        }
        let mut candidates = Vec::with_capacity(order.len() + 1);
        candidates.push(Candidate {
            target: None,
            visual: vec![0.0; self.feature_dim],
            angle: vec![0.0; self.angle_dim],
        });
        for (rel, v) in order {
            let target = &self.viewpoints[v].position;
            let dxy = ((target[0] - here[0]).powi(2) + (target[1] - here[1]).powi(2)).sqrt();
            let pitch = (target[2] - here[2]).atan2(dxy);
            let pattern = [rel.sin(), rel.cos(), pitch.sin(), pitch.cos()];
            let angle: Vec<f64> =
                (0..self.angle_dim).map(|i| pattern[i % 4]).collect();
            candidates.push(Candidate { target: Some(v), visual: self.visual_feature(v), angle });
        }
        Ok(Observation { candidates })
    }

    /// Sum of codebook vectors for the viewpoint's labels plus per-viewpoint
    /// Gaussian noise seeded by `(world seed, viewpoint)`.
    fn visual_feature(&self, target: usize) -> Vec<f64> {
        let mut feature = vec![0.0; self.feature_dim];
        let vp = &self.viewpoints[target];
        for label in vp.room_label.iter().chain(vp.object_labels.iter()) {
            if let Some(vec) = self.codebook.get(label) {
                for (f, v) in feature.iter_mut().zip(vec) {
                    *f += v;
                }
            }
        }
        if self.noise_sigma > 0.0 {
            let mut rng = rng_for(self.seed, "obs-noise", target as u64);
            for f in feature.iter_mut() {
                let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                let u2: f64 = rng.gen_range(0.0..1.0);
                *f += self.noise_sigma
                    * (-2.0 * u1.ln()).sqrt()
                    * (2.0 * std::f64::consts::PI * u2).cos();
            }
        }
        feature
    }

    /// Oracle action: STOP at the goal, otherwise the lowest-index candidate
    /// whose target lies on a shortest path to the goal.
    pub fn teacher_action(&self, at: &str, heading: f64, goal: &str) -> Result<usize> {
        let (ia, ig) = (self.index_of(at)?, self.index_of(goal)?);
        self.teacher_action_by_index(ia, heading, ig)
    }

    pub fn teacher_action_by_index(&self, at: usize, heading: f64, goal: usize) -> Result<usize> {
        if at == goal {
            return Ok(STOP);
        }
        let dist = self.distances_from(goal);
        if !dist[at].is_finite() {
            return Err(Error::Infeasible(format!(
                "goal `{}` unreachable from `{}`",
                self.viewpoints[goal].id, self.viewpoints[at].id
            )));
        }
        let obs = self.observe_by_index(at, heading)?;
        for (i, cand) in obs.candidates.iter().enumerate().skip(1) {
            let v = cand.target.expect("non-STOP candidate has a target");
            let w = self.adj[at]
                .iter()
                .find(|&&(n, _)| n == v)
                .map(|&(_, w)| w)
                .expect("candidate is adjacent");
            if (w + dist[v] - dist[at]).abs() < 1e-9 {
                return Ok(i);
            }
        }
        Err(Error::Invariant(format!(
            "no shortest-path candidate at `{}` toward `{}`",
            self.viewpoints[at].id, self.viewpoints[goal].id
        )))
    }

    pub fn to_json(&self) -> Result<String> {
        let mut edges = Vec::new();
        for (u, list) in self.adj.iter().enumerate() {
            for &(v, len) in list {
                if u < v {
                    edges.push((self.viewpoints[u].id.clone(), self.viewpoints[v].id.clone(), len));
                }
            }
        }
        let file = WorldFile {
            version: WORLD_FORMAT_VERSION.to_string(),
            seed: self.seed,
            feature_dim: self.feature_dim,
            angle_dim: self.angle_dim,
            noise_sigma: self.noise_sigma,
            viewpoints: self.viewpoints.clone(),
            edges,
            codebook: self.codebook.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: WorldFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            context: format!("world json line {}", e.line()),
            message: e.to_string(),
        })?;
        if file.version != WORLD_FORMAT_VERSION {
            return Err(Error::Validation(format!(
                "unsupported world version `{}` (expected `{WORLD_FORMAT_VERSION}`)",
                file.version
            )));
        }
        let edges: Vec<(String, String)> =
            file.edges.iter().map(|(a, b, _)| (a.clone(), b.clone())).collect();
        let graph = NavigationGraph::from_parts(
            file.viewpoints,
            &edges,
            file.codebook,
            file.feature_dim,
            file.angle_dim,
            file.noise_sigma,
            file.seed,
        )?;
        for (a, b, len) in &file.edges {
            let d = graph.geodesic_unchecked_edge(a, b)?;
            if (d - len).abs() > 1e-9 {
                return Err(Error::Validation(format!(
                    "edge {a}–{b} length {len} differs from endpoint distance {d}"
                )));
            }
        }
        Ok(graph)
    }

    fn geodesic_unchecked_edge(&self, a: &str, b: &str) -> Result<f64> {
        let (ia, ib) = (self.index_of(a)?, self.index_of(b)?);
        Ok(euclidean(&self.viewpoints[ia].position, &self.viewpoints[ib].position))
    }
}

#[derive(PartialEq)]
struct HeapEntry {
    cost: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap by cost; ties by node index for determinism.
        other
            .cost
            .partial_cmp(&self.cost)
            .unwrap_or(Ordering::Equal)
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn euclidean(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Wrap an angle into `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    theta.rem_euclid(2.0 * std::f64::consts::PI)
}
