//! Analysis graphs of tensor networks and their multiplicative cuts.
//!
//! Weights are exact (`BigUint`). Minimum cuts are located by max-flow over
//! log capacities and then re-weighed exactly from the recovered edge set.

use std::collections::VecDeque;
use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::convac::{ConvACSpec, DepthKind, OUTPUT_LABEL};
use crate::error::{Error, Result};
use crate::network::{NodeKind, TensorNetwork, UnionFind};
use crate::partition::InputPartition;

/// Largest number of free vertices for the exhaustive solver.
pub const EXHAUSTIVE_VERTEX_CAP: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VertexKind {
    /// A dense tensor node (or any non-δ vertex of a hand-built graph).
    Tensor,
    /// A δ node; all its incident edges form one group.
    Delta,
    /// Degree-1 terminal for input `i`.
    Input(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphEdge {
    pub id: usize,
    pub u: usize,
    pub v: usize,
    pub dim: usize,
    pub group: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeGroup {
    pub dim: usize,
    /// The δ vertex owning the group, if any.
    pub delta: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisGraph {
    vertices: Vec<VertexKind>,
    labels: Vec<Option<String>>,
    edges: Vec<GraphEdge>,
    groups: Vec<EdgeGroup>,
    /// `inputs[i]` is the vertex of input `i`.
    inputs: Vec<usize>,
}

/// Hand construction of analysis graphs. Input vertices are numbered in creation order.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    vertices: Vec<VertexKind>,
    labels: Vec<Option<String>>,
    edges: Vec<(Option<usize>, usize, usize, usize)>,
    delta_dims: Vec<Option<usize>>,
    inputs: Vec<usize>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, kind: VertexKind, label: Option<String>, delta_dim: Option<usize>) -> usize {
        self.vertices.push(kind);
        self.labels.push(label);
        self.delta_dims.push(delta_dim);
        self.vertices.len() - 1
    }

    pub fn tensor(&mut self, label: &str) -> usize {
        self.push(VertexKind::Tensor, Some(label.to_string()), None)
    }

    pub fn delta(&mut self, dim: usize, label: &str) -> usize {
        self.push(VertexKind::Delta, Some(label.to_string()), Some(dim))
    }

    pub fn input(&mut self) -> usize {
        let i = self.inputs.len();
        let v = self.push(VertexKind::Input(i), None, None);
        self.inputs.push(v);
        v
    }

    /// Adds an edge; its id is the running edge count.
    pub fn edge(&mut self, u: usize, v: usize, dim: usize) -> usize {
        self.edges.push((None, u, v, dim));
        self.edges.len() - 1
    }

    fn edge_with_id(&mut self, id: usize, u: usize, v: usize, dim: usize) {
        self.edges.push((Some(id), u, v, dim));
    }

    pub fn build(self) -> Result<AnalysisGraph> {
        let nv = self.vertices.len();
        let mut groups: Vec<EdgeGroup> = Vec::new();
        let mut delta_group = vec![usize::MAX; nv];
        for (v, d) in self.delta_dims.iter().enumerate() {
            if let Some(dim) = d {
                if *dim == 0 {
                    return Err(Error::Graph(format!("δ vertex {v} has dimension 0")));
                }
                delta_group[v] = groups.len();
                groups.push(EdgeGroup { dim: *dim, delta: Some(v) });
            }
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        let mut seen_ids = std::collections::HashSet::new();
        for (k, &(id, u, v, dim)) in self.edges.iter().enumerate() {
            let id = id.unwrap_or(k);
            if !seen_ids.insert(id) {
                return Err(Error::Graph(format!("duplicate edge id {id}")));
            }
            if u >= nv || v >= nv {
                return Err(Error::Graph(format!("edge {id} has an unknown endpoint")));
            }
            if u == v {
                return Err(Error::Graph(format!("edge {id} is a self-loop")));
            }
            if dim == 0 {
                return Err(Error::Graph(format!("edge {id} has dimension 0")));
            }
            let du = delta_group[u] != usize::MAX;
            let dv = delta_group[v] != usize::MAX;
            let group = match (du, dv) {
                (true, true) => {
                    return Err(Error::Graph(format!("edge {id} joins two δ vertices")));
                }
                (true, false) | (false, true) => {
                    let g = if du { delta_group[u] } else { delta_group[v] };
                    if groups[g].dim != dim {
                        return Err(Error::Graph(format!(
                            "edge {id} has dimension {dim} but its δ group has {}",
                            groups[g].dim
                        )));
                    }
                    g
                }
                (false, false) => {
                    groups.push(EdgeGroup { dim, delta: None });
                    groups.len() - 1
                }
            };
            edges.push(GraphEdge { id, u, v, dim, group });
        }
        let g = AnalysisGraph {
            vertices: self.vertices,
            labels: self.labels,
            edges,
            groups,
            inputs: self.inputs,
        };
        g.check()?;
        Ok(g)
    }
}

impl AnalysisGraph {
    fn check(&self) -> Result<()> {
        if self.inputs.len() < 2 {
            return Err(Error::Graph("an analysis graph needs at least two inputs".into()));
        }
        let deg = self.degrees();
        for (i, &v) in self.inputs.iter().enumerate() {
            if deg[v] != 1 {
                return Err(Error::Graph(format!("input {i} has degree {}, expected 1", deg[v])));
            }
        }
        if !self.is_connected() {
            return Err(Error::Graph("graph is disconnected".into()));
        }
        Ok(())
    }

    fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertices.len()];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg
    }

    fn is_connected(&self) -> bool {
        let mut uf = UnionFind::new(self.vertices.len());
        for e in &self.edges {
            uf.union(e.u, e.v);
        }
        (1..self.vertices.len()).all(|v| uf.find(v) == uf.find(0))
    }

    pub fn vertices(&self) -> &[VertexKind] {
        &self.vertices
    }

    pub fn vertex_label(&self, v: usize) -> Option<&str> {
        self.labels.get(v).and_then(|l| l.as_deref())
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn groups(&self) -> &[EdgeGroup] {
        &self.groups
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn edge(&self, id: usize) -> Option<&GraphEdge> {
        self.edges.iter().find(|e| e.id == id)
    }

    pub fn max_dim(&self) -> usize {
        self.edges.iter().map(|e| e.dim).max().unwrap_or(1)
    }

    /// The same graph with every group dimension rounded down to a power of `p`.
    pub fn rounded(&self, p: usize) -> Self {
        let round = |d: usize| {
            let mut q = 1usize;
            while q.saturating_mul(p) <= d {
                q *= p;
            }
            q
        };
        let mut g = self.clone();
        for grp in &mut g.groups {
            grp.dim = round(grp.dim);
        }
        for e in &mut g.edges {
            e.dim = g.groups[e.group].dim;
        }
        g
    }

    fn check_partition(&self, p: &InputPartition) -> Result<()> {
        if p.n() != self.inputs.len() {
            return Err(Error::Partition(format!(
                "partition covers {} inputs, graph has {}",
                p.n(),
                self.inputs.len()
            )));
        }
        Ok(())
    }

    fn index_of(&self, id: usize) -> Result<usize> {
        self.edges
            .iter()
            .position(|e| e.id == id)
            .ok_or_else(|| Error::Graph(format!("unknown edge id {id}")))
    }

    /// Vertices reachable from `V^A` once `cut` (edge indices) is removed,
    /// or an error if some `V^B` vertex is reachable too.
    fn separated_side(&self, p: &InputPartition, cut: &[bool]) -> Result<Vec<bool>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (k, e) in self.edges.iter().enumerate() {
            if !cut[k] {
                adj[e.u].push(e.v);
                adj[e.v].push(e.u);
            }
        }
        let mut side = vec![false; self.vertices.len()];
        let mut queue: VecDeque<usize> = p.a().iter().map(|&i| self.inputs[i]).collect();
        for &v in &queue {
            side[v] = true;
        }
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !side[w] {
                    side[w] = true;
                    queue.push_back(w);
                }
            }
        }
        if p.b().iter().any(|&i| side[self.inputs[i]]) {
            return Err(Error::Partition("edge set does not separate A from B".into()));
        }
        Ok(side)
    }

    fn plain_weight(&self, cut: &[bool]) -> BigUint {
        self.edges
            .iter()
            .zip(cut)
            .filter(|(_, &c)| c)
            .fold(BigUint::one(), |acc, (e, _)| acc * e.dim)
    }

    fn modified_weight(&self, cut: &[bool]) -> BigUint {
        let mut hit = vec![false; self.groups.len()];
        for (e, &c) in self.edges.iter().zip(cut) {
            if c {
                hit[e.group] = true;
            }
        }
        self.groups
            .iter()
            .zip(hit)
            .filter(|(_, h)| *h)
            .fold(BigUint::one(), |acc, (g, _)| acc * g.dim)
    }

    fn mask_of(&self, cut_edges: &[usize]) -> Result<Vec<bool>> {
        let mut cut = vec![false; self.edges.len()];
        for &id in cut_edges {
            cut[self.index_of(id)?] = true;
        }
        Ok(cut)
    }

    /// Product of the dimensions of `cut_edges`, which must separate the partition.
    pub fn cut_weight(&self, p: &InputPartition, cut_edges: &[usize]) -> Result<BigUint> {
        self.check_partition(p)?;
        let cut = self.mask_of(cut_edges)?;
        self.separated_side(p, &cut)?;
        Ok(self.plain_weight(&cut))
    }

    /// Product of the dimensions of the groups touched by `cut_edges`.
    pub fn modified_cut_weight(&self, p: &InputPartition, cut_edges: &[usize]) -> Result<BigUint> {
        self.check_partition(p)?;
        let cut = self.mask_of(cut_edges)?;
        self.separated_side(p, &cut)?;
        Ok(self.modified_weight(&cut))
    }

    fn report(&self, p: &InputPartition, side: Vec<bool>, weighting: Weighting, method: CutMethod) -> Result<CutReport> {
        let cut: Vec<bool> = self.edges.iter().map(|e| side[e.u] != side[e.v]).collect();
        // side is a vertex bipartition, so it separates by construction; check anyway
        self.separated_side(p, &cut)?;
        let weight = match weighting {
            Weighting::Plain => self.plain_weight(&cut),
            Weighting::Modified => self.modified_weight(&cut),
        };
        let mut cut_edges: Vec<usize> = self
            .edges
            .iter()
            .zip(&cut)
            .filter(|(_, &c)| c)
            .map(|(e, _)| e.id)
            .collect();
        cut_edges.sort_unstable();
        let side_a = (0..side.len()).filter(|&v| side[v]).collect();
        Ok(CutReport {
            log_weight: ln_big(&weight),
            weight,
            cut_edges,
            side_a,
            method,
            weighting,
        })
    }

    pub fn min_cut(&self, p: &InputPartition) -> Result<CutReport> {
        self.min_cut_with(p, Weighting::Plain, CutMethod::Flow)
    }

    pub fn modified_min_cut(&self, p: &InputPartition) -> Result<CutReport> {
        self.min_cut_with(p, Weighting::Modified, CutMethod::Flow)
    }

    pub fn min_cut_with(&self, p: &InputPartition, weighting: Weighting, method: CutMethod) -> Result<CutReport> {
        self.check_partition(p)?;
        let side = match (method, weighting) {
            (CutMethod::Flow, Weighting::Plain) => self.plain_flow_side(p)?,
            (CutMethod::Flow, Weighting::Modified) => self.modified_flow_side(p)?,
            (CutMethod::Exhaustive, w) => self.exhaustive_side(p, w)?,
            (CutMethod::ClosedForm, _) => {
                return Err(Error::Config("closed forms are evaluated from a spec, not a graph".into()));
            }
        };
        self.report(p, side, weighting, method)
    }

    fn plain_flow_side(&self, p: &InputPartition) -> Result<Vec<bool>> {
        let nv = self.vertices.len();
        let (s, t) = (nv, nv + 1);
        let mut net = FlowNet::new(nv + 2);
        for &i in p.a() {
            net.arc(s, self.inputs[i], f64::INFINITY);
        }
        for i in p.b() {
            net.arc(self.inputs[i], t, f64::INFINITY);
        }
        for e in &self.edges {
            net.undirected(e.u, e.v, (e.dim as f64).ln());
        }
        let reach = net.min_cut_source_side(s, t)?;
        Ok(reach[..nv].to_vec())
    }

    fn modified_flow_side(&self, p: &InputPartition) -> Result<Vec<bool>> {
        let nv = self.vertices.len();
        let (vin, vout) = (|v: usize| 2 * v, |v: usize| 2 * v + 1);
        let (s, t) = (2 * nv, 2 * nv + 1);
        let mut net = FlowNet::new(2 * nv + 2);
        for (v, kind) in self.vertices.iter().enumerate() {
            let cap = match kind {
                VertexKind::Delta => {
                    let g = self.groups.iter().find(|g| g.delta == Some(v)).expect("δ group");
                    (g.dim as f64).ln()
                }
                _ => f64::INFINITY,
            };
            net.arc(vin(v), vout(v), cap);
        }
        for &i in p.a() {
            net.arc(s, vin(self.inputs[i]), f64::INFINITY);
        }
        for i in p.b() {
            net.arc(vout(self.inputs[i]), t, f64::INFINITY);
        }
        for e in &self.edges {
            let cap = if self.groups[e.group].delta.is_some() {
                f64::INFINITY
            } else {
                (e.dim as f64).ln()
            };
            net.arc(vout(e.u), vin(e.v), cap);
            net.arc(vout(e.v), vin(e.u), cap);
        }
        let reach = net.min_cut_source_side(s, t)?;
        Ok((0..nv).map(|v| reach[vin(v)]).collect())
    }

    /// Minimizes over all 2-colourings of the non-input vertices. Every minimal
    /// separating edge set is the boundary of such a colouring, so this is exact.
    fn exhaustive_side(&self, p: &InputPartition, weighting: Weighting) -> Result<Vec<bool>> {
        let free: Vec<usize> = (0..self.vertices.len())
            .filter(|&v| !matches!(self.vertices[v], VertexKind::Input(_)))
            .collect();
        if free.len() > EXHAUSTIVE_VERTEX_CAP {
            return Err(Error::Config(format!(
                "exhaustive search over {} vertices exceeds the cap of {EXHAUSTIVE_VERTEX_CAP}",
                free.len()
            )));
        }
        let mut side = vec![false; self.vertices.len()];
        for &i in p.a() {
            side[self.inputs[i]] = true;
        }
        let ln_edge: Vec<f64> = self.edges.iter().map(|e| (e.dim as f64).ln()).collect();
        let ln_group: Vec<f64> = self.groups.iter().map(|g| (g.dim as f64).ln()).collect();
        let mut incident = vec![Vec::new(); self.vertices.len()];
        for (k, e) in self.edges.iter().enumerate() {
            incident[e.u].push(k);
            incident[e.v].push(k);
        }
        let mut cut = vec![false; self.edges.len()];
        let mut group_cuts = vec![0usize; self.groups.len()];
        let mut ln = 0.0;
        let mut toggle = |k: usize, now_cut: bool, cut: &mut [bool], ln: &mut f64| {
            if cut[k] == now_cut {
                return;
            }
            cut[k] = now_cut;
            let g = self.edges[k].group;
            let sign = if now_cut { 1.0 } else { -1.0 };
            match weighting {
                Weighting::Plain => *ln += sign * ln_edge[k],
                Weighting::Modified => {
                    let before = group_cuts[g];
                    group_cuts[g] = if now_cut { before + 1 } else { before - 1 };
                    if (before == 0) != (group_cuts[g] == 0) {
                        *ln += sign * ln_group[g];
                    }
                }
            }
        };
        for k in 0..self.edges.len() {
            let e = &self.edges[k];
            toggle(k, side[e.u] != side[e.v], &mut cut, &mut ln);
        }
        // Gray-code walk: one vertex flips per step. Candidates are screened in
        // log space and near-ties are settled exactly.
        let mut best: Option<(f64, BigUint, Vec<bool>)> = None;
        for step in 0u64..(1u64 << free.len()) {
            if step > 0 {
                let v = free[step.trailing_zeros() as usize];
                side[v] = !side[v];
                for &k in &incident[v] {
                    let e = &self.edges[k];
                    toggle(k, side[e.u] != side[e.v], &mut cut, &mut ln);
                }
            }
            if best.as_ref().is_some_and(|(b, _, _)| ln > b + 1e-6) {
                continue;
            }
            let w = match weighting {
                Weighting::Plain => self.plain_weight(&cut),
                Weighting::Modified => self.modified_weight(&cut),
            };
            if best.as_ref().is_none_or(|(_, b, _)| w < *b) {
                best = Some((ln, w, side.clone()));
            }
        }
        Ok(best.expect("at least one colouring").2)
    }

    /// Largest over `q = 2..=max_dim` of the minimum cut with dimensions rounded
    /// down to powers of `q`. Returns the bound and the maximizing `q`.
    pub fn rank_lower_bound(&self, p: &InputPartition) -> Result<(BigUint, usize)> {
        self.check_partition(p)?;
        let mut best = (BigUint::one(), 1usize);
        for q in 2..=self.max_dim() {
            let w = self.rounded(q).modified_min_cut(p)?.weight;
            if w > best.0 {
                best = (w, q);
            }
        }
        Ok(best)
    }
}

fn ln_big(w: &BigUint) -> f64 {
    let bits = w.bits();
    if bits <= 1000 {
        let f: f64 = num_traits::ToPrimitive::to_f64(w).unwrap_or(f64::INFINITY);
        f.ln()
    } else {
        let shift = bits - 64;
        let top: f64 = num_traits::ToPrimitive::to_f64(&(w >> shift)).unwrap_or(f64::INFINITY);
        top.ln() + shift as f64 * std::f64::consts::LN_2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CutMethod {
    Flow,
    Exhaustive,
    ClosedForm,
}

impl fmt::Display for CutMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CutMethod::Flow => "flow",
            CutMethod::Exhaustive => "exhaustive",
            CutMethod::ClosedForm => "closed_form",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Plain,
    Modified,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutReport {
    pub weight: BigUint,
    pub log_weight: f64,
    /// Sorted edge ids.
    pub cut_edges: Vec<usize>,
    /// Vertices on the `A` side; one witness among possibly several minimum cuts.
    pub side_a: Vec<usize>,
    pub method: CutMethod,
    pub weighting: Weighting,
}

impl CutReport {
    pub fn closed_form(weight: BigUint) -> Self {
        Self {
            log_weight: ln_big(&weight),
            weight,
            cut_edges: Vec::new(),
            side_a: Vec::new(),
            method: CutMethod::ClosedForm,
            weighting: Weighting::Plain,
        }
    }
}

impl Serialize for CutReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("CutReport", 6)?;
        st.serialize_field("weight", &self.weight.to_string())?;
        st.serialize_field("log_weight", &self.log_weight)?;
        st.serialize_field("cut_edges", &self.cut_edges)?;
        st.serialize_field("method", &self.method)?;
        st.serialize_field("side_A", &self.side_a)?;
        st.serialize_field("weighting", &self.weighting)?;
        st.end()
    }
}

/// Residual network with paired arcs (`k ^ 1` is the reverse of `k`).
struct FlowNet {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<f64>,
}

const FLOW_EPS: f64 = 1e-12;

impl FlowNet {
    fn new(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
            to: Vec::new(),
            cap: Vec::new(),
        }
    }

    fn pair(&mut self, u: usize, v: usize, fwd: f64, back: f64) {
        self.adj[u].push(self.to.len());
        self.to.push(v);
        self.cap.push(fwd);
        self.adj[v].push(self.to.len());
        self.to.push(u);
        self.cap.push(back);
    }

    fn arc(&mut self, u: usize, v: usize, c: f64) {
        self.pair(u, v, c, 0.0);
    }

    fn undirected(&mut self, u: usize, v: usize, c: f64) {
        self.pair(u, v, c, c);
    }

    /// Edmonds-Karp; returns the set reachable from `s` in the final residual graph.
    fn min_cut_source_side(&mut self, s: usize, t: usize) -> Result<Vec<bool>> {
        let n = self.adj.len();
        loop {
            let mut via = vec![usize::MAX; n];
            let mut seen = vec![false; n];
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                if v == t {
                    break;
                }
                for &k in &self.adj[v] {
                    let w = self.to[k];
                    if !seen[w] && self.cap[k] > FLOW_EPS {
                        seen[w] = true;
                        via[w] = k;
                        queue.push_back(w);
                    }
                }
            }
            if !seen[t] {
                return Ok(seen);
            }
            let mut push = f64::INFINITY;
            let mut v = t;
            while v != s {
                let k = via[v];
                push = push.min(self.cap[k]);
                v = self.to[k ^ 1];
            }
            if push.is_infinite() {
                return Err(Error::Graph("no finite cut separates A from B".into()));
            }
            let mut v = t;
            while v != s {
                let k = via[v];
                self.cap[k] -= push;
                self.cap[k ^ 1] += push;
                v = self.to[k ^ 1];
            }
        }
    }
}

/// Builds the analysis graph of a ConvAC network: the class edge (the one open
/// edge on the node labelled `G`) is dropped and every other open edge gets a
/// degree-1 input vertex, numbered in `open_order`.
pub fn to_analysis_graph(tn: &TensorNetwork) -> Result<AnalysisGraph> {
    let problems = tn.validate();
    if !problems.is_empty() {
        return Err(Error::Network(problems));
    }
    let node_index: std::collections::HashMap<usize, usize> =
        tn.nodes.iter().enumerate().map(|(k, n)| (n.id, k)).collect();
    let is_output = |node: usize| tn.nodes[node_index[&node]].label.as_deref() == Some(OUTPUT_LABEL);

    let mut class_edges = Vec::new();
    let mut input_edges = Vec::new();
    for &eid in &tn.open_order {
        let e = tn.edge(eid).expect("validated");
        let owner = e.node_ends().next().map(|(n, _)| n).expect("validated");
        if is_output(owner) {
            class_edges.push(eid);
        } else {
            input_edges.push((eid, owner));
        }
    }
    if class_edges.len() != 1 {
        return Err(Error::Graph(format!(
            "expected exactly one class edge on node {OUTPUT_LABEL:?}, found {}",
            class_edges.len()
        )));
    }

    let mut b = GraphBuilder::new();
    let mut vertex_of = std::collections::HashMap::new();
    for node in &tn.nodes {
        let label = node.label.clone().unwrap_or_else(|| format!("#{}", node.id));
        let v = match node.kind {
            NodeKind::Delta { dim, .. } => b.delta(dim, &label),
            NodeKind::Dense(_) => b.tensor(&label),
        };
        vertex_of.insert(node.id, v);
    }
    for e in &tn.edges {
        if e.is_open() {
            continue;
        }
        let ends: Vec<usize> = e.node_ends().map(|(n, _)| vertex_of[&n]).collect();
        if ends[0] == ends[1] {
            return Err(Error::Graph(format!("edge {} is a self-loop", e.id)));
        }
        b.edge_with_id(e.id, ends[0], ends[1], e.dim);
    }
    for (eid, owner) in input_edges {
        let dim = tn.edge(eid).expect("validated").dim;
        let v = b.input();
        b.edge_with_id(eid, vertex_of[&owner], v, dim);
    }
    b.build()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedFormKind {
    LeftRight,
    Interleaved,
    /// Shallow circuit; `a_size` is `|A|`.
    Shallow { a_size: usize },
}

fn pow_big(base: usize, exp: usize) -> BigUint {
    BigUint::from(base).pow(exp as u32)
}

/// Literal evaluation of the closed-form minimum cut expressions.
pub fn closed_form(spec: &ConvACSpec, kind: ClosedFormKind) -> Result<BigUint> {
    spec.validate()?;
    let n = spec.n;
    match kind {
        ClosedFormKind::LeftRight => {
            if spec.kind != DepthKind::Deep || spec.pool != 2 {
                return Err(Error::Spec("the left-right closed form needs a deep circuit with pool 2".into()));
            }
            let big_l = spec.depth();
            let mut terms = vec![pow_big(spec.m, n / 2)];
            for (l, &r) in spec.channels.iter().enumerate() {
                // r_{L-1} appears once; r_l for l <= L-2 is raised to 2^{L-2-l}
                let exp = if l + 1 == big_l { 1 } else { 1usize << (big_l - 2 - l) };
                terms.push(pow_big(r, exp));
            }
            Ok(terms.into_iter().min().expect("non-empty"))
        }
        ClosedFormKind::Interleaved => {
            if spec.kind != DepthKind::Deep {
                return Err(Error::Spec("the interleaved closed form needs a deep circuit".into()));
            }
            Ok(pow_big(spec.channels[0], n / 4).min(pow_big(spec.m, n / 2)))
        }
        ClosedFormKind::Shallow { a_size } => {
            if spec.kind != DepthKind::Shallow {
                return Err(Error::Spec("the shallow closed form needs a shallow circuit".into()));
            }
            if a_size == 0 || a_size >= n {
                return Err(Error::Partition(format!("|A| = {a_size} out of range for n = {n}")));
            }
            Ok(pow_big(spec.m, a_size.min(n - a_size)).min(BigUint::from(spec.channels[0])))
        }
    }
}

/// A channel count named by its layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum LayerSymbol {
    /// The representation width `M`.
    M,
    /// Hidden layer `l` with `r_l` channels.
    R(usize),
}

impl fmt::Display for LayerSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerSymbol::M => f.write_str("M"),
            LayerSymbol::R(l) => write!(f, "r_{l}"),
        }
    }
}

/// `ceil(log2 x)` for `x >= 1`.
pub fn ceil_log2(x: usize) -> usize {
    (usize::BITS - (x.max(1) - 1).leading_zeros()) as usize
}

/// Channel counts that can bound cuts of segment length `xi`: `M, r_0, ..., r_{ceil(log2 xi)}`.
pub fn bounding_layers(spec: &ConvACSpec, xi: usize) -> Result<Vec<LayerSymbol>> {
    spec.validate()?;
    if spec.kind != DepthKind::Deep {
        return Err(Error::Spec("bounding layers are defined for deep circuits".into()));
    }
    if xi == 0 || xi > spec.n / 2 {
        return Err(Error::Config(format!("segment length {xi} outside 1..={}", spec.n / 2)));
    }
    let top = ceil_log2(xi).min(spec.depth() - 1);
    Ok(std::iter::once(LayerSymbol::M).chain((0..=top).map(LayerSymbol::R)).collect())
}
