//! Tensor networks made of dense and δ (copy) tensors, with exact contraction.
//!
//! δ nodes are never expanded during contraction. Internally every partial
//! result is a dense core whose modes may carry several edges at once; a δ node
//! starts out as a vector of ones whose single mode carries all of its legs.
//! Contracting against such a mode extracts the diagonal of the merged indices.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{check_size, increment, row_major_strides, size_cap, DenseTensor};

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Dense(DenseTensor),
    /// Copy tensor: 1 where all indices agree, 0 elsewhere.
    Delta { order: usize, dim: usize },
}

impl NodeKind {
    pub fn order(&self) -> usize {
        match self {
            NodeKind::Dense(t) => t.order(),
            NodeKind::Delta { order, .. } => *order,
        }
    }

    pub fn leg_dim(&self, leg: usize) -> Option<usize> {
        match self {
            NodeKind::Dense(t) => t.shape().get(leg).copied(),
            NodeKind::Delta { order, dim } => (leg < *order).then_some(*dim),
        }
    }

    pub fn is_delta(&self) -> bool {
        matches!(self, NodeKind::Delta { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TNode {
    pub id: usize,
    pub kind: NodeKind,
    pub label: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeEnd {
    Node { node: usize, leg: usize },
    Open(usize),
}

impl EdgeEnd {
    pub fn node(&self) -> Option<usize> {
        match self {
            EdgeEnd::Node { node, .. } => Some(*node),
            EdgeEnd::Open(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TEdge {
    pub id: usize,
    pub ends: [EdgeEnd; 2],
    pub dim: usize,
}

impl TEdge {
    pub fn is_open(&self) -> bool {
        self.ends.iter().any(|e| matches!(e, EdgeEnd::Open(_)))
    }

    pub fn node_ends(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.ends.iter().filter_map(|e| match e {
            EdgeEnd::Node { node, leg } => Some((*node, *leg)),
            EdgeEnd::Open(_) => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorNetwork {
    pub nodes: Vec<TNode>,
    pub edges: Vec<TEdge>,
    /// Open edge ids, in the mode order of the represented tensor.
    pub open_order: Vec<usize>,
    /// Preferred contraction order (edge ids); not serialized.
    pub schedule: Option<Vec<usize>>,
}

/// Incremental construction with sequential ids.
#[derive(Debug, Default)]
pub struct NetworkBuilder {
    nodes: Vec<TNode>,
    edges: Vec<TEdge>,
    open_order: Vec<usize>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dense(&mut self, t: DenseTensor, label: impl Into<String>) -> usize {
        self.push_node(NodeKind::Dense(t), label.into())
    }

    pub fn delta(&mut self, order: usize, dim: usize, label: impl Into<String>) -> usize {
        self.push_node(NodeKind::Delta { order, dim }, label.into())
    }

    fn push_node(&mut self, kind: NodeKind, label: String) -> usize {
        let id = self.nodes.len();
        self.nodes.push(TNode {
            id,
            kind,
            label: (!label.is_empty()).then_some(label),
        });
        id
    }

    fn leg_dim(&self, node: usize, leg: usize) -> usize {
        self.nodes[node].kind.leg_dim(leg).unwrap_or(0)
    }

    /// Joins two legs; the bond dimension is taken from the first one.
    pub fn connect(&mut self, a: usize, leg_a: usize, b: usize, leg_b: usize) -> usize {
        let id = self.edges.len();
        let dim = self.leg_dim(a, leg_a);
        self.edges.push(TEdge {
            id,
            ends: [
                EdgeEnd::Node { node: a, leg: leg_a },
                EdgeEnd::Node { node: b, leg: leg_b },
            ],
            dim,
        });
        id
    }

    /// Leaves a leg dangling; it becomes the next mode of the network's tensor.
    pub fn open(&mut self, node: usize, leg: usize) -> usize {
        let id = self.edges.len();
        let dim = self.leg_dim(node, leg);
        let k = self.open_order.len();
        self.edges.push(TEdge {
            id,
            ends: [EdgeEnd::Node { node, leg }, EdgeEnd::Open(k)],
            dim,
        });
        self.open_order.push(id);
        id
    }

    pub fn build(self) -> TensorNetwork {
        TensorNetwork {
            nodes: self.nodes,
            edges: self.edges,
            open_order: self.open_order,
            schedule: None,
        }
    }
}

/// `[dim; order]` tensor with ones on the super-diagonal.
pub fn materialize_delta(order: usize, dim: usize) -> Result<DenseTensor> {
    materialize_delta_capped(order, dim, size_cap())
}

pub fn materialize_delta_capped(order: usize, dim: usize, cap: u128) -> Result<DenseTensor> {
    if order < 2 || dim == 0 {
        return Err(Error::Shape(format!(
            "δ tensor needs order >= 2 and dim >= 1, got order {order}, dim {dim}"
        )));
    }
    let shape = vec![dim; order];
    let n = check_size(format!("δ tensor of order {order}, dim {dim}"), &shape, cap)?;
    let mut data = vec![0.0; n];
    // stride of the super-diagonal: 1 + dim + dim^2 + ...
    let step: usize = (0..order).map(|k| dim.pow(k as u32)).sum();
    for i in 0..dim {
        data[i * step] = 1.0;
    }
    DenseTensor::new(shape, data)
}

impl TensorNetwork {
    pub fn node(&self, id: usize) -> Option<&TNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn edge(&self, id: usize) -> Option<&TEdge> {
        self.edges.iter().find(|e| e.id == id)
    }

    /// Checks every structural invariant; an empty list means the network is valid.
    pub fn validate(&self) -> Vec<String> {
        let mut diags = Vec::new();
        let mut node_ids = HashSet::new();
        for n in &self.nodes {
            if !node_ids.insert(n.id) {
                diags.push(format!("node {}: duplicate id", n.id));
            }
            if let NodeKind::Delta { order, dim } = n.kind {
                if order < 2 || dim == 0 {
                    diags.push(format!(
                        "node {}: δ needs order >= 2 and dim >= 1 (order {order}, dim {dim})",
                        n.id
                    ));
                }
            }
        }
        let by_id: HashMap<usize, &TNode> = self.nodes.iter().map(|n| (n.id, n)).collect();

        let mut edge_ids = HashSet::new();
        let mut legs_seen: HashMap<(usize, usize), usize> = HashMap::new();
        let mut open_seen: HashMap<usize, usize> = HashMap::new();
        let mut open_edges = Vec::new();
        for e in &self.edges {
            if !edge_ids.insert(e.id) {
                diags.push(format!("edge {}: duplicate id", e.id));
            }
            if e.dim == 0 {
                diags.push(format!("edge {}: bond dimension 0", e.id));
            }
            let mut node_end_count = 0;
            for end in &e.ends {
                match *end {
                    EdgeEnd::Node { node, leg } => {
                        node_end_count += 1;
                        let Some(n) = by_id.get(&node) else {
                            diags.push(format!("edge {}: unknown node {node}", e.id));
                            continue;
                        };
                        match n.kind.leg_dim(leg) {
                            None => diags.push(format!(
                                "edge {}: node {node} has no leg {leg}",
                                e.id
                            )),
                            Some(d) if d != e.dim => diags.push(format!(
                                "edge {}: dimension mismatch, bond {} vs node {node} leg {leg} of dimension {d}",
                                e.id, e.dim
                            )),
                            Some(_) => {}
                        }
                        if let Some(prev) = legs_seen.insert((node, leg), e.id) {
                            diags.push(format!(
                                "node {node} leg {leg}: attached to edges {prev} and {}",
                                e.id
                            ));
                        }
                    }
                    EdgeEnd::Open(k) => {
                        if let Some(prev) = open_seen.insert(k, e.id) {
                            diags.push(format!(
                                "open index {k}: used by edges {prev} and {}",
                                e.id
                            ));
                        }
                    }
                }
            }
            match node_end_count {
                0 => diags.push(format!("edge {}: not attached to any node", e.id)),
                1 => open_edges.push(e.id),
                _ => {}
            }
        }
        for n in &self.nodes {
            for leg in 0..n.kind.order() {
                if !legs_seen.contains_key(&(n.id, leg)) {
                    diags.push(format!("node {} leg {leg}: not covered by any edge", n.id));
                }
            }
        }

        let mut sorted_order = self.open_order.clone();
        sorted_order.sort_unstable();
        let before = sorted_order.len();
        sorted_order.dedup();
        if sorted_order.len() != before {
            diags.push("open_order lists an edge twice".into());
        }
        open_edges.sort_unstable();
        if sorted_order != open_edges {
            diags.push(format!(
                "open_order {:?} does not match the open edges {:?}",
                self.open_order, open_edges
            ));
        }

        if !self.nodes.is_empty() && diags.is_empty() {
            let comps = self.components();
            if comps > 1 {
                diags.push(format!("network is disconnected ({comps} components)"));
            }
        }
        if self.nodes.is_empty() {
            diags.push("network has no nodes".into());
        }
        diags
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    fn components(&self) -> usize {
        let index: HashMap<usize, usize> =
            self.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
        let mut uf = UnionFind::new(self.nodes.len());
        for e in &self.edges {
            let ends: Vec<usize> = e.node_ends().filter_map(|(n, _)| index.get(&n).copied()).collect();
            if let [a, b] = ends[..] {
                uf.union(a, b);
            }
        }
        (0..self.nodes.len()).filter(|&i| uf.find(i) == i).count()
    }

    /// Caps the open edge `edge` with the order-1 tensor `v`, removing it from the open modes.
    pub fn attach_vector(&mut self, edge: usize, v: DenseTensor, label: &str) -> Result<usize> {
        if v.order() != 1 {
            return Err(Error::Shape("attached tensor must be a vector".into()));
        }
        let id = self.nodes.iter().map(|n| n.id + 1).max().unwrap_or(0);
        let e = self
            .edges
            .iter_mut()
            .find(|e| e.id == edge)
            .ok_or_else(|| Error::Network(vec![format!("edge {edge}: not found")]))?;
        let slot = e
            .ends
            .iter()
            .position(|end| matches!(end, EdgeEnd::Open(_)))
            .ok_or_else(|| Error::Network(vec![format!("edge {edge}: not an open edge")]))?;
        if v.len() != e.dim {
            return Err(Error::Shape(format!(
                "edge {edge} has dimension {}, vector has {}",
                e.dim,
                v.len()
            )));
        }
        e.ends[slot] = EdgeEnd::Node { node: id, leg: 0 };
        self.nodes.push(TNode {
            id,
            kind: NodeKind::Dense(v),
            label: (!label.is_empty()).then(|| label.to_string()),
        });
        self.open_order.retain(|&x| x != edge);
        self.renumber_open();
        Ok(id)
    }

    /// Fixes the open edge `edge` to index `value` (a one-hot cap).
    pub fn fix_open_edge(&mut self, edge: usize, value: usize) -> Result<usize> {
        let dim = self
            .edge(edge)
            .ok_or_else(|| Error::Network(vec![format!("edge {edge}: not found")]))?
            .dim;
        if value >= dim {
            return Err(Error::Shape(format!(
                "index {value} out of range for edge {edge} of dimension {dim}"
            )));
        }
        let mut one_hot = vec![0.0; dim];
        one_hot[value] = 1.0;
        self.attach_vector(edge, DenseTensor::vector(one_hot)?, &format!("e{value}"))
    }

    fn renumber_open(&mut self) {
        let pos: HashMap<usize, usize> =
            self.open_order.iter().enumerate().map(|(k, &e)| (e, k)).collect();
        for e in &mut self.edges {
            if let Some(&k) = pos.get(&e.id) {
                for end in &mut e.ends {
                    if let EdgeEnd::Open(_) = end {
                        *end = EdgeEnd::Open(k);
                    }
                }
            }
        }
    }

    /// Contracts with the attached schedule if any, otherwise greedily.
    pub fn contract(&self) -> Result<DenseTensor> {
        self.contract_with(self.schedule.as_deref(), size_cap())
    }

    /// Contracts following `schedule` (edge ids, each merging the two partial results it
    /// joins); any edges left afterwards are contracted greedily, smallest result first.
    pub fn contract_with(&self, schedule: Option<&[usize]>, cap: u128) -> Result<DenseTensor> {
        let diags = self.validate();
        if !diags.is_empty() {
            return Err(Error::Network(diags));
        }
        Contraction::new(self, cap)?.run(schedule)
    }

    /// Edge ids internal to the network (both ends on nodes), ascending.
    pub fn internal_edges(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self
            .edges
            .iter()
            .filter(|e| !e.is_open())
            .map(|e| e.id)
            .collect();
        ids.sort_unstable();
        ids
    }
}

/// A partial contraction result: a dense core whose modes each carry one or more edges.
#[derive(Debug, Clone)]
struct Factor {
    dims: Vec<usize>,
    labels: Vec<Vec<usize>>,
    data: Vec<f64>,
    nodes: Vec<usize>,
}

struct MergePlan {
    out_dims: Vec<usize>,
    out_labels: Vec<Vec<usize>>,
    sum_dims: Vec<usize>,
    /// For each factor and each of its modes: (is_output, variable index).
    slots: Vec<Vec<(bool, usize)>>,
}

fn plan_merge(factors: &[&Factor]) -> MergePlan {
    let mut modes: Vec<(usize, usize)> = Vec::new();
    for (k, f) in factors.iter().enumerate() {
        for i in 0..f.dims.len() {
            modes.push((k, i));
        }
    }
    let mut uf = UnionFind::new(modes.len());
    let mut first_mode_of_edge: HashMap<usize, usize> = HashMap::new();
    let mut count: HashMap<usize, usize> = HashMap::new();
    for (m, &(k, i)) in modes.iter().enumerate() {
        for &e in &factors[k].labels[i] {
            *count.entry(e).or_default() += 1;
            match first_mode_of_edge.get(&e) {
                Some(&other) => uf.union(m, other),
                None => {
                    first_mode_of_edge.insert(e, m);
                }
            }
        }
    }

    // groups in first-appearance order
    let mut group_of_root: BTreeMap<usize, usize> = BTreeMap::new();
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new(); // (dim, edges)
    let mut group_of_mode = vec![0usize; modes.len()];
    for (m, &(k, i)) in modes.iter().enumerate() {
        let root = uf.find(m);
        let g = *group_of_root.entry(root).or_insert_with(|| {
            groups.push((factors[k].dims[i], Vec::new()));
            groups.len() - 1
        });
        group_of_mode[m] = g;
        for &e in &factors[k].labels[i] {
            if count[&e] < 2 && !groups[g].1.contains(&e) {
                groups[g].1.push(e);
            }
        }
    }

    let mut var_of_group = Vec::with_capacity(groups.len());
    let mut out_dims = Vec::new();
    let mut out_labels = Vec::new();
    let mut sum_dims = Vec::new();
    for (dim, edges) in &groups {
        if edges.is_empty() {
            var_of_group.push((false, sum_dims.len()));
            sum_dims.push(*dim);
        } else {
            var_of_group.push((true, out_dims.len()));
            out_dims.push(*dim);
            out_labels.push(edges.clone());
        }
    }
    let mut slots: Vec<Vec<(bool, usize)>> = factors.iter().map(|f| Vec::with_capacity(f.dims.len())).collect();
    for (m, &(k, _)) in modes.iter().enumerate() {
        slots[k].push(var_of_group[group_of_mode[m]]);
    }
    MergePlan {
        out_dims,
        out_labels,
        sum_dims,
        slots,
    }
}

/// Offsets into a factor for every assignment of a variable set (row-major).
fn offset_table(f: &Factor, slots: &[(bool, usize)], output: bool, dims: &[usize]) -> Vec<usize> {
    let strides = row_major_strides(&f.dims);
    let mut per_var = vec![0usize; dims.len()];
    for (i, &(is_out, v)) in slots.iter().enumerate() {
        if is_out == output {
            per_var[v] += strides[i];
        }
    }
    let n: usize = dims.iter().product();
    let mut table = Vec::with_capacity(n);
    let mut idx = vec![0usize; dims.len()];
    for _ in 0..n {
        table.push(idx.iter().zip(&per_var).map(|(a, b)| a * b).sum());
        increment(&mut idx, dims);
    }
    table
}

fn merge(factors: &[&Factor], cap: u128, what: &str) -> Result<Factor> {
    let plan = plan_merge(factors);
    let out_len = check_size(what.to_string(), &plan.out_dims, cap)?;
    let sum_len = check_size(format!("{what} (summed indices)"), &plan.sum_dims, u128::MAX)?;
    let out_tables: Vec<Vec<usize>> = factors
        .iter()
        .zip(&plan.slots)
        .map(|(f, s)| offset_table(f, s, true, &plan.out_dims))
        .collect();
    let sum_tables: Vec<Vec<usize>> = factors
        .iter()
        .zip(&plan.slots)
        .map(|(f, s)| offset_table(f, s, false, &plan.sum_dims))
        .collect();
    let mut data = vec![0.0; out_len];
    match factors {
        [x, y] => {
            for (r, slot) in data.iter_mut().enumerate() {
                let (bx, by) = (out_tables[0][r], out_tables[1][r]);
                let mut acc = 0.0;
                for s in 0..sum_len {
                    acc += x.data[bx + sum_tables[0][s]] * y.data[by + sum_tables[1][s]];
                }
                *slot = acc;
            }
        }
        _ => {
            for (r, slot) in data.iter_mut().enumerate() {
                let mut acc = 0.0;
                for s in 0..sum_len {
                    acc += factors
                        .iter()
                        .enumerate()
                        .map(|(k, f)| f.data[out_tables[k][r] + sum_tables[k][s]])
                        .product::<f64>();
                }
                *slot = acc;
            }
        }
    }
    let nodes = factors.iter().flat_map(|f| f.nodes.iter().copied()).collect();
    Ok(Factor {
        dims: plan.out_dims,
        labels: plan.out_labels,
        data,
        nodes,
    })
}

struct Contraction<'a> {
    tn: &'a TensorNetwork,
    cap: u128,
    factors: Vec<Option<Factor>>,
    owner: HashMap<usize, usize>,
}

impl<'a> Contraction<'a> {
    fn new(tn: &'a TensorNetwork, cap: u128) -> Result<Self> {
        let mut leg_edge: HashMap<(usize, usize), usize> = HashMap::new();
        for e in &tn.edges {
            for (n, leg) in e.node_ends() {
                leg_edge.insert((n, leg), e.id);
            }
        }
        let mut factors = Vec::with_capacity(tn.nodes.len());
        let mut owner = HashMap::new();
        for (slot, n) in tn.nodes.iter().enumerate() {
            let f = match &n.kind {
                NodeKind::Dense(t) => Factor {
                    dims: t.shape().to_vec(),
                    labels: (0..t.order()).map(|leg| vec![leg_edge[&(n.id, leg)]]).collect(),
                    data: t.data().to_vec(),
                    nodes: vec![n.id],
                },
                NodeKind::Delta { order, dim } => Factor {
                    dims: vec![*dim],
                    labels: vec![(0..*order).map(|leg| leg_edge[&(n.id, leg)]).collect()],
                    data: vec![1.0; *dim],
                    nodes: vec![n.id],
                },
            };
            // self-loops on a single node are traced out up front
            let f = if has_repeated_edge(&f) {
                merge(&[&f], cap, &format!("trace of node {}", n.id))?
            } else {
                f
            };
            factors.push(Some(f));
            owner.insert(n.id, slot);
        }
        Ok(Self {
            tn,
            cap,
            factors,
            owner,
        })
    }

    fn slots_of_edge(&self, e: &TEdge) -> Option<(usize, usize)> {
        let ends: Vec<usize> = e.node_ends().map(|(n, _)| self.owner[&n]).collect();
        match ends[..] {
            [a, b] if a != b => Some((a.min(b), a.max(b))),
            _ => None,
        }
    }

    fn merge_slots(&mut self, a: usize, b: usize, what: String) -> Result<()> {
        let fa = self.factors[a].take().expect("live factor");
        let fb = self.factors[b].take().expect("live factor");
        let merged = merge(&[&fa, &fb], self.cap, &what)?;
        for n in &merged.nodes {
            self.owner.insert(*n, a);
        }
        self.factors[a] = Some(merged);
        Ok(())
    }

    fn describe(&self, e: &TEdge) -> String {
        let names: Vec<String> = e
            .node_ends()
            .map(|(n, _)| {
                let node = self.tn.node(n).expect("validated");
                match &node.label {
                    Some(l) => format!("{n} ({l})"),
                    None => n.to_string(),
                }
            })
            .collect();
        format!("intermediate from contracting edge {} between nodes {}", e.id, names.join(" and "))
    }

    fn run(mut self, schedule: Option<&[usize]>) -> Result<DenseTensor> {
        let edges: HashMap<usize, &TEdge> = self.tn.edges.iter().map(|e| (e.id, e)).collect();
        if let Some(schedule) = schedule {
            for &id in schedule {
                let e = edges
                    .get(&id)
                    .ok_or_else(|| Error::Schedule(format!("edge {id} does not exist")))?;
                if e.is_open() {
                    return Err(Error::Schedule(format!("edge {id} is open and cannot be contracted")));
                }
                if let Some((a, b)) = self.slots_of_edge(e) {
                    let what = self.describe(e);
                    self.merge_slots(a, b, what)?;
                }
            }
        }

        // greedy: smallest resulting factor first, ties by edge id
        loop {
            let mut best: Option<(u128, usize, usize, usize)> = None;
            for id in self.tn.internal_edges() {
                let e = edges[&id];
                let Some((a, b)) = self.slots_of_edge(e) else { continue };
                let fa = self.factors[a].as_ref().expect("live");
                let fb = self.factors[b].as_ref().expect("live");
                let plan = plan_merge(&[fa, fb]);
                let size = plan
                    .out_dims
                    .iter()
                    .try_fold(1u128, |acc, &d| acc.checked_mul(d as u128))
                    .unwrap_or(u128::MAX);
                if best.map_or(true, |(s, ..)| size < s) {
                    best = Some((size, id, a, b));
                }
            }
            match best {
                Some((_, id, a, b)) => {
                    let what = self.describe(edges[&id]);
                    self.merge_slots(a, b, what)?;
                }
                None => break,
            }
        }

        // disconnected leftovers combine by outer product
        let live: Vec<usize> = (0..self.factors.len()).filter(|&i| self.factors[i].is_some()).collect();
        for &other in live.iter().skip(1) {
            self.merge_slots(live[0], other, "outer product of components".into())?;
        }
        let last = self.factors[live[0]].take().expect("live");
        self.finish(last)
    }

    fn finish(&self, f: Factor) -> Result<DenseTensor> {
        if self.tn.open_order.is_empty() {
            // fully contracted: a single scalar, reported as a length-1 vector
            return DenseTensor::vector(vec![f.data.iter().sum()]);
        }
        let mode_of: HashMap<usize, usize> = f
            .labels
            .iter()
            .enumerate()
            .flat_map(|(m, es)| es.iter().map(move |&e| (e, m)))
            .collect();
        let out_modes: Vec<usize> = self.tn.open_order.iter().map(|e| mode_of[e]).collect();
        let shape: Vec<usize> = out_modes.iter().map(|&m| f.dims[m]).collect();
        check_size("contraction result", &shape, self.cap)?;
        let strides = row_major_strides(&f.dims);
        let mut assigned = vec![usize::MAX; f.dims.len()];
        DenseTensor::from_fn(shape, |idx| {
            assigned.iter_mut().for_each(|a| *a = usize::MAX);
            for (&m, &i) in out_modes.iter().zip(idx) {
                if assigned[m] == usize::MAX {
                    assigned[m] = i;
                } else if assigned[m] != i {
                    return 0.0;
                }
            }
            let off: usize = assigned.iter().zip(&strides).map(|(a, s)| a * s).sum();
            f.data[off]
        })
    }
}

fn has_repeated_edge(f: &Factor) -> bool {
    let mut seen = HashSet::new();
    f.labels.iter().flatten().any(|e| !seen.insert(*e))
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut c = x;
        while self.parent[c] != r {
            let next = self.parent[c];
            self.parent[c] = r;
            c = next;
        }
        r
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

// JSON form: {"nodes":[...], "edges":[...], "open_order":[...]}.

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum NodeRepr {
    Dense {
        id: usize,
        shape: Vec<usize>,
        data: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    Delta {
        id: usize,
        order: usize,
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EndRepr {
    Node(usize, usize),
    Open(String, usize),
}

#[derive(Serialize, Deserialize)]
struct EdgeRepr {
    id: usize,
    ends: Vec<EndRepr>,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct NetworkRepr {
    nodes: Vec<NodeRepr>,
    edges: Vec<EdgeRepr>,
    open_order: Vec<usize>,
}

impl Serialize for TensorNetwork {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let nodes = self
            .nodes
            .iter()
            .map(|n| match &n.kind {
                NodeKind::Dense(t) => NodeRepr::Dense {
                    id: n.id,
                    shape: t.shape().to_vec(),
                    data: t.data().to_vec(),
                    label: n.label.clone(),
                },
                NodeKind::Delta { order, dim } => NodeRepr::Delta {
                    id: n.id,
                    order: *order,
                    dim: *dim,
                    label: n.label.clone(),
                },
            })
            .collect();
        let edges = self
            .edges
            .iter()
            .map(|e| EdgeRepr {
                id: e.id,
                ends: e
                    .ends
                    .iter()
                    .map(|end| match *end {
                        EdgeEnd::Node { node, leg } => EndRepr::Node(node, leg),
                        EdgeEnd::Open(k) => EndRepr::Open("open".into(), k),
                    })
                    .collect(),
                dim: e.dim,
            })
            .collect();
        NetworkRepr {
            nodes,
            edges,
            open_order: self.open_order.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TensorNetwork {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = NetworkRepr::deserialize(d)?;
        let mut nodes = Vec::with_capacity(repr.nodes.len());
        for n in repr.nodes {
            nodes.push(match n {
                NodeRepr::Dense { id, shape, data, label } => TNode {
                    id,
                    kind: NodeKind::Dense(DenseTensor::new(shape, data).map_err(D::Error::custom)?),
                    label,
                },
                NodeRepr::Delta { id, order, dim, label } => TNode {
                    id,
                    kind: NodeKind::Delta { order, dim },
                    label,
                },
            });
        }
        let mut edges = Vec::with_capacity(repr.edges.len());
        for e in repr.edges {
            if e.ends.len() != 2 {
                return Err(D::Error::custom(format!("edge {} must have two ends", e.id)));
            }
            let mut ends = [EdgeEnd::Open(0); 2];
            for (slot, end) in ends.iter_mut().zip(e.ends) {
                *slot = match end {
                    EndRepr::Node(node, leg) => EdgeEnd::Node { node, leg },
                    EndRepr::Open(tag, k) if tag == "open" => EdgeEnd::Open(k),
                    EndRepr::Open(tag, _) => {
                        return Err(D::Error::custom(format!("unknown edge end tag {tag:?}")))
                    }
                };
            }
            edges.push(TEdge { id: e.id, ends, dim: e.dim });
        }
        Ok(TensorNetwork {
            nodes,
            edges,
            open_order: repr.open_order,
            schedule: None,
        })
    }
}
