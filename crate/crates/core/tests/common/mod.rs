//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tnarch::graph::{AnalysisGraph, GraphBuilder};
use tnarch::partition::InputPartition;
use tnarch::tensor::DenseTensor;

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Minimum over every subset of edges that separates `A` from `B`.
/// Returns `(plain, modified)` minima.
pub fn brute_force_min_cuts(g: &AnalysisGraph, p: &InputPartition) -> (BigUint, BigUint) {
    let edges = g.edges();
    assert!(edges.len() <= 20, "oracle limited to 20 edges");
    let nv = g.vertices().len();
    let a: Vec<usize> = p.a().iter().map(|&i| g.inputs()[i]).collect();
    let b: Vec<usize> = p.b().iter().map(|&i| g.inputs()[i]).collect();
    let mut best_plain = u128::MAX;
    let mut best_mod = u128::MAX;
    let mut parent = vec![0usize; nv];
    for mask in 0u32..(1u32 << edges.len()) {
        for (v, slot) in parent.iter_mut().enumerate() {
            *slot = v;
        }
        for (k, e) in edges.iter().enumerate() {
            if mask >> k & 1 == 0 {
                let (ru, rv) = (find(&mut parent, e.u), find(&mut parent, e.v));
                parent[ru] = rv;
            }
        }
        let roots_a: Vec<usize> = a.iter().map(|&v| find(&mut parent, v)).collect();
        if b.iter().any(|&v| roots_a.contains(&find(&mut parent, v))) {
            continue;
        }
        let mut plain = 1u128;
        let mut groups = Vec::new();
        for (k, e) in edges.iter().enumerate() {
            if mask >> k & 1 == 1 {
                plain *= e.dim as u128;
                if !groups.contains(&e.group) {
                    groups.push(e.group);
                }
            }
        }
        let modified: u128 = groups.iter().map(|&gr| g.groups()[gr].dim as u128).product();
        best_plain = best_plain.min(plain);
        best_mod = best_mod.min(modified);
    }
    (BigUint::from(best_plain), BigUint::from(best_mod))
}

/// Random connected analysis graph with at most `max_edges` edges.
pub fn random_graph(rng: &mut ChaCha8Rng, max_edges: usize) -> AnalysisGraph {
    loop {
        if let Some(g) = try_random_graph(rng, max_edges) {
            return g;
        }
    }
}

fn try_random_graph(rng: &mut ChaCha8Rng, max_edges: usize) -> Option<AnalysisGraph> {
    let n_inputs = rng.random_range(2..=4);
    let n_inner = rng.random_range(1..=5);
    let mut b = GraphBuilder::new();
    let mut inner = Vec::new();
    let mut delta_dim = Vec::new();
    for k in 0..n_inner {
        if rng.random_bool(0.4) {
            let d = rng.random_range(1..=5);
            inner.push(b.delta(d, &format!("d{k}")));
            delta_dim.push(Some(d));
        } else {
            inner.push(b.tensor(&format!("t{k}")));
            delta_dim.push(None);
        }
    }
    let mut count = 0;
    let dim_for = |rng: &mut ChaCha8Rng, x: usize, y: Option<usize>| -> Option<usize> {
        match (delta_dim[x], y.and_then(|y| delta_dim[y])) {
            (Some(_), Some(_)) => None,
            (Some(d), None) | (None, Some(d)) => Some(d),
            (None, None) => Some(rng.random_range(1..=6)),
        }
    };
    // spanning tree over inner vertices, avoiding δ-δ adjacencies
    for k in 1..n_inner {
        let j = rng.random_range(0..k);
        let d = dim_for(rng, k, Some(j))?;
        b.edge(inner[k], inner[j], d);
        count += 1;
    }
    for _ in 0..n_inputs {
        let v = b.input();
        let k = rng.random_range(0..n_inner);
        let d = dim_for(rng, k, None)?;
        b.edge(inner[k], v, d);
        count += 1;
    }
    let extra = rng.random_range(0..=4);
    for _ in 0..extra {
        if count >= max_edges || n_inner < 2 {
            break;
        }
        let x = rng.random_range(0..n_inner);
        let y = rng.random_range(0..n_inner);
        if x == y {
            continue;
        }
        if let Some(d) = dim_for(rng, x, Some(y)) {
            b.edge(inner[x], inner[y], d);
            count += 1;
        }
    }
    if count > max_edges {
        return None;
    }
    b.build().ok()
}

/// A uniformly random non-trivial partition of `n` inputs.
pub fn random_partition(rng: &mut ChaCha8Rng, n: usize) -> InputPartition {
    loop {
        let a: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
        if let Ok(p) = InputPartition::new(a, n) {
            return p;
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// Singular values via the eigenvalues of the smaller Gram matrix.
pub fn gram_singular_values(m: &DenseTensor) -> Vec<f64> {
    let (r, c) = (m.shape()[0], m.shape()[1]);
    let at = |i: usize, j: usize| m.data()[i * c + j];
    let gram: Vec<Vec<f64>> = if r <= c {
        (0..r)
            .map(|i| (0..r).map(|j| (0..c).map(|k| at(i, k) * at(j, k)).sum()).collect())
            .collect()
    } else {
        (0..c)
            .map(|i| (0..c).map(|j| (0..r).map(|k| at(k, i) * at(k, j)).sum()).collect())
            .collect()
    };
    jacobi_eigenvalues(gram).into_iter().map(|e| e.max(0.0).sqrt()).collect()
}

use tnarch::network::{EdgeEnd, NetworkBuilder, NodeKind, TensorNetwork};

/// Value of the network's tensor by direct summation over every index assignment.
pub fn brute_force_contract(tn: &TensorNetwork) -> Vec<f64> {
    let dims: Vec<usize> = tn.edges.iter().map(|e| e.dim).collect();
    // legs of each node, as positions into `tn.edges`
    let mut legs: Vec<Vec<usize>> = tn.nodes.iter().map(|n| vec![usize::MAX; n.kind.order()]).collect();
    for (k, e) in tn.edges.iter().enumerate() {
        for end in &e.ends {
            if let EdgeEnd::Node { node, leg } = end {
                let slot = tn.nodes.iter().position(|n| n.id == *node).unwrap();
                legs[slot][*leg] = k;
            }
        }
    }
    let open: Vec<usize> = tn
        .open_order
        .iter()
        .map(|id| tn.edges.iter().position(|e| e.id == *id).unwrap())
        .collect();
    let out_len: usize = open.iter().map(|&k| dims[k]).product();
    let mut out = vec![0.0; out_len];
    let total: usize = dims.iter().product();
    let mut idx = vec![0usize; dims.len()];
    for _ in 0..total {
        let mut term = 1.0;
        for (n, node) in tn.nodes.iter().enumerate() {
            let at: Vec<usize> = legs[n].iter().map(|&k| idx[k]).collect();
            term *= match &node.kind {
                NodeKind::Dense(t) => t.get(&at).unwrap(),
                NodeKind::Delta { .. } => {
                    if at.iter().all(|&i| i == at[0]) {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
            if term == 0.0 {
                break;
            }
        }
        let mut pos = 0;
        for &k in &open {
            pos = pos * dims[k] + idx[k];
        }
        out[pos] += term;
        for k in (0..dims.len()).rev() {
            idx[k] += 1;
            if idx[k] < dims[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    out
}

/// Random connected network of dense and δ nodes with small bond dimensions.
pub fn random_network(rng: &mut ChaCha8Rng) -> TensorNetwork {
    let n_dense = rng.random_range(1..=4);
    let n_delta = rng.random_range(0..=2);
    let n = n_dense + n_delta;
    let delta_dim: Vec<Option<usize>> = (0..n)
        .map(|k| (k >= n_dense).then(|| rng.random_range(1..=3)))
        .collect();
    // edge plan: (a, b or None for open, dim)
    let mut plan: Vec<(usize, Option<usize>, usize)> = Vec::new();
    let pick_dim = |rng: &mut ChaCha8Rng, a: usize, b: Option<usize>| match (delta_dim[a], b.and_then(|b| delta_dim[b])) {
        (Some(d), _) | (None, Some(d)) => d,
        _ => rng.random_range(1..=3),
    };
    for k in 1..n {
        let mut j = rng.random_range(0..k);
        if let (Some(x), Some(y)) = (delta_dim[k], delta_dim[j]) {
            if x != y {
                // copy tensors of different size cannot share an edge; node 0 is dense
                j = 0;
            }
        }
        let d = pick_dim(rng, k, Some(j));
        plan.push((k, Some(j), d));
    }
    for _ in 0..rng.random_range(0..=2) {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b && (delta_dim[a].is_none() || delta_dim[b].is_none() || delta_dim[a] == delta_dim[b]) {
            let d = pick_dim(rng, a, Some(b));
            plan.push((a, Some(b), d));
        }
    }
    for _ in 0..rng.random_range(1..=3) {
        let a = rng.random_range(0..n);
        let d = pick_dim(rng, a, None);
        plan.push((a, None, d));
    }
    // δ nodes need order >= 2
    for k in n_dense..n {
        let deg = plan.iter().filter(|(a, b, _)| *a == k || *b == Some(k)).count();
        for _ in deg..2 {
            plan.push((k, None, delta_dim[k].unwrap()));
        }
    }
    let mut shapes: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut slots = Vec::new();
    for &(a, b, d) in &plan {
        let la = shapes[a].len();
        shapes[a].push(d);
        let lb = b.map(|b| {
            shapes[b].push(d);
            shapes[b].len() - 1
        });
        slots.push((la, lb));
    }
    let mut bld = NetworkBuilder::new();
    for k in 0..n {
        match delta_dim[k] {
            Some(d) => {
                bld.delta(shapes[k].len(), d, format!("d{k}"));
            }
            None => {
                let shape = shapes[k].clone();
                let t = DenseTensor::from_fn(shape, |_| rng.random_range(-1.0..1.0)).unwrap();
                bld.dense(t, format!("t{k}"));
            }
        }
    }
    for (&(a, b, _), &(la, lb)) in plan.iter().zip(&slots) {
        match (b, lb) {
            (Some(b), Some(lb)) => {
                bld.connect(a, la, b, lb);
            }
            _ => {
                bld.open(a, la);
            }
        }
    }
    bld.build()
}

/// Replaces every δ node by its dense materialization.
pub fn materialized(tn: &TensorNetwork) -> TensorNetwork {
    let mut out = tn.clone();
    for node in &mut out.nodes {
        if let NodeKind::Delta { order, dim } = node.kind {
            node.kind = NodeKind::Dense(tnarch::network::materialize_delta(order, dim).unwrap());
        }
    }
    out
}

pub fn rel_close(a: &[f64], b: &[f64], tol: f64) -> bool {
    let scale = a.iter().chain(b).fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * scale)
}

use tnarch::convac::{ConvACSpec, DepthKind, WeightSet};

fn kron(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

fn entry(m: &DenseTensor, r: usize, c: usize) -> f64 {
    m.data()[r * m.shape()[1] + c]
}

/// Weights tensor of class `y` by the hierarchical decomposition, as a flat row-major vector.
pub fn ht_weights_tensor(spec: &ConvACSpec, w: &WeightSet, y: usize) -> Vec<f64> {
    let m = spec.m;
    // phi[j][alpha]: tensor of position j, channel alpha, at the current level
    let mut phi: Vec<Vec<Vec<f64>>> = (0..spec.n)
        .map(|_| (0..m).map(|a| (0..m).map(|d| if d == a { 1.0 } else { 0.0 }).collect()).collect())
        .collect();
    let window = match spec.kind {
        DepthKind::Deep => spec.pool,
        DepthKind::Shallow => spec.n,
    };
    for (l, layer) in w.layers.iter().enumerate() {
        let r = spec.channels[l];
        let width = if l == 0 { m } else { spec.channels[l - 1] };
        // conv: mix channels of each position
        let mixed: Vec<Vec<Vec<f64>>> = layer
            .iter()
            .zip(&phi)
            .map(|(a, ph)| {
                (0..r)
                    .map(|g| {
                        let len = ph[0].len();
                        (0..len)
                            .map(|k| (0..width).map(|al| entry(a, g, al) * ph[al][k]).sum())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        // pool: same-channel tensor product over each window
        phi = mixed
            .chunks(window)
            .map(|win| {
                (0..r)
                    .map(|g| win.iter().skip(1).fold(win[0][g].clone(), |acc, t| kron(&acc, &t[g])))
                    .collect()
            })
            .collect();
    }
    assert_eq!(phi.len(), 1);
    let top = &phi[0];
    let len = top[0].len();
    (0..len)
        .map(|k| (0..top.len()).map(|g| entry(&w.g, y, g) * top[g][k]).sum())
        .collect()
}

/// Score of class `y` by summing over every index assignment of the weights tensor.
pub fn brute_force_score(a_y: &[f64], x: &[Vec<f64>]) -> f64 {
    let m = x[0].len();
    a_y.iter()
        .enumerate()
        .map(|(flat, &a)| {
            let mut rest = flat;
            let mut prod = a;
            for v in x.iter().rev() {
                prod *= v[rest % m];
                rest /= m;
            }
            prod
        })
        .sum()
}
