//! Convolutional arithmetic circuits (ConvACs): architecture, weights, forward
//! evaluation and their tensor-network form.
//!
//! Layer `l` holds matrices `A(l,j)` of shape `r_l x r_{l-1}` (with `r_{-1} = M`),
//! one per spatial position `j`. A deep circuit has `N / pool^l` positions at layer
//! `l`; each conv step is followed by a same-channel product over windows of
//! `pool` consecutive positions. The output matrix `G` (`Y x r_{L-1}`) maps the last
//! pooled vector to class scores. A shallow circuit has one layer with `N`
//! matrices of shape `K x M` and a single global product pool.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{NetworkBuilder, TensorNetwork};
use crate::tensor::{check_size, size_cap, DenseTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthKind {
    Shallow,
    Deep,
}

/// Architecture of a ConvAC. Serialized as
/// `{"n":16,"m":2,"channels":[2,3,5,7],"classes":1,"pool":2,"kind":"deep"}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConvACSpec {
    pub n: usize,
    pub m: usize,
    pub channels: Vec<usize>,
    #[serde(default = "one")]
    pub classes: usize,
    #[serde(default = "two")]
    pub pool: usize,
    pub kind: DepthKind,
}

fn one() -> usize {
    1
}

fn two() -> usize {
    2
}

impl ConvACSpec {
    pub fn deep(n: usize, m: usize, channels: Vec<usize>, classes: usize, pool: usize) -> Result<Self> {
        let s = Self {
            n,
            m,
            channels,
            classes,
            pool,
            kind: DepthKind::Deep,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn shallow(n: usize, m: usize, width: usize, classes: usize) -> Result<Self> {
        let s = Self {
            n,
            m,
            channels: vec![width],
            classes,
            pool: n.max(2),
            kind: DepthKind::Shallow,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.classes == 0 {
            return Err(Error::Spec("n, m and classes must be positive".into()));
        }
        if self.channels.is_empty() || self.channels.contains(&0) {
            return Err(Error::Spec("channel counts must be a non-empty list of positive integers".into()));
        }
        match self.kind {
            DepthKind::Shallow => {
                if self.channels.len() != 1 {
                    return Err(Error::Spec(format!(
                        "a shallow circuit has one hidden width, got {} channel counts",
                        self.channels.len()
                    )));
                }
            }
            DepthKind::Deep => {
                if self.pool < 2 {
                    return Err(Error::Spec("pool arity must be at least 2".into()));
                }
                let expected = (self.pool as u128).checked_pow(self.channels.len() as u32);
                if expected != Some(self.n as u128) {
                    return Err(Error::Spec(format!(
                        "n = {} is not pool^L = {}^{}",
                        self.n,
                        self.pool,
                        self.channels.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of hidden layers `L`.
    pub fn depth(&self) -> usize {
        self.channels.len()
    }

    /// Input width of layer `l`: `M` for `l = 0`, else `r_{l-1}`.
    pub fn input_width(&self, l: usize) -> usize {
        if l == 0 {
            self.m
        } else {
            self.channels[l - 1]
        }
    }

    /// Number of conv matrices at layer `l`.
    pub fn positions(&self, l: usize) -> usize {
        match self.kind {
            DepthKind::Shallow => self.n,
            DepthKind::Deep => self.n / self.pool.pow(l as u32),
        }
    }

    /// Children per pooling window at layer `l`.
    fn window(&self) -> usize {
        match self.kind {
            DepthKind::Shallow => self.n,
            DepthKind::Deep => self.pool,
        }
    }
}

impl fmt::Display for ConvACSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            DepthKind::Shallow => "shallow",
            DepthKind::Deep => "deep",
        };
        write!(
            f,
            "{kind} N={} M={} r={:?} Y={} pool={}",
            self.n, self.m, self.channels, self.classes, self.pool
        )
    }
}

/// All weights of a circuit: `layers[l][j] = A(l,j)` and the output matrix `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub layers: Vec<Vec<DenseTensor>>,
    pub g: DenseTensor,
}

impl WeightSet {
    /// Checks every matrix shape against `spec`.
    pub fn check(&self, spec: &ConvACSpec) -> Result<()> {
        spec.validate()?;
        if self.layers.len() != spec.depth() {
            return Err(Error::Shape(format!(
                "expected {} layers of weights, got {}",
                spec.depth(),
                self.layers.len()
            )));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.len() != spec.positions(l) {
                return Err(Error::Shape(format!(
                    "layer {l}: expected {} matrices, got {}",
                    spec.positions(l),
                    layer.len()
                )));
            }
            let want = [spec.channels[l], spec.input_width(l)];
            for (j, a) in layer.iter().enumerate() {
                if a.shape() != want {
                    return Err(Error::Shape(format!(
                        "A_{l}_{}: expected shape {want:?}, got {:?}",
                        j + 1,
                        a.shape()
                    )));
                }
                if !a.is_finite() {
                    return Err(Error::NonFinite(format!("A_{l}_{}", j + 1)));
                }
            }
        }
        let want = [spec.classes, spec.channels[spec.depth() - 1]];
        if self.g.shape() != want {
            return Err(Error::Shape(format!(
                "G: expected shape {want:?}, got {:?}",
                self.g.shape()
            )));
        }
        if !self.g.is_finite() {
            return Err(Error::NonFinite("G".into()));
        }
        Ok(())
    }
}

fn rows_of(t: &DenseTensor) -> Vec<Vec<f64>> {
    (0..t.shape()[0]).map(|r| t.row(r).to_vec()).collect()
}

impl Serialize for WeightSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let count = self.layers.iter().map(Vec::len).sum::<usize>() + 1;
        let mut map = s.serialize_map(Some(count))?;
        for (l, layer) in self.layers.iter().enumerate() {
            for (j, a) in layer.iter().enumerate() {
                map.serialize_entry(&format!("A_{l}_{}", j + 1), &rows_of(a))?;
            }
        }
        map.serialize_entry("G", &rows_of(&self.g))?;
        map.end()
    }
}

impl<'de> Deserialize<'de> for WeightSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::deserialize(d)?;
        let mut layers: BTreeMap<usize, BTreeMap<usize, DenseTensor>> = BTreeMap::new();
        let mut g = None;
        for (key, rows) in raw {
            let t = DenseTensor::matrix(&rows).map_err(D::Error::custom)?;
            if key == "G" {
                g = Some(t);
                continue;
            }
            let parts: Vec<&str> = key.split('_').collect();
            let parsed = match parts[..] {
                ["A", l, j] => l.parse::<usize>().ok().zip(j.parse::<usize>().ok()),
                _ => None,
            };
            match parsed {
                Some((l, j)) if j >= 1 => {
                    layers.entry(l).or_default().insert(j, t);
                }
                _ => return Err(D::Error::custom(format!("unexpected weight key {key:?}"))),
            }
        }
        let g = g.ok_or_else(|| D::Error::custom("missing weight matrix G"))?;
        let mut out = Vec::new();
        for (expect_l, (l, layer)) in layers.into_iter().enumerate() {
            if l != expect_l {
                return Err(D::Error::custom(format!("missing weights for layer {expect_l}")));
            }
            let mut mats = Vec::new();
            for (expect_j, (j, a)) in layer.into_iter().enumerate() {
                if j != expect_j + 1 {
                    return Err(D::Error::custom(format!("missing A_{l}_{}", expect_j + 1)));
                }
                mats.push(a);
            }
            out.push(mats);
        }
        Ok(WeightSet { layers: out, g })
    }
}

/// Values of the representation functions: `x[j][d] = f_d(x_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationInput {
    pub x: Vec<Vec<f64>>,
}

impl RepresentationInput {
    pub fn check(&self, spec: &ConvACSpec) -> Result<()> {
        if self.x.len() != spec.n {
            return Err(Error::Shape(format!(
                "expected {} input vectors, got {}",
                spec.n,
                self.x.len()
            )));
        }
        if let Some(j) = self.x.iter().position(|v| v.len() != spec.m) {
            return Err(Error::Shape(format!(
                "input {j} has length {}, expected {}",
                self.x[j].len(),
                spec.m
            )));
        }
        Ok(())
    }

    pub fn vectors(&self) -> Result<Vec<DenseTensor>> {
        self.x.iter().map(|v| DenseTensor::vector(v.clone())).collect()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a sequence of words into one well-distributed 64-bit key.
pub fn derive_seed(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x6A09_E667_F3BC_C909, |h, &w| splitmix64(h ^ splitmix64(w)))
}

/// Standard normal draw addressed by `(seed, l, j, row, col)`.
fn normal_at(seed: u64, l: usize, j: usize, row: usize, col: usize) -> f64 {
    let key = derive_seed(&[seed, l as u64, j as u64, row as u64, col as u64]);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    StandardNormal.sample(&mut rng)
}

/// I.i.d. standard normal weights; each entry depends only on `(seed, l, j, row, col)`.
/// `G` is addressed as layer `L`, position 1.
pub fn random_weights(spec: &ConvACSpec, seed: u64) -> Result<WeightSet> {
    spec.validate()?;
    let matrix = |l: usize, j: usize, rows: usize, cols: usize| {
        let data = (0..rows * cols)
            .map(|k| normal_at(seed, l, j, k / cols, k % cols))
            .collect();
        DenseTensor::new(vec![rows, cols], data)
    };
    let mut layers = Vec::with_capacity(spec.depth());
    for l in 0..spec.depth() {
        let (rows, cols) = (spec.channels[l], spec.input_width(l));
        let mats = (1..=spec.positions(l))
            .map(|j| matrix(l, j, rows, cols))
            .collect::<Result<Vec<_>>>()?;
        layers.push(mats);
    }
    let g = matrix(spec.depth(), 1, spec.classes, spec.channels[spec.depth() - 1])?;
    Ok(WeightSet { layers, g })
}

/// Label given to the output node; graph analysis uses it to find the class edge.
pub const OUTPUT_LABEL: &str = "G";

/// Tensor network of a shallow circuit: one δ of order `N+1` joining the `N`
/// conv matrices and `G`. Open modes: the `N` inputs in order, then the class.
pub fn build_shallow_tn(spec: &ConvACSpec, w: &WeightSet) -> Result<TensorNetwork> {
    if spec.kind != DepthKind::Shallow {
        return Err(Error::Spec("build_shallow_tn needs a shallow spec".into()));
    }
    w.check(spec)?;
    let k = spec.channels[0];
    let mut b = NetworkBuilder::new();
    let mats: Vec<usize> = w.layers[0]
        .iter()
        .enumerate()
        .map(|(j, a)| b.dense(a.clone(), format!("A(0,{})", j + 1)))
        .collect();
    for &a in &mats {
        b.open(a, 1);
    }
    let delta = b.delta(spec.n + 1, k, "δ(0,1)");
    let g = b.dense(w.g.clone(), OUTPUT_LABEL);
    for (j, &a) in mats.iter().enumerate() {
        b.connect(a, 0, delta, j);
    }
    b.connect(delta, spec.n, g, 1);
    b.open(g, 0);
    let mut tn = b.build();
    tn.schedule = Some(tn.internal_edges());
    Ok(tn)
}

/// Tensor network of a deep circuit: a tree of conv matrices and δ nodes of order
/// `pool + 1`, with `G` at the root. Open modes: the `N` inputs in depth-first leaf
/// order, then the class. The attached schedule contracts bottom-up, layer by layer.
pub fn build_deep_tn(spec: &ConvACSpec, w: &WeightSet) -> Result<TensorNetwork> {
    if spec.kind != DepthKind::Deep {
        return Err(Error::Spec("build_deep_tn needs a deep spec".into()));
    }
    w.check(spec)?;
    let p = spec.pool;
    let mut b = NetworkBuilder::new();
    let mut below: Vec<usize> = w.layers[0]
        .iter()
        .enumerate()
        .map(|(j, a)| b.dense(a.clone(), format!("A(0,{})", j + 1)))
        .collect();
    for &a in &below {
        b.open(a, 1);
    }
    for l in 0..spec.depth() {
        let deltas: Vec<usize> = (0..below.len() / p)
            .map(|k| b.delta(p + 1, spec.channels[l], format!("δ({l},{})", k + 1)))
            .collect();
        for (j, &a) in below.iter().enumerate() {
            b.connect(a, 0, deltas[j / p], j % p);
        }
        if l + 1 < spec.depth() {
            let above: Vec<usize> = w.layers[l + 1]
                .iter()
                .enumerate()
                .map(|(j, a)| b.dense(a.clone(), format!("A({},{})", l + 1, j + 1)))
                .collect();
            for (&d, &a) in deltas.iter().zip(&above) {
                b.connect(d, p, a, 1);
            }
            below = above;
        } else {
            let g = b.dense(w.g.clone(), OUTPUT_LABEL);
            b.connect(deltas[0], p, g, 1);
            b.open(g, 0);
        }
    }
    let mut tn = b.build();
    tn.schedule = Some(tn.internal_edges());
    Ok(tn)
}

pub fn build_tn(spec: &ConvACSpec, w: &WeightSet) -> Result<TensorNetwork> {
    match spec.kind {
        DepthKind::Shallow => build_shallow_tn(spec, w),
        DepthKind::Deep => build_deep_tn(spec, w),
    }
}

/// The builder network with the input vectors attached: its only open mode is the class.
pub fn build_tn_with_inputs(spec: &ConvACSpec, w: &WeightSet, x: &RepresentationInput) -> Result<TensorNetwork> {
    x.check(spec)?;
    let mut tn = build_tn(spec, w)?;
    let inputs: Vec<usize> = tn.open_order[..spec.n].to_vec();
    for (j, (e, v)) in inputs.into_iter().zip(x.vectors()?).enumerate() {
        tn.attach_vector(e, v, &format!("v(0,{})", j + 1))?;
    }
    tn.schedule = Some(tn.internal_edges());
    Ok(tn)
}

/// Class scores by direct layer-by-layer evaluation: conv, then same-channel product pooling.
pub fn forward(spec: &ConvACSpec, w: &WeightSet, x: &RepresentationInput) -> Result<Vec<f64>> {
    w.check(spec)?;
    x.check(spec)?;
    let window = spec.window();
    let mut acts: Vec<Vec<f64>> = x.x.clone();
    for (l, layer) in w.layers.iter().enumerate() {
        let convolved: Vec<Vec<f64>> = layer.iter().zip(&acts).map(|(a, v)| mat_vec(a, v)).collect();
        let width = spec.channels[l];
        acts = convolved
            .chunks(window)
            .map(|win| {
                (0..width)
                    .map(|d| win.iter().map(|u| u[d]).product())
                    .collect()
            })
            .collect();
    }
    debug_assert_eq!(acts.len(), 1);
    Ok(mat_vec(&w.g, &acts[0]))
}

fn mat_vec(a: &DenseTensor, v: &[f64]) -> Vec<f64> {
    (0..a.shape()[0])
        .map(|r| a.row(r).iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

/// The order-`N` weights tensor of class `y` (zero-based), obtained by contracting
/// the builder network with the class mode fixed.
pub fn weights_tensor(spec: &ConvACSpec, w: &WeightSet, y: usize) -> Result<DenseTensor> {
    if y >= spec.classes {
        return Err(Error::Shape(format!("class {y} out of range for {} classes", spec.classes)));
    }
    let cap = size_cap();
    check_size(format!("weights tensor M^N = {}^{}", spec.m, spec.n), &vec![spec.m; spec.n], cap)?;
    let mut tn = build_tn(spec, w)?;
    let class_edge = *tn.open_order.last().expect("class edge");
    tn.fix_open_edge(class_edge, y)?;
    tn.schedule = Some(tn.internal_edges());
    tn.contract_with(tn.schedule.as_deref(), cap)
}

/// `<A, v_1 ⊗ .. ⊗ v_N>` without materializing the rank-1 tensor.
pub fn score_inner_product(a_y: &DenseTensor, x: &RepresentationInput) -> Result<f64> {
    if a_y.order() != x.x.len() {
        return Err(Error::Shape(format!(
            "tensor of order {} against {} input vectors",
            a_y.order(),
            x.x.len()
        )));
    }
    for (j, (&d, v)) in a_y.shape().iter().zip(&x.x).enumerate() {
        if d != v.len() {
            return Err(Error::Shape(format!("mode {j} has dimension {d}, input has {}", v.len())));
        }
    }
    // contract the last mode repeatedly
    let mut cur: Vec<f64> = a_y.data().to_vec();
    for v in x.x.iter().rev() {
        cur = cur
            .chunks(v.len())
            .map(|c| c.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect();
    }
    Ok(cur[0])
}
