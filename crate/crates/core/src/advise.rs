//! Which layers' channel counts matter for correlations at a given feature size.

use serde::{Deserialize, Serialize};

use crate::convac::{build_tn, random_weights, ConvACSpec, DepthKind};
use crate::error::{Error, Result};
use crate::graph::{bounding_layers, ceil_log2, closed_form, to_analysis_graph, ClosedFormKind, LayerSymbol};
use crate::partition::InputPartition;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerNote {
    pub layer: String,
    pub channels: usize,
    pub bounds_feature_size: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutRow {
    pub partition: String,
    pub segment_length: usize,
    pub mask: String,
    pub mincut: String,
    /// Closed-form value where one exists for this partition.
    pub closed_form: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Advice {
    pub feature_size: usize,
    pub critical_layer: usize,
    pub bounding_layers: Vec<String>,
    pub emphasis: String,
    pub layers: Vec<LayerNote>,
    pub table: Vec<CutRow>,
}

/// Layer-importance advice for modelling correlations between segments of length `d`.
pub fn advise(spec: &ConvACSpec, d: usize) -> Result<Advice> {
    spec.validate()?;
    if spec.kind != DepthKind::Deep || spec.pool != 2 {
        return Err(Error::Spec("advice is available for deep circuits with pool 2".into()));
    }
    let n = spec.n;
    if d == 0 || d > n / 2 {
        return Err(Error::Config(format!("feature size {d} outside 1..={}", n / 2)));
    }
    let critical = ceil_log2(d);
    let bounding = bounding_layers(spec, d)?;
    let emphasis = if critical == 0 {
        "lower layers: local correlations are bounded by M and r_0 only".to_string()
    } else if critical + 1 >= spec.depth() {
        "deeper layers: every layer can bound correlations at this scale".to_string()
    } else {
        format!("layers 0..={critical}: channels above layer {critical} do not enter the bound")
    };

    let mut layers = vec![LayerNote {
        layer: LayerSymbol::M.to_string(),
        channels: spec.m,
        bounds_feature_size: true,
        note: "representation width; always part of the bound".into(),
    }];
    for (l, &r) in spec.channels.iter().enumerate() {
        let inside = bounding.contains(&LayerSymbol::R(l));
        layers.push(LayerNote {
            layer: LayerSymbol::R(l).to_string(),
            channels: r,
            bounds_feature_size: inside,
            note: if inside {
                format!("can limit correlations between segments of length {d}")
            } else {
                format!("only limits correlations at scales above {}", 1usize << critical)
            },
        });
    }

    let w = random_weights(spec, 0)?;
    let graph = to_analysis_graph(&build_tn(spec, &w)?)?;
    let mut table = Vec::new();
    let mut push = |name: &str, xi: usize, p: InputPartition, cf: Option<ClosedFormKind>| -> Result<()> {
        let cut = graph.min_cut(&p)?;
        table.push(CutRow {
            partition: name.to_string(),
            segment_length: xi,
            mask: p.mask(),
            mincut: cut.weight.to_string(),
            closed_form: cf.map(|k| closed_form(spec, k)).transpose()?.map(|v| v.to_string()),
        });
        Ok(())
    };
    push("left-right", n / 2, InputPartition::left_right(n)?, Some(ClosedFormKind::LeftRight))?;
    push("interleaved", 1, InputPartition::interleaved(n)?, None)?;
    push("segments", d, InputPartition::segments(n, d)?, None)?;

    Ok(Advice {
        feature_size: d,
        critical_layer: critical,
        bounding_layers: bounding.iter().map(|s| s.to_string()).collect(),
        emphasis,
        layers,
        table,
    })
}
