use crate::error::{Error, Result};
use crate::model::DspnModel;
use crate::setfn::GroundSet;

#[derive(Debug, Clone, PartialEq)]
pub struct RankedItem {
    pub item: usize,
    pub value: f64,
    pub label: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanking {
    pub feature: usize,
    /// Largest values first.
    pub top: Vec<RankedItem>,
    /// Smallest values last.
    pub bottom: Vec<RankedItem>,
}

impl FeatureRanking {
    /// Share of the most common label among the top items.
    pub fn top_purity(&self) -> Option<f64> {
        let labels: Vec<usize> = self.top.iter().filter_map(|r| r.label).collect();
        if labels.is_empty() {
            return None;
        }
        let max = labels.iter().copied().max()?;
        let mut counts = vec![0usize; max + 1];
        for l in &labels {
            counts[*l] += 1;
        }
        Some(*counts.iter().max()? as f64 / labels.len() as f64)
    }
}

/// Rank the items of `ground` by each chosen pillar output coordinate.
/// Ties keep ascending item order.
pub fn feature_ranking_report(
    model: &DspnModel,
    ground: &GroundSet,
    features: &[usize],
    k: usize,
) -> Result<Vec<FeatureRanking>> {
    let out = model.embed(ground)?;
    let labels = ground.labels();
    let mut reports = Vec::with_capacity(features.len());
    for &j in features {
        if j >= model.d() {
            return Err(Error::IndexOutOfRange {
                index: j,
                n: model.d(),
            });
        }
        let mut order: Vec<usize> = (0..ground.n()).collect();
        order.sort_by(|&a, &b| out.get(b, j).total_cmp(&out.get(a, j)));
        let item = |v: usize| RankedItem {
            item: v,
            value: out.get(v, j),
            label: labels.map(|l| l[v]),
        };
        let k = k.min(order.len());
        reports.push(FeatureRanking {
            feature: j,
            top: order[..k].iter().map(|&v| item(v)).collect(),
            bottom: order[order.len() - k..].iter().map(|&v| item(v)).collect(),
        });
    }
    Ok(reports)
}
