//! The matroids supported by the aggregation stage and their weighted rank.
//!
//! For each of these matroids the greedy rule (take the heaviest elements
//! while independence holds) is exact, so the weighted rank reduces to a
//! deterministic selection. Ties are broken by the lower item index.

use crate::error::{Error, Result};
use crate::setfn::normalize_set;

#[derive(Debug, Clone, PartialEq)]
pub enum Matroid {
    /// Every subset is independent; the weighted rank is the modular sum.
    Free,
    /// Subsets of size at most `k` are independent.
    Uniform { k: usize },
    /// `block_of[v]` names the block of item `v`; at most `limits[b]` items may
    /// come from block `b`.
    Partition {
        block_of: Vec<usize>,
        limits: Vec<usize>,
    },
}

impl Matroid {
    /// Partition matroid from an explicit list of blocks, which must be
    /// disjoint and cover `{0, .., n-1}`.
    pub fn partition(blocks: &[Vec<usize>], limits: &[usize]) -> Result<Self> {
        if blocks.len() != limits.len() {
            return Err(Error::DimensionMismatch {
                expected: blocks.len(),
                actual: limits.len(),
                context: "partition limits per block",
            });
        }
        let n: usize = blocks.iter().map(Vec::len).sum();
        let mut block_of = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            for &v in block {
                if v >= n {
                    return Err(Error::InvalidArgument(format!(
                        "partition blocks do not cover 0..{n} (item {v})"
                    )));
                }
                if block_of[v] != usize::MAX {
                    return Err(Error::InvalidArgument(format!(
                        "item {v} appears in more than one partition block"
                    )));
                }
                block_of[v] = b;
            }
        }
        Ok(Matroid::Partition {
            block_of,
            limits: limits.to_vec(),
        })
    }

    /// Single block holding all of `0..n` with the given cap.
    pub fn single_block(n: usize, limit: usize) -> Self {
        Matroid::Partition {
            block_of: vec![0; n],
            limits: vec![limit],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Matroid::Partition { block_of, limits } = self {
            if let Some(&b) = block_of.iter().find(|&&b| b >= limits.len()) {
                return Err(Error::InvalidArgument(format!(
                    "partition block id {b} has no limit"
                )));
            }
        }
        Ok(())
    }

    /// Size of the ground set this matroid is tied to, if any.
    pub fn ground_size(&self) -> Option<usize> {
        match self {
            Matroid::Partition { block_of, .. } => Some(block_of.len()),
            _ => None,
        }
    }

    /// Short textual descriptor: `free`, `uniform:K`, or `partition:N`.
    pub fn describe(&self) -> String {
        match self {
            Matroid::Free => "free".into(),
            Matroid::Uniform { k } => format!("uniform:{k}"),
            Matroid::Partition { block_of, limits } => {
                format!("partition:{}x{}", block_of.len(), limits.len())
            }
        }
    }

    /// Weighted rank of the items `items` (sorted ascending, unique) whose
    /// weights are `weights[p]` for `items[p]`. Returns the rank and marks in
    /// `selected` the positions of the maximizing independent subset.
    ///
    /// Summation order depends only on the set, never on how it was presented.
    pub(crate) fn rank_select(
        &self,
        items: &[usize],
        weights: &[f64],
        selected: &mut Vec<bool>,
    ) -> Result<f64> {
        debug_assert_eq!(items.len(), weights.len());
        selected.clear();
        selected.resize(items.len(), false);
        match self {
            Matroid::Free => {
                let mut total = 0.0;
                for (p, &w) in weights.iter().enumerate() {
                    total += w;
                    selected[p] = true;
                }
                Ok(total)
            }
            Matroid::Uniform { k } => {
                let order = heaviest_first(items, weights, 0..items.len());
                let mut total = 0.0;
                for &p in order.iter().take(*k) {
                    total += weights[p];
                    selected[p] = true;
                }
                Ok(total)
            }
            Matroid::Partition { block_of, limits } => {
                let mut by_block: Vec<(usize, usize)> = Vec::with_capacity(items.len());
                for (p, &v) in items.iter().enumerate() {
                    let b = *block_of.get(v).ok_or(Error::IndexOutOfRange {
                        index: v,
                        n: block_of.len(),
                    })?;
                    by_block.push((b, p));
                }
                by_block.sort_unstable();
                let mut total = 0.0;
                let mut start = 0;
                while start < by_block.len() {
                    let b = by_block[start].0;
                    let end = by_block[start..]
                        .iter()
                        .position(|&(bb, _)| bb != b)
                        .map_or(by_block.len(), |o| start + o);
                    let order = heaviest_first(
                        items,
                        weights,
                        by_block[start..end].iter().map(|&(_, p)| p),
                    );
                    for &p in order.iter().take(limits[b]) {
                        total += weights[p];
                        selected[p] = true;
                    }
                    start = end;
                }
                Ok(total)
            }
        }
    }
}

fn heaviest_first(
    items: &[usize],
    weights: &[f64],
    positions: impl Iterator<Item = usize>,
) -> Vec<usize> {
    let mut order: Vec<usize> = positions.collect();
    order.sort_by(|&a, &b| {
        weights[b]
            .total_cmp(&weights[a])
            .then_with(|| items[a].cmp(&items[b]))
    });
    order
}

/// `rank_{M,m}(A) = max_{I ∈ 𝓘} m(A ∩ I)` for a non-negative weight vector `m`
/// indexed by item.
pub fn weighted_matroid_rank(matroid: &Matroid, m: &[f64], set: &[usize]) -> Result<f64> {
    if let Some((position, &value)) = m.iter().enumerate().find(|(_, &w)| !(w >= 0.0)) {
        return Err(Error::NegativeWeight {
            value,
            position,
            context: "matroid rank weights",
        });
    }
    matroid.validate()?;
    let items = normalize_set(set);
    for &v in &items {
        if v >= m.len() {
            return Err(Error::IndexOutOfRange {
                index: v,
                n: m.len(),
            });
        }
    }
    let w: Vec<f64> = items.iter().map(|&v| m[v]).collect();
    let mut sel = Vec::new();
    matroid.rank_select(&items, &w, &mut sel)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_is_modular() {
        assert_eq!(
            weighted_matroid_rank(&Matroid::Free, &[3.0, 1.0, 2.0], &[0, 2]).unwrap(),
            5.0
        );
    }

    #[test]
    fn single_block_limit_one_is_max() {
        let m = Matroid::single_block(3, 1);
        assert_eq!(
            weighted_matroid_rank(&m, &[3.0, 1.0, 2.0], &[0, 2]).unwrap(),
            3.0
        );
    }

    #[test]
    fn empty_set_is_zero() {
        for m in [
            Matroid::Free,
            Matroid::Uniform { k: 2 },
            Matroid::single_block(3, 1),
        ] {
            assert_eq!(
                weighted_matroid_rank(&m, &[3.0, 1.0, 2.0], &[]).unwrap(),
                0.0
            );
        }
    }

    #[test]
    fn uniform_takes_top_k() {
        let m = Matroid::Uniform { k: 2 };
        assert_eq!(
            weighted_matroid_rank(&m, &[3.0, 1.0, 2.0, 5.0], &[0, 1, 2, 3]).unwrap(),
            8.0
        );
        let z = Matroid::Uniform { k: 0 };
        assert_eq!(weighted_matroid_rank(&z, &[3.0], &[0]).unwrap(), 0.0);
    }

    #[test]
    fn partition_caps_per_block() {
        let m = Matroid::partition(&[vec![0, 1], vec![2, 3]], &[1, 2]).unwrap();
        // block 0: max(4,1) = 4; block 1: 2+3
        assert_eq!(
            weighted_matroid_rank(&m, &[4.0, 1.0, 2.0, 3.0], &[0, 1, 2, 3]).unwrap(),
            9.0
        );
    }

    #[test]
    fn ties_select_lower_index() {
        let m = Matroid::Uniform { k: 1 };
        let mut sel = Vec::new();
        m.rank_select(&[2, 5], &[1.0, 1.0], &mut sel).unwrap();
        assert_eq!(sel, vec![true, false]);
    }

    #[test]
    fn rejects_negative_weights() {
        assert!(matches!(
            weighted_matroid_rank(&Matroid::Free, &[1.0, -0.5], &[0]),
            Err(Error::NegativeWeight { position: 1, .. })
        ));
    }

    #[test]
    fn partition_rejects_overlap_and_gaps() {
        assert!(Matroid::partition(&[vec![0, 1], vec![1]], &[1, 1]).is_err());
        assert!(Matroid::partition(&[vec![0, 2]], &[1]).is_err());
    }

    #[test]
    fn never_exceeds_modular_sum() {
        let w = [0.5, 2.0, 1.5, 0.25, 3.0];
        let ms = [
            Matroid::Uniform { k: 2 },
            Matroid::partition(&[vec![0, 3], vec![1, 2, 4]], &[1, 1]).unwrap(),
        ];
        for mask in 0u32..32 {
            let a: Vec<usize> = (0..5).filter(|i| mask >> i & 1 == 1).collect();
            let total: f64 = a.iter().map(|&i| w[i]).sum();
            for m in &ms {
                assert!(weighted_matroid_rank(m, &w, &a).unwrap() <= total);
            }
        }
    }
}
