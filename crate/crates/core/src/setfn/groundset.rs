use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// The universe `V = {0, .., n-1}`: one embedding row per item, optional class
/// labels and stable item ids (used to check held-out disjointness).
#[derive(Debug, Clone, PartialEq)]
pub struct GroundSet {
    embeddings: Matrix,
    labels: Option<Vec<usize>>,
    ids: Vec<u64>,
}

impl GroundSet {
    pub fn new(embeddings: Matrix, labels: Option<Vec<usize>>) -> Result<Self> {
        let ids = (0..embeddings.rows() as u64).collect();
        Self::with_ids(embeddings, labels, ids)
    }

    pub fn with_ids(embeddings: Matrix, labels: Option<Vec<usize>>, ids: Vec<u64>) -> Result<Self> {
        let n = embeddings.rows();
        if n == 0 {
            return Err(Error::Empty("ground set"));
        }
        if !embeddings.all_finite() {
            return Err(Error::NonFinite("ground set embeddings"));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: l.len(),
                    context: "label count",
                });
            }
        }
        if ids.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: ids.len(),
                context: "item id count",
            });
        }
        Ok(GroundSet {
            embeddings,
            labels,
            ids,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.embeddings.rows()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.embeddings.cols()
    }

    pub fn embeddings(&self) -> &Matrix {
        &self.embeddings
    }

    #[inline]
    pub fn row(&self, v: usize) -> &[f64] {
        self.embeddings.row(v)
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn require_labels(&self, what: &'static str) -> Result<&[usize]> {
        self.labels.as_deref().ok_or(Error::MissingLabels(what))
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    /// Number of classes, `max label + 1`.
    pub fn num_classes(&self) -> usize {
        self.labels
            .as_ref()
            .and_then(|l| l.iter().max().map(|m| m + 1))
            .unwrap_or(0)
    }

    /// Item indices grouped by class label.
    pub fn class_members(&self) -> Result<Vec<Vec<usize>>> {
        let labels = self.require_labels("class grouping")?;
        let mut members = vec![Vec::new(); self.num_classes()];
        for (v, &c) in labels.iter().enumerate() {
            members[c].push(v);
        }
        Ok(members)
    }

    pub fn check_index(&self, v: usize) -> Result<()> {
        if v >= self.n() {
            return Err(Error::IndexOutOfRange {
                index: v,
                n: self.n(),
            });
        }
        Ok(())
    }

    /// Sub-ground-set restricted to `idx` (ids and labels carried along).
    pub fn subset(&self, idx: &[usize]) -> Result<GroundSet> {
        for &v in idx {
            self.check_index(v)?;
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| idx.iter().map(|&v| l[v]).collect());
        let ids = idx.iter().map(|&v| self.ids[v]).collect();
        GroundSet::with_ids(self.embeddings.select_rows(idx), labels, ids)
    }

    /// Append a row, returning its new index.
    pub fn push(&mut self, row: &[f64], label: Option<usize>, id: u64) -> Result<usize> {
        if row.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("pushed embedding row"));
        }
        self.embeddings.push_row(row)?;
        if let Some(l) = &mut self.labels {
            l.push(label.unwrap_or(0));
        }
        self.ids.push(id);
        Ok(self.n() - 1)
    }

    /// True when no item id is shared between the two ground sets.
    pub fn disjoint_from(&self, other: &GroundSet) -> bool {
        let mine: HashSet<u64> = self.ids.iter().copied().collect();
        other.ids.iter().all(|id| !mine.contains(id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_nonfinite() {
        assert!(GroundSet::new(Matrix::zeros(0, 2), None).is_err());
        let m = Matrix::from_rows(&[vec![f64::NAN, 0.0]]).unwrap();
        assert!(GroundSet::new(m, None).is_err());
    }

    #[test]
    fn label_length_checked() {
        let m = Matrix::zeros(3, 2);
        assert!(GroundSet::new(m.clone(), Some(vec![0, 1])).is_err());
        let g = GroundSet::new(m, Some(vec![0, 2, 2])).unwrap();
        assert_eq!(g.num_classes(), 3);
        assert_eq!(
            g.class_members().unwrap(),
            vec![vec![0], vec![], vec![1, 2]]
        );
    }
}
