//! RBF similarity kernel and the facility-location target oracle.

use crate::error::{Error, Result};
use crate::matrix::{sq_dist, Matrix};
use crate::setfn::{normalize_set, GainOracle, GroundSet, SetFunction};

/// Dense symmetric similarity matrix with unit diagonal and entries in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct SimilarityKernel {
    gamma: f64,
    matrix: Matrix,
}

impl SimilarityKernel {
    /// Wrap an explicit similarity matrix (must be square, symmetric, non-negative).
    pub fn from_matrix(matrix: Matrix) -> Result<Self> {
        let n = matrix.rows();
        if matrix.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: matrix.cols(),
                context: "kernel must be square",
            });
        }
        for i in 0..n {
            for j in 0..n {
                let s = matrix.get(i, j);
                if !s.is_finite() || s < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "kernel entry ({i},{j}) = {s} is not a finite non-negative value"
                    )));
                }
                if s != matrix.get(j, i) {
                    return Err(Error::InvalidArgument(format!(
                        "kernel not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(SimilarityKernel { gamma: 0.0, matrix })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    #[inline]
    pub fn sim(&self, a: usize, i: usize) -> f64 {
        self.matrix.get(a, i)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }
}

/// `s_{a,i} = exp(-gamma ‖x_a − x_i‖²)`.
pub fn rbf_similarity(embeddings: &Matrix, gamma: f64) -> Result<SimilarityKernel> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "RBF gamma must be positive, got {gamma}"
        )));
    }
    if !embeddings.all_finite() {
        return Err(Error::NonFinite("kernel embeddings"));
    }
    let n = embeddings.rows();
    let mut m = Matrix::zeros(n, n);
    for a in 0..n {
        m.set(a, a, 1.0);
        for i in (a + 1)..n {
            let s = (-gamma * sq_dist(embeddings.row(a), embeddings.row(i))).exp();
            m.set(a, i, s);
            m.set(i, a, s);
        }
    }
    Ok(SimilarityKernel { gamma, matrix: m })
}

/// Median-heuristic RBF width: `1 / median_{a<i} ‖x_a − x_i‖²`.
///
/// Uses at most the first 2000 rows so the cost stays bounded.
pub fn median_heuristic_gamma(embeddings: &Matrix) -> Result<f64> {
    let n = embeddings.rows().min(2000);
    let mut d = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for a in 0..n {
        for i in (a + 1)..n {
            d.push(sq_dist(embeddings.row(a), embeddings.row(i)));
        }
    }
    if d.is_empty() {
        return Err(Error::InvalidArgument(
            "median heuristic needs at least two points".into(),
        ));
    }
    d.sort_by(f64::total_cmp);
    let med = d[d.len() / 2];
    if !(med > 0.0) {
        return Err(Error::InvalidArgument(
            "median squared distance is zero; set gamma explicitly".into(),
        ));
    }
    Ok(1.0 / med)
}

/// `f(A) = Σ_i max_{a∈A} s_{a,i}`, with the max over ∅ taken as 0.
#[derive(Debug, Clone)]
pub struct FacilityLocation {
    kernel: SimilarityKernel,
}

impl FacilityLocation {
    pub fn new(kernel: SimilarityKernel) -> Self {
        FacilityLocation { kernel }
    }

    /// RBF facility location over a ground set's embeddings.
    pub fn rbf(ground: &GroundSet, gamma: f64) -> Result<Self> {
        Ok(Self::new(rbf_similarity(ground.embeddings(), gamma)?))
    }

    pub fn kernel(&self) -> &SimilarityKernel {
        &self.kernel
    }
}

/// Checked facility-location evaluation.
pub fn facility_location_eval(kernel: &SimilarityKernel, set: &[usize]) -> Result<f64> {
    let n = kernel.n();
    for &a in set {
        if a >= n {
            return Err(Error::IndexOutOfRange { index: a, n });
        }
    }
    let set = normalize_set(set);
    Ok(fl_value(kernel, &set))
}

fn fl_value(kernel: &SimilarityKernel, set: &[usize]) -> f64 {
    if set.is_empty() {
        return 0.0;
    }
    let n = kernel.n();
    let mut total = 0.0;
    for i in 0..n {
        let mut best = 0.0f64;
        for &a in set {
            best = best.max(kernel.sim(a, i));
        }
        total += best;
    }
    total
}

impl SetFunction for FacilityLocation {
    fn n(&self) -> usize {
        self.kernel.n()
    }

    fn eval(&self, set: &[usize]) -> f64 {
        fl_value(&self.kernel, &normalize_set(set))
    }

    fn oracle(&self) -> Box<dyn GainOracle + '_> {
        Box::new(FlOracle {
            kernel: &self.kernel,
            cover: vec![0.0; self.kernel.n()],
            members: Vec::new(),
            value: 0.0,
        })
    }
}

/// Incremental FL state: per-point best similarity to the current selection.
struct FlOracle<'a> {
    kernel: &'a SimilarityKernel,
    cover: Vec<f64>,
    members: Vec<usize>,
    value: f64,
}

impl GainOracle for FlOracle<'_> {
    fn gain(&self, v: usize) -> f64 {
        if self.members.contains(&v) {
            return 0.0;
        }
        let row = self.kernel.matrix.row(v);
        row.iter()
            .zip(&self.cover)
            .map(|(&s, &c)| (s - c).max(0.0))
            .sum()
    }

    fn insert(&mut self, v: usize) {
        if self.members.contains(&v) {
            return;
        }
        let g = self.gain(v);
        for (c, &s) in self.cover.iter_mut().zip(self.kernel.matrix.row(v)) {
            if s > *c {
                *c = s;
            }
        }
        self.members.push(v);
        self.value += g;
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn members(&self) -> &[usize] {
        &self.members
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> SimilarityKernel {
        SimilarityKernel::from_matrix(Matrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap())
            .unwrap()
    }

    #[test]
    fn rbf_identical_rows_are_one() {
        let m = Matrix::from_rows(&[vec![0.3, -1.0], vec![0.3, -1.0]]).unwrap();
        let k = rbf_similarity(&m, 2.0).unwrap();
        assert_eq!(k.sim(0, 1), 1.0);
    }

    #[test]
    fn rbf_hand_value() {
        let m = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let k = rbf_similarity(&m, 1.0).unwrap();
        assert!((k.sim(0, 1) - 0.367879).abs() < 1e-6);
        assert_eq!(k.sim(0, 1), (-1.0f64).exp());
    }

    #[test]
    fn rbf_symmetric_unit_diagonal() {
        let m = Matrix::from_fn(5, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.37 - 0.5);
        let k = rbf_similarity(&m, 0.8).unwrap();
        for a in 0..5 {
            assert_eq!(k.sim(a, a), 1.0);
            for i in 0..5 {
                assert_eq!(k.sim(a, i), k.sim(i, a));
                assert!((0.0..=1.0).contains(&k.sim(a, i)));
            }
        }
    }

    #[test]
    fn rbf_rejects_bad_gamma_and_nan() {
        let m = Matrix::zeros(2, 2);
        assert!(rbf_similarity(&m, 0.0).is_err());
        assert!(rbf_similarity(&m, -1.0).is_err());
        let bad = Matrix::from_rows(&[vec![f64::INFINITY, 0.0]]).unwrap();
        assert!(rbf_similarity(&bad, 1.0).is_err());
    }

    #[test]
    fn fl_hand_values() {
        let k = two_by_two();
        assert_eq!(facility_location_eval(&k, &[]).unwrap(), 0.0);
        assert_eq!(facility_location_eval(&k, &[0]).unwrap(), 1.5);
        assert_eq!(facility_location_eval(&k, &[0, 1]).unwrap(), 2.0);
        assert!(facility_location_eval(&k, &[2]).is_err());
    }

    #[test]
    fn fl_oracle_matches_eval() {
        let fl = FacilityLocation::new(two_by_two());
        let mut o = fl.oracle();
        assert_eq!(o.gain(0), 1.5);
        o.insert(0);
        assert_eq!(o.gain(1), 0.5);
        assert_eq!(o.gain(0), 0.0);
        o.insert(1);
        assert_eq!(o.value(), 2.0);
    }

    #[test]
    fn median_heuristic_positive() {
        let m = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        // squared distances 1, 9, 4 -> median 4
        assert_eq!(median_heuristic_gamma(&m).unwrap(), 0.25);
    }
}
