use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::setfn::GroundSet;

/// Gaussian blobs: centers `~ N(0, center_spread² I)`, points around each
/// center `~ N(center, cluster_spread² I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub clusters: usize,
    pub points_per_cluster: usize,
    pub dim: usize,
    pub cluster_spread: f64,
    pub center_spread: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.clusters == 0 || self.points_per_cluster == 0 || self.dim == 0 {
            return Err(Error::Config(
                "clusters, per-cluster and dim must all be ≥ 1".into(),
            ));
        }
        for (name, v) in [
            ("cluster-spread", self.cluster_spread),
            ("center-spread", self.center_spread),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Rows are cluster-major; values are rounded to `f32` so files round-trip.
/// Stream 0 of the seeded ChaCha8 generator draws the centers and stream
/// `c + 1` draws the points of cluster `c`.
fn generate(spec: &SyntheticSpec, per_cluster: usize) -> Result<(Matrix, Vec<usize>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centers_dist =
        Normal::new(0.0, spec.center_spread).map_err(|e| Error::Config(e.to_string()))?;
    let noise = Normal::new(0.0, spec.cluster_spread).map_err(|e| Error::Config(e.to_string()))?;
    let centers: Vec<Vec<f64>> = (0..spec.clusters)
        .map(|_| {
            (0..spec.dim)
                .map(|_| centers_dist.sample(&mut rng))
                .collect()
        })
        .collect();
    let n = spec.clusters * per_cluster;
    let mut data = Vec::with_capacity(n * spec.dim);
    let mut labels = Vec::with_capacity(n);
    for (c, center) in centers.iter().enumerate() {
        let mut crng = ChaCha8Rng::seed_from_u64(spec.seed);
        crng.set_stream(c as u64 + 1);
        for _ in 0..per_cluster {
            for &mu in center {
                data.push((mu + noise.sample(&mut crng)) as f32 as f64);
            }
            labels.push(c);
        }
    }
    Ok((Matrix::from_vec(n, spec.dim, data)?, labels))
}

pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<GroundSet> {
    let (m, labels) = generate(spec, spec.points_per_cluster)?;
    GroundSet::new(m, Some(labels))
}

/// Train and held-out ground sets of `points_per_cluster` each, drawn from
/// the same blobs (alternate points of each cluster). Item ids are unique
/// across the two sets.
pub fn gen_split(spec: &SyntheticSpec) -> Result<(GroundSet, GroundSet)> {
    let (m, labels) = generate(spec, 2 * spec.points_per_cluster)?;
    let mut train = Vec::new();
    let mut held = Vec::new();
    for i in 0..m.rows() {
        if i % 2 == 0 {
            train.push(i);
        } else {
            held.push(i);
        }
    }
    let all = GroundSet::with_ids(
        m,
        Some(labels),
        (0..2 * spec.clusters as u64 * spec.points_per_cluster as u64).collect(),
    )?;
    Ok((all.subset(&train)?, all.subset(&held)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::sq_dist;

    fn spec() -> SyntheticSpec {
        SyntheticSpec {
            clusters: 5,
            points_per_cluster: 100,
            dim: 2,
            cluster_spread: 1.0,
            center_spread: 20.0,
            seed: 7,
        }
    }

    #[test]
    fn counts_and_determinism() {
        let g = gen_synthetic(&spec()).unwrap();
        assert_eq!(g.n(), 500);
        assert_eq!(g.num_classes(), 5);
        let h = gen_synthetic(&spec()).unwrap();
        assert_eq!(g.embeddings().as_slice(), h.embeddings().as_slice());
        assert!(SyntheticSpec { dim: 0, ..spec() }.validate().is_err());
        assert!(SyntheticSpec {
            cluster_spread: 0.0,
            ..spec()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn held_out_nearest_neighbour_accuracy() {
        let (train, held) = gen_split(&spec()).unwrap();
        assert!(train.disjoint_from(&held));
        let (tl, hl) = (train.labels().unwrap(), held.labels().unwrap());
        let mut correct = 0;
        for i in 0..held.n() {
            let nn = (0..train.n())
                .min_by(|&a, &b| {
                    sq_dist(train.row(a), held.row(i))
                        .total_cmp(&sq_dist(train.row(b), held.row(i)))
                })
                .unwrap();
            correct += usize::from(tl[nn] == hl[i]);
        }
        assert!(correct as f64 / held.n() as f64 >= 0.95);
    }
}
