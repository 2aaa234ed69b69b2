use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::{sq_dist, Matrix};

#[derive(Debug, Clone)]
pub struct KMeans {
    pub centers: Matrix,
    pub assignment: Vec<usize>,
    /// Sum of squared distances after each assignment step.
    pub objective: Vec<f64>,
}

fn nearest(centers: &Matrix, x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centers.rows() {
        let d = sq_dist(centers.row(c), x);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Lloyd's iterations from `k` distinct random rows until the assignment
/// stops changing or `max_iters` is reached. Empty clusters are reseeded to
/// the point farthest from its current center.
pub fn kmeans<R: Rng + ?Sized>(
    points: &Matrix,
    k: usize,
    max_iters: usize,
    rng: &mut R,
) -> Result<KMeans> {
    let m = points.rows();
    if k == 0 {
        return Err(Error::InvalidArgument("k-means needs k ≥ 1".into()));
    }
    if k > m {
        return Err(Error::InvalidArgument(format!(
            "k-means with k = {k} on {m} points"
        )));
    }
    let mut seeds: Vec<usize> = index::sample(rng, m, k).into_vec();
    seeds.sort_unstable();
    let mut centers = points.select_rows(&seeds);
    let mut assignment = vec![usize::MAX; m];
    let mut dist = vec![0.0; m];
    let mut objective = Vec::new();

    for _ in 0..max_iters.max(1) {
        let mut changed = false;
        for i in 0..m {
            let (c, d) = nearest(&centers, points.row(i));
            if assignment[i] != c {
                assignment[i] = c;
                changed = true;
            }
            dist[i] = d;
        }
        objective.push(dist.iter().sum());
        if !changed {
            break;
        }

        let d = points.cols();
        let mut sums = Matrix::zeros(k, d);
        let mut counts = vec![0usize; k];
        for i in 0..m {
            counts[assignment[i]] += 1;
            for (s, &x) in sums.row_mut(assignment[i]).iter_mut().zip(points.row(i)) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                for (dst, &s) in centers.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = s * inv;
                }
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..m)
                    .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
                    .expect("m ≥ k ≥ 1");
                centers.row_mut(c).copy_from_slice(points.row(far));
                dist[far] = 0.0;
            }
        }
        if !centers.all_finite() {
            return Err(Error::NonFinite("k-means centers"));
        }
    }
    Ok(KMeans {
        centers,
        assignment,
        objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn blobs(rng: &mut ChaCha8Rng) -> Matrix {
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut rows = Vec::new();
        for c in [[0.0, 0.0], [10.0, 10.0]] {
            for _ in 0..50 {
                rows.push(vec![c[0] + noise.sample(rng), c[1] + noise.sample(rng)]);
            }
        }
        Matrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn separated_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pts = blobs(&mut rng);
        let km = kmeans(&pts, 2, 100, &mut rng).unwrap();
        for c in 0..2 {
            let ctr = km.centers.row(c);
            let near0 = sq_dist(ctr, &[0.0, 0.0]).sqrt() < 1.0;
            let near1 = sq_dist(ctr, &[10.0, 10.0]).sqrt() < 1.0;
            assert!(near0 || near1);
        }
        assert_ne!(km.assignment[0], km.assignment[99]);
        assert!(km.objective.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    }

    #[test]
    fn k_equals_m() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![5.0]]).unwrap();
        let km = kmeans(&pts, 3, 10, &mut rng).unwrap();
        let mut a = km.assignment.clone();
        a.sort();
        a.dedup();
        assert_eq!(a.len(), 3);
        assert_eq!(*km.objective.last().unwrap(), 0.0);
        assert!(kmeans(&pts, 4, 10, &mut rng).is_err());
    }
}
