use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::{sq_dist, Matrix};

/// Single-pass reservoir sample of `k` stream items (Algorithm R).
pub fn reservoir_sample<R: Rng + ?Sized>(
    stream: &[usize],
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::InvalidArgument("reservoir size must be ≥ 1".into()));
    }
    let mut reservoir: Vec<usize> = Vec::with_capacity(k);
    for (t, &v) in stream.iter().enumerate() {
        if t < k {
            reservoir.push(v);
        } else {
            let j = rng.random_range(0..=t);
            if j < k {
                reservoir[j] = v;
            }
        }
    }
    Ok(reservoir)
}

/// `k` distinct items of `pool` drawn uniformly without replacement.
pub fn random_subset<R: Rng + ?Sized>(pool: &[usize], k: usize, rng: &mut R) -> Result<Vec<usize>> {
    if k > pool.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot draw {k} items from a pool of {}",
            pool.len()
        )));
    }
    Ok(index::sample(rng, pool.len(), k)
        .into_iter()
        .map(|p| pool[p])
        .collect())
}

/// Greedy farthest-point traversal from a random start row.
pub fn k_centers<R: Rng + ?Sized>(
    embeddings: &Matrix,
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let n = embeddings.rows();
    if n == 0 {
        return Err(Error::Empty("k-centers input"));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds n = {n}")));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let start = rng.random_range(0..n);
    let mut chosen = vec![start];
    let mut dist: Vec<f64> = (0..n)
        .map(|i| sq_dist(embeddings.row(i), embeddings.row(start)))
        .collect();
    while chosen.len() < k {
        let mut far = 0;
        for i in 1..n {
            if dist[i] > dist[far] {
                far = i;
            }
        }
        chosen.push(far);
        for (i, d) in dist.iter_mut().enumerate() {
            *d = d.min(sq_dist(embeddings.row(i), embeddings.row(far)));
        }
    }
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reservoir_short_stream_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert_eq!(
            reservoir_sample(&[5, 6, 7], 5, &mut rng).unwrap(),
            vec![5, 6, 7]
        );
        let stream: Vec<usize> = (0..100).collect();
        let a = reservoir_sample(&stream, 10, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = reservoir_sample(&stream, 10, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(reservoir_sample(&stream, 0, &mut rng).is_err());
    }

    #[test]
    fn k_centers_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![0.0, 0.1],
            vec![10.0, 10.0],
            vec![10.1, 10.0],
        ])
        .unwrap();
        let one = k_centers(&pts, 1, &mut rng).unwrap();
        assert_eq!(one.len(), 1);
        for _ in 0..10 {
            let two = k_centers(&pts, 2, &mut rng).unwrap();
            let blob = |i: usize| usize::from(i >= 3);
            assert_ne!(blob(two[0]), blob(two[1]));
        }
        assert!(k_centers(&pts, 6, &mut rng).is_err());
    }
}
