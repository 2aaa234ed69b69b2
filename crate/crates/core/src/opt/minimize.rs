use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::setfn::{normalize_set, SetFunction};

/// Low-value set of exactly `size` items from `pool`.
///
/// Grows greedily from the cheapest singleton by least marginal gain, then
/// makes one exchange pass over the positions (visited in random order),
/// swapping in the outside item that lowers `f` the most.
pub fn submod_min_heuristic<R: Rng + ?Sized>(
    f: &dyn SetFunction,
    pool: &[usize],
    size: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let pool = normalize_set(pool);
    if let Some(&v) = pool.iter().find(|&&v| v >= f.n()) {
        return Err(Error::IndexOutOfRange { index: v, n: f.n() });
    }
    if size > pool.len() {
        return Err(Error::InvalidArgument(format!(
            "set size {size} exceeds pool size {}",
            pool.len()
        )));
    }
    if size == pool.len() {
        return Ok(pool);
    }
    let mut oracle = f.oracle();
    let mut inside = vec![false; pool.len()];
    for _ in 0..size {
        let mut best: Option<(f64, usize)> = None;
        for (p, &v) in pool.iter().enumerate() {
            if inside[p] {
                continue;
            }
            let g = oracle.gain(v);
            if !g.is_finite() {
                return Err(Error::NonFinite("marginal gain"));
            }
            if best.is_none_or(|(bg, bp)| g < bg || (g == bg && p < bp)) {
                best = Some((g, p));
            }
        }
        let (_, p) = best.expect("size < pool size");
        inside[p] = true;
        oracle.insert(pool[p]);
    }
    let mut set: Vec<usize> = oracle.members().to_vec();
    drop(oracle);

    let mut value = f.eval(&set);
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.shuffle(rng);
    for pos in order {
        let mut best: Option<(f64, usize)> = None;
        let old = set[pos];
        for (p, &u) in pool.iter().enumerate() {
            if inside[p] {
                continue;
            }
            set[pos] = u;
            let val = f.eval(&set);
            if val < value && best.is_none_or(|(bv, _)| val < bv) {
                best = Some((val, p));
            }
        }
        match best {
            Some((val, p)) => {
                let old_p = pool.binary_search(&old).expect("member of pool");
                inside[old_p] = false;
                inside[p] = true;
                set[pos] = pool[p];
                value = val;
            }
            None => set[pos] = old,
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setfn::Modular;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn modular_picks_smallest_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = Modular::new(vec![4.0, 0.5, 3.0, 0.1, 2.0, 9.0]);
        let mut s = submod_min_heuristic(&f, &[0, 1, 2, 3, 4, 5], 3, &mut rng).unwrap();
        s.sort();
        assert_eq!(s, vec![1, 3, 4]);
    }

    #[test]
    fn full_size_returns_pool() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = Modular::new(vec![1.0; 4]);
        assert_eq!(
            submod_min_heuristic(&f, &[3, 1, 2, 0], 4, &mut rng).unwrap(),
            vec![0, 1, 2, 3]
        );
        assert!(submod_min_heuristic(&f, &[0, 1], 3, &mut rng).is_err());
    }
}
