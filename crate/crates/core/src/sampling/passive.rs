use rand::seq::index;
use rand::Rng;

use super::kmeans::kmeans;
use super::{Provenance, SampledSet};
use crate::error::{Error, Result};
use crate::matrix::sq_dist;
use crate::opt::random_subset;
use crate::setfn::GroundSet;

fn nonempty_classes(ground: &GroundSet) -> Result<Vec<(usize, Vec<usize>)>> {
    ground.require_labels("passive sampling")?;
    let classes: Vec<(usize, Vec<usize>)> = ground
        .class_members()?
        .into_iter()
        .enumerate()
        .filter(|(_, m)| !m.is_empty())
        .collect();
    if classes.is_empty() {
        return Err(Error::Empty("labelled classes"));
    }
    Ok(classes)
}

/// Style I: `M` is `K` items of one random class, `E` is `K` items from all of `V`.
pub fn sample_style1<R: Rng + ?Sized>(
    ground: &GroundSet,
    k: usize,
    rng: &mut R,
) -> Result<(SampledSet, SampledSet)> {
    if k == 0 {
        return Err(Error::InvalidArgument("set size must be ≥ 1".into()));
    }
    let classes = nonempty_classes(ground)?;
    let (class, members) = &classes[rng.random_range(0..classes.len())];
    let mk = if members.len() < k {
        log::warn!(
            "class {class} has {} members; homogeneous set shrunk from {k}",
            members.len()
        );
        members.len()
    } else {
        k
    };
    let m = random_subset(members, mk, rng)?;
    let all: Vec<usize> = (0..ground.n()).collect();
    let e = random_subset(&all, k.min(ground.n()), rng)?;
    Ok((
        SampledSet::new(e, Provenance::Style1Het),
        SampledSet::scoped(m, Provenance::Style1Hom, vec![*class]),
    ))
}

/// Style II over `C′ ~ U[1..C]` random classes: `E` holds the point nearest
/// each k-means center of the restricted ground set, `M` holds one clump of
/// `⌊K/C′⌋` nearest neighbours per class.
pub fn sample_style2<R: Rng + ?Sized>(
    ground: &GroundSet,
    k: usize,
    c: usize,
    kmeans_iters: usize,
    rng: &mut R,
) -> Result<(SampledSet, SampledSet)> {
    if k == 0 {
        return Err(Error::InvalidArgument("set size must be ≥ 1".into()));
    }
    if c == 0 {
        return Err(Error::InvalidArgument(
            "style-II class bound C must be ≥ 1".into(),
        ));
    }
    let classes = nonempty_classes(ground)?;
    let c = c.min(classes.len());
    let c_prime = rng.random_range(1..=c);
    let mut picked: Vec<usize> = index::sample(rng, classes.len(), c_prime).into_vec();
    picked.sort_unstable();
    let scope: Vec<usize> = picked.iter().map(|&p| classes[p].0).collect();
    let mut restricted: Vec<usize> = picked
        .iter()
        .flat_map(|&p| classes[p].1.iter().copied())
        .collect();
    restricted.sort_unstable();

    let km_k = k.min(restricted.len());
    let pts = ground.embeddings().select_rows(&restricted);
    let km = kmeans(&pts, km_k, kmeans_iters, rng)?;
    let mut taken = vec![false; restricted.len()];
    let mut e = Vec::with_capacity(km_k);
    for ci in 0..km_k {
        let center = km.centers.row(ci);
        let mut best: Option<(f64, usize)> = None;
        for (p, &v) in restricted.iter().enumerate() {
            if taken[p] {
                continue;
            }
            let d = sq_dist(center, ground.row(v));
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, p));
            }
        }
        let (_, p) = best.expect("km_k ≤ |restricted|");
        taken[p] = true;
        e.push(restricted[p]);
    }

    let seeds = c_prime.min(k);
    let clump = (k / c_prime).max(1);
    let mut m = Vec::with_capacity(k);
    for &p in picked.iter().take(seeds) {
        let (class, members) = &classes[p];
        let size = if members.len() < clump {
            log::warn!(
                "class {class} has {} members; clump shrunk from {clump}",
                members.len()
            );
            members.len()
        } else {
            clump
        };
        let seed = members[rng.random_range(0..members.len())];
        let mut by_dist: Vec<(f64, usize)> = members
            .iter()
            .map(|&v| (sq_dist(ground.row(seed), ground.row(v)), v))
            .collect();
        by_dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        m.push(seed);
        m.extend(
            by_dist
                .iter()
                .map(|&(_, v)| v)
                .filter(|&v| v != seed)
                .take(size - 1),
        );
    }
    Ok((
        SampledSet::scoped(e, Provenance::Style2Het, scope.clone()),
        SampledSet::scoped(m, Provenance::Style2Hom, scope),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_blobs() -> GroundSet {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (c, off) in [0.0, 100.0].iter().enumerate() {
            for i in 0..10 {
                rows.push(vec![off + i as f64 * 0.01, off - i as f64 * 0.01]);
                labels.push(c);
            }
        }
        GroundSet::new(Matrix::from_rows(&rows).unwrap(), Some(labels)).unwrap()
    }

    #[test]
    fn style1_contract() {
        let g = two_blobs();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (e, m) = sample_style1(&g, 4, &mut rng).unwrap();
        assert_eq!((e.len(), m.len()), (4, 4));
        let labels = g.labels().unwrap();
        assert!(m.items.iter().all(|&v| labels[v] == labels[m.items[0]]));
        let again = sample_style1(&g, 4, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!((e, m), again);
    }

    #[test]
    fn style2_two_clusters() {
        let g = two_blobs();
        let labels = g.labels().unwrap();
        let mut hits = 0;
        for s in 0..40 {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let (e, m) = sample_style2(&g, 2, 2, 50, &mut rng).unwrap();
            assert!(m.len() <= 2);
            let scope = e.class_scope.clone().unwrap();
            if scope.len() == 2 {
                hits += 1;
                assert_ne!(labels[e.items[0]], labels[e.items[1]]);
            }
            let mut ml: Vec<usize> = m.items.iter().map(|&v| labels[v]).collect();
            ml.dedup();
            assert!(ml.len() <= scope.len());
        }
        assert!(hits > 0);
    }

    #[test]
    fn missing_labels() {
        let g = GroundSet::new(Matrix::zeros(3, 1), None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            sample_style1(&g, 2, &mut rng),
            Err(Error::MissingLabels(_))
        ));
    }
}
