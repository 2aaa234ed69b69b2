use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::probe::{linear_probe, ProbeSettings};
use super::report::{mean_std, ProbeReport, ProbeRow, ReportMeta};
use crate::error::{Error, Result};
use crate::model::{DspnModel, DspnObjective};
use crate::opt::{greedy_max, k_centers, random_subset, reservoir_sample, streaming_max};
use crate::setfn::{median_heuristic_gamma, FacilityLocation, GroundSet};

#[derive(Debug, Clone)]
pub struct Zipf {
    pub ground: GroundSet,
    /// Source row of every row of `ground` (identity for the originals).
    pub origin: Vec<usize>,
    /// Duplicates added per class label.
    pub added: Vec<usize>,
    /// Popularity rank (1-based) per class label; 0 for absent labels.
    pub rank: Vec<usize>,
}

/// Append exact copies so that the class at popularity rank `r` receives
/// `round(base · r^{−s})` duplicates, spread round-robin over its members.
/// Ranks are a random permutation of the classes.
pub fn zipf_duplicate<R: Rng + ?Sized>(
    ground: &GroundSet,
    s: f64,
    base: usize,
    rng: &mut R,
) -> Result<Zipf> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Zipf exponent must be > 0, got {s}"
        )));
    }
    let members = ground.class_members()?;
    let mut present: Vec<usize> = (0..members.len())
        .filter(|&c| !members[c].is_empty())
        .collect();
    present.shuffle(rng);
    let mut rank = vec![0; members.len()];
    let mut added = vec![0; members.len()];
    for (r, &c) in present.iter().enumerate() {
        rank[c] = r + 1;
        added[c] = (base as f64 * ((r + 1) as f64).powf(-s)).round() as usize;
    }
    let mut out = ground.clone();
    let mut origin: Vec<usize> = (0..ground.n()).collect();
    let labels = ground.require_labels("Zipf duplication")?;
    for c in 0..members.len() {
        for j in 0..added[c] {
            let src = members[c][j % members[c].len()];
            let row = ground.row(src).to_vec();
            out.push(&row, Some(labels[src]), ground.ids()[src])?;
            origin.push(src);
        }
    }
    Ok(Zipf {
        ground: out,
        origin,
        added,
        rank,
    })
}

/// First index of every distinct (bitwise-equal) embedding row.
pub fn dedup_exact(ground: &GroundSet) -> Vec<usize> {
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut keep = Vec::new();
    for i in 0..ground.n() {
        let key: Vec<u64> = ground.row(i).iter().map(|x| x.to_bits()).collect();
        if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(key) {
            e.insert(i);
            keep.push(i);
        }
    }
    keep
}

/// Indices ordered by class label (contiguous classes), then by index.
pub fn class_incremental_order(ground: &GroundSet) -> Result<Vec<usize>> {
    let labels = ground.require_labels("class-incremental stream")?;
    let mut order: Vec<usize> = (0..ground.n()).collect();
    order.sort_by_key(|&i| (labels[i], i));
    Ok(order)
}

/// Everything the design evaluations need besides the model.
#[derive(Debug, Clone)]
pub struct DesignSetup {
    /// Labelled (typically imbalanced) selection pool; labels are only read
    /// after selection, to train the probe.
    pub pool: GroundSet,
    pub test: GroundSet,
    pub budgets: Vec<usize>,
    pub random_trials: usize,
    /// Target RBF bandwidth; `None` uses the median heuristic.
    pub gamma: Option<f64>,
    pub stream_epsilon: f64,
    pub probe: ProbeSettings,
    pub meta: ReportMeta,
}

impl DesignSetup {
    fn check(&self) -> Result<usize> {
        self.pool.require_labels("design pool")?;
        self.test.require_labels("design test set")?;
        let max_b = self
            .budgets
            .iter()
            .copied()
            .max()
            .ok_or(Error::Empty("budgets"))?;
        if max_b > self.pool.n() || self.budgets.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "budgets must lie in 1..={}",
                self.pool.n()
            )));
        }
        Ok(max_b)
    }

    fn gamma_for(&self, g: &GroundSet) -> Result<f64> {
        match self.gamma {
            Some(x) => Ok(x),
            None => median_heuristic_gamma(g.embeddings()),
        }
    }

    fn probe(&self, sel: &[usize]) -> Result<f64> {
        if sel.is_empty() {
            return Err(Error::Empty("selection"));
        }
        linear_probe(&self.pool.subset(sel)?, &self.test, &self.probe)
    }

    fn row(&self, budget: usize, method: &str, sels: &[Vec<usize>]) -> Result<ProbeRow> {
        let accs = sels
            .iter()
            .map(|s| self.probe(s))
            .collect::<Result<Vec<_>>>()?;
        let (accuracy, std) = mean_std(&accs);
        Ok(ProbeRow {
            budget,
            method: method.into(),
            accuracy,
            std,
            trials: sels.len(),
            selected: sels.iter().map(|s| s.len() as f64).sum::<f64>() / sels.len() as f64,
        })
    }
}

/// Offline design: DSPN greedy, target FL greedy after exact dedup,
/// k-centers and random, each followed by the linear probe.
pub fn offline_design_eval<R: Rng + ?Sized>(
    model: &DspnModel,
    setup: &DesignSetup,
    rng: &mut R,
) -> Result<ProbeReport> {
    let max_b = setup.check()?;
    let pool = &setup.pool;
    let all: Vec<usize> = (0..pool.n()).collect();
    let dspn = greedy_max(&DspnObjective::new(model, pool)?, &all, max_b, true)?.chain;

    let keep = dedup_exact(pool);
    let dedup = pool.subset(&keep)?;
    if max_b > dedup.n() {
        return Err(Error::InvalidArgument(format!(
            "budget {max_b} exceeds the {} distinct rows",
            dedup.n()
        )));
    }
    let fl = FacilityLocation::rbf(&dedup, setup.gamma_for(&dedup)?)?;
    let dedup_all: Vec<usize> = (0..dedup.n()).collect();
    let target: Vec<usize> = greedy_max(&fl, &dedup_all, max_b, true)?
        .chain
        .into_iter()
        .map(|i| keep[i])
        .collect();

    let mut rows = Vec::new();
    for &b in &setup.budgets {
        rows.push(setup.row(b, "dspn-greedy", &[dspn[..b].to_vec()])?);
        rows.push(setup.row(b, "target-fl-dedup", &[target[..b].to_vec()])?);
        let kc = (0..setup.random_trials)
            .map(|_| k_centers(pool.embeddings(), b, rng))
            .collect::<Result<Vec<_>>>()?;
        rows.push(setup.row(b, "k-centers", &kc)?);
        let rnd = (0..setup.random_trials)
            .map(|_| random_subset(&all, b, rng))
            .collect::<Result<Vec<_>>>()?;
        rows.push(setup.row(b, "random", &rnd)?);
    }
    Ok(ProbeReport {
        meta: setup.meta.clone(),
        setting: "offline".into(),
        rows,
    })
}

/// Online design over a class-incremental stream: DSPN sieve streaming and
/// reservoir sampling, against DSPN and target FL offline greedy.
pub fn online_design_eval<R: Rng + ?Sized>(
    model: &DspnModel,
    setup: &DesignSetup,
    rng: &mut R,
) -> Result<ProbeReport> {
    let max_b = setup.check()?;
    let pool = &setup.pool;
    let stream = class_incremental_order(pool)?;
    let obj = DspnObjective::new(model, pool)?;
    let all: Vec<usize> = (0..pool.n()).collect();
    let offline = greedy_max(&obj, &all, max_b, true)?.chain;
    let fl = FacilityLocation::rbf(pool, setup.gamma_for(pool)?)?;
    let target = greedy_max(&fl, &all, max_b, true)?.chain;

    let mut rows = Vec::new();
    for &b in &setup.budgets {
        let (online, seen) = streaming_max(&obj, &stream, b, setup.stream_epsilon)?;
        debug_assert_eq!(seen, stream.len());
        rows.push(setup.row(b, "dspn-online", &[online])?);
        let res = (0..setup.random_trials)
            .map(|_| reservoir_sample(&stream, b, rng))
            .collect::<Result<Vec<_>>>()?;
        rows.push(setup.row(b, "reservoir", &res)?);
        rows.push(setup.row(b, "dspn-offline", &[offline[..b].to_vec()])?);
        rows.push(setup.row(b, "target-fl-offline", &[target[..b].to_vec()])?);
    }
    Ok(ProbeReport {
        meta: setup.meta.clone(),
        setting: "online".into(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn five_classes() -> GroundSet {
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![(i % 5) as f64 * 3.0, (i / 5) as f64 * 0.1])
            .collect();
        let labels = (0..50).map(|i| i % 5).collect();
        GroundSet::new(Matrix::from_rows(&rows).unwrap(), Some(labels)).unwrap()
    }

    #[test]
    fn zipf_counts_follow_formula() {
        let g = five_classes();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z = zipf_duplicate(&g, 1.0, 100, &mut rng).unwrap();
        for c in 0..5 {
            let expect = (100.0 / z.rank[c] as f64).round() as usize;
            assert_eq!(z.added[c], expect);
        }
        let mut sorted = z.added.clone();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(sorted, vec![100, 50, 33, 25, 20]);
        assert_eq!(z.ground.n(), 50 + 228);
        for i in 50..z.ground.n() {
            let src = z.origin[i];
            let a: Vec<u64> = z.ground.row(i).iter().map(|x| x.to_bits()).collect();
            let b: Vec<u64> = g.row(src).iter().map(|x| x.to_bits()).collect();
            assert_eq!(a, b);
        }
        assert_eq!(dedup_exact(&z.ground), (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn flat_zipf_is_near_uniform() {
        let g = five_classes();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let z = zipf_duplicate(&g, 1e-6, 100, &mut rng).unwrap();
        assert!(z.added.iter().all(|&a| a == 100));
        assert!(zipf_duplicate(&g, 0.0, 100, &mut rng).is_err());
    }

    #[test]
    fn stream_groups_classes() {
        let g = five_classes();
        let order = class_incremental_order(&g).unwrap();
        let l = g.labels().unwrap();
        assert!(order.windows(2).all(|w| l[w[0]] <= l[w[1]]));
    }
}
