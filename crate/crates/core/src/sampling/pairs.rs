use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{Provenance, SampledSet, SamplerConfig};
use crate::error::{Error, Result};
use crate::io_util::write_atomic;
use crate::loss::PairSets;
use crate::setfn::{oracle_score, GroundSet, SetFunction};

#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub e: SampledSet,
    pub m: SampledSet,
    /// Element-paired augmented copy of `E` (indices into the pool).
    pub e_aug: Vec<usize>,
    pub m_aug: Vec<usize>,
    /// Cached `f_t(E) − f_t(M)`.
    pub delta: f64,
}

impl Pair {
    pub fn sets(&self) -> PairSets<'_> {
        PairSets {
            e: &self.e.items,
            m: &self.m.items,
            e_aug: &self.e_aug,
            m_aug: &self.m_aug,
        }
    }

    /// The same pair with the roles of `E` and `M` exchanged.
    pub fn swapped(&self) -> Pair {
        Pair {
            e: self.m.clone(),
            m: self.e.clone(),
            e_aug: self.m_aug.clone(),
            m_aug: self.e_aug.clone(),
            delta: -self.delta,
        }
    }
}

/// Pairs over a pool whose first `base_n` rows are the training ground set
/// and whose remaining rows are augmented copies.
#[derive(Debug, Clone)]
pub struct PairDataset {
    pub pool: GroundSet,
    pub base_n: usize,
    pub pairs: Vec<Pair>,
    pub seed: u64,
    pub config_hash: String,
}

impl PairDataset {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Jittered copies `x′ = x + N(0, σ²I)` appended to `pool`; returns their
/// indices, position-paired with `set`. With `σ = 0` the copies are the
/// original items themselves.
pub fn augment<R: Rng + ?Sized>(
    pool: &mut GroundSet,
    set: &[usize],
    sigma: f64,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise sigma must be ≥ 0, got {sigma}"
        )));
    }
    for &v in set {
        pool.check_index(v)?;
    }
    if sigma == 0.0 {
        return Ok(set.to_vec());
    }
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut out = Vec::with_capacity(set.len());
    for &v in set {
        let row: Vec<f64> = pool.row(v).iter().map(|&x| x + noise.sample(rng)).collect();
        let label = pool.labels().map(|l| l[v]);
        let id = pool.ids()[v];
        out.push(pool.push(&row, label, id)?);
    }
    Ok(out)
}

/// Pair sets along the configured edges, caching the oracle score of each
/// pair. Edges whose product exceeds `max_pairs_per_edge` are subsampled.
pub fn build_pairs<R: Rng + ?Sized>(
    ground: &GroundSet,
    sets: &[SampledSet],
    target: &dyn SetFunction,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<PairDataset> {
    if sets.is_empty() {
        return Err(Error::Empty("set sources for pairing"));
    }
    if target.n() != ground.n() {
        return Err(Error::DimensionMismatch {
            expected: ground.n(),
            actual: target.n(),
            context: "target ground-set size",
        });
    }
    let mut by_kind: BTreeMap<Provenance, Vec<&SampledSet>> = BTreeMap::new();
    for s in sets {
        if s.len() > cfg.k_max {
            return Err(Error::InvalidArgument(format!(
                "{} set of size {} exceeds k-max {}",
                s.provenance,
                s.len(),
                cfg.k_max
            )));
        }
        by_kind.entry(s.provenance).or_default().push(s);
    }
    let mut pool = ground.clone();
    let mut pairs = Vec::new();
    for &(ek, mk) in &cfg.edges {
        let (Some(es), Some(ms)) = (by_kind.get(&ek), by_kind.get(&mk)) else {
            continue;
        };
        // A self-edge never pairs a set with itself.
        let grid: Vec<(usize, usize)> = (0..es.len())
            .flat_map(|i| (0..ms.len()).map(move |j| (i, j)))
            .filter(|&(i, j)| {
                ek != mk || (i != j && (!cfg.same_size_self_pairs || es[i].len() == ms[j].len()))
            })
            .collect();
        let chosen: Vec<usize> = if grid.len() > cfg.max_pairs_per_edge {
            let mut c = index::sample(rng, grid.len(), cfg.max_pairs_per_edge).into_vec();
            c.sort_unstable();
            c
        } else {
            (0..grid.len()).collect()
        };
        for c in chosen {
            let (i, j) = grid[c];
            let e = es[i];
            let m = ms[j];
            let delta = oracle_score(target, &e.items, &m.items)?;
            if !delta.is_finite() {
                return Err(Error::NonFinite("oracle score"));
            }
            let e_aug = augment(&mut pool, &e.items, cfg.noise_sigma, rng)?;
            let m_aug = augment(&mut pool, &m.items, cfg.noise_sigma, rng)?;
            pairs.push(Pair {
                e: e.clone(),
                m: m.clone(),
                e_aug,
                m_aug,
                delta,
            });
        }
    }
    Ok(PairDataset {
        pool,
        base_n: ground.n(),
        pairs,
        seed: 0,
        config_hash: String::new(),
    })
}

fn join(items: &[usize]) -> String {
    items
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn split_indices(s: &str) -> std::result::Result<Vec<usize>, String> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            t.parse::<usize>()
                .map_err(|e| format!("bad index '{t}': {e}"))
        })
        .collect()
}

fn scope_text(s: &Option<Vec<usize>>) -> String {
    match s {
        Some(c) => join(c),
        None => "-".into(),
    }
}

fn parse_scope(s: &str) -> std::result::Result<Option<Vec<usize>>, String> {
    if s == "-" {
        Ok(None)
    } else {
        split_indices(s).map(Some)
    }
}

/// Line-oriented text form: a two-line header, then one pair per line as
/// `E|M|E'|M'|delta|e-kind,m-kind|e-scope;m-scope`.
pub fn save_pairs(path: &Path, data: &PairDataset) -> Result<()> {
    let mut out = String::new();
    out.push_str("# dspn-pairs v1\n");
    writeln!(
        out,
        "# seed={} config_hash={} base_n={} pool_n={} pairs={}",
        data.seed,
        data.config_hash,
        data.base_n,
        data.pool.n(),
        data.pairs.len()
    )
    .expect("writing to a String");
    for p in &data.pairs {
        writeln!(
            out,
            "{}|{}|{}|{}|{:?}|{},{}|{};{}",
            join(&p.e.items),
            join(&p.m.items),
            join(&p.e_aug),
            join(&p.m_aug),
            p.delta,
            p.e.provenance,
            p.m.provenance,
            scope_text(&p.e.class_scope),
            scope_text(&p.m.class_scope)
        )
        .expect("writing to a String");
    }
    write_atomic(path, out.as_bytes())
}

fn header_field<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
}

/// Inverse of [`save_pairs`]; `pool` must be the pool the pairs index into.
pub fn load_pairs(path: &Path, pool: GroundSet) -> Result<PairDataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: usize, msg: String| Error::format(path, format!("line {line}: {msg}"));
    let mut lines = text.lines();
    if lines.next() != Some("# dspn-pairs v1") {
        return Err(bad(1, "missing '# dspn-pairs v1' header".into()));
    }
    let meta = lines
        .next()
        .ok_or_else(|| bad(2, "missing metadata line".into()))?;
    let num = |key: &str| -> Result<u64> {
        header_field(meta, key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(2, format!("missing or invalid '{key}'")))
    };
    let seed = num("seed")?;
    let base_n = num("base_n")? as usize;
    let pool_n = num("pool_n")? as usize;
    let count = num("pairs")? as usize;
    let config_hash = header_field(meta, "config_hash").unwrap_or("").to_string();
    if pool_n != pool.n() {
        return Err(bad(
            2,
            format!("pool has {} rows, file expects {pool_n}", pool.n()),
        ));
    }
    let mut pairs = Vec::with_capacity(count);
    for (i, line) in lines.enumerate() {
        let ln = i + 3;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('|').collect();
        if f.len() != 7 {
            return Err(bad(ln, format!("expected 7 fields, found {}", f.len())));
        }
        let idx = |s: &str| -> Result<Vec<usize>> {
            let v = split_indices(s).map_err(|m| bad(ln, m))?;
            for &x in &v {
                pool.check_index(x)?;
            }
            Ok(v)
        };
        let (e, m, e_aug, m_aug) = (idx(f[0])?, idx(f[1])?, idx(f[2])?, idx(f[3])?);
        if e.len() != e_aug.len() || m.len() != m_aug.len() {
            return Err(bad(ln, "augmented copies must pair element-wise".into()));
        }
        let delta: f64 = f[4]
            .parse()
            .map_err(|e| bad(ln, format!("bad delta: {e}")))?;
        if !delta.is_finite() {
            return Err(bad(ln, "delta must be finite".into()));
        }
        let (ek, mk) = f[5]
            .split_once(',')
            .ok_or_else(|| bad(ln, "provenance must be 'e-kind,m-kind'".into()))?;
        let (es, ms) = f[6]
            .split_once(';')
            .ok_or_else(|| bad(ln, "class scope must be 'e;m'".into()))?;
        pairs.push(Pair {
            e: SampledSet {
                items: e,
                provenance: Provenance::parse(ek)?,
                class_scope: parse_scope(es).map_err(|m| bad(ln, m))?,
            },
            m: SampledSet {
                items: m,
                provenance: Provenance::parse(mk)?,
                class_scope: parse_scope(ms).map_err(|m| bad(ln, m))?,
            },
            e_aug,
            m_aug,
            delta,
        });
    }
    if pairs.len() != count {
        return Err(bad(
            2,
            format!("header says {count} pairs, found {}", pairs.len()),
        ));
    }
    Ok(PairDataset {
        pool,
        base_n,
        pairs,
        seed,
        config_hash,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::sampling::sample_style1;
    use crate::setfn::FacilityLocation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn blobs(n: usize) -> GroundSet {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![(i % 3) as f64 * 4.0, (i / 3) as f64 * 0.1])
            .collect();
        let labels = (0..n).map(|i| i % 3).collect();
        GroundSet::new(Matrix::from_rows(&rows).unwrap(), Some(labels)).unwrap()
    }

    fn style1_sets(g: &GroundSet, rng: &mut ChaCha8Rng) -> Vec<SampledSet> {
        let mut sets = Vec::new();
        for _ in 0..3 {
            let (e, m) = sample_style1(g, 3, rng).unwrap();
            sets.push(e);
            sets.push(m);
        }
        sets
    }

    #[test]
    fn style1_only_edges_and_cache() {
        let g = blobs(30);
        let fl = FacilityLocation::rbf(&g, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sets = style1_sets(&g, &mut rng);
        let cfg = SamplerConfig::default();
        let d = build_pairs(&g, &sets, &fl, &cfg, &mut rng).unwrap();
        assert_eq!(d.pairs.len(), 9);
        for p in &d.pairs {
            assert_eq!(p.e.provenance, Provenance::Style1Het);
            assert_eq!(p.m.provenance, Provenance::Style1Hom);
            assert_eq!(p.delta, oracle_score(&fl, &p.e.items, &p.m.items).unwrap());
            assert_eq!(p.swapped().delta, -p.delta);
            assert_eq!(p.e_aug.len(), p.e.len());
            assert!(p.e_aug.iter().all(|&v| v >= g.n()));
        }
        let capped = SamplerConfig {
            max_pairs_per_edge: 4,
            ..cfg
        };
        assert_eq!(
            build_pairs(&g, &sets, &fl, &capped, &mut rng)
                .unwrap()
                .pairs
                .len(),
            4
        );
    }

    #[test]
    fn self_edge_skips_diagonal_and_sizes() {
        let g = blobs(30);
        let fl = FacilityLocation::rbf(&g, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sets: Vec<SampledSet> = [vec![0, 1], vec![2, 3], vec![4, 5, 6], vec![7, 8, 9]]
            .into_iter()
            .map(|v| SampledSet::new(v, Provenance::Style1Het))
            .collect();
        let mut cfg = SamplerConfig {
            edges: vec![(Provenance::Style1Het, Provenance::Style1Het)],
            ..SamplerConfig::default()
        };
        let d = build_pairs(&g, &sets, &fl, &cfg, &mut rng).unwrap();
        assert_eq!(d.pairs.len(), 12);
        assert!(d.pairs.iter().all(|p| p.e.items != p.m.items));
        cfg.same_size_self_pairs = true;
        let d = build_pairs(&g, &sets, &fl, &cfg, &mut rng).unwrap();
        assert_eq!(d.pairs.len(), 4);
        assert!(d.pairs.iter().all(|p| p.e.len() == p.m.len()));
    }

    #[test]
    fn augment_identity_and_pairing() {
        let mut g = blobs(9);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(augment(&mut g, &[4, 2], 0.0, &mut rng).unwrap(), vec![4, 2]);
        assert_eq!(g.n(), 9);
        let a = augment(&mut g, &[4, 2], 0.1, &mut rng).unwrap();
        assert_eq!(a, vec![9, 10]);
        assert_eq!(g.labels().unwrap()[9], g.labels().unwrap()[4]);
        assert!(augment(&mut g, &[0], -1.0, &mut rng).is_err());
    }

    #[test]
    fn jitter_norm_concentrates() {
        let d = 400;
        let mut g = GroundSet::new(Matrix::zeros(1, d), None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = augment(&mut g, &[0], 0.05, &mut rng).unwrap();
        let norm: f64 = g.row(a[0]).iter().map(|x| x * x).sum::<f64>().sqrt();
        let expect = 0.05 * (d as f64).sqrt();
        assert!((norm - expect).abs() < 0.1 * expect);
    }

    #[test]
    fn text_round_trip() {
        let g = blobs(30);
        let fl = FacilityLocation::rbf(&g, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sets = style1_sets(&g, &mut rng);
        let mut d = build_pairs(&g, &sets, &fl, &SamplerConfig::default(), &mut rng).unwrap();
        d.seed = 4;
        d.config_hash = "abc123".into();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.txt");
        save_pairs(&path, &d).unwrap();
        let back = load_pairs(&path, d.pool.clone()).unwrap();
        assert_eq!(back.pairs, d.pairs);
        assert_eq!((back.seed, back.base_n), (4, 30));
        assert_eq!(back.config_hash, "abc123");
        assert!(load_pairs(&path, g).is_err());
    }
}
