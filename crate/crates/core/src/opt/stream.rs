use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::setfn::{GainOracle, SetFunction};

pub const DEFAULT_STREAM_EPSILON: f64 = 0.1;

/// Single-pass sieve over a stream.
///
/// Thresholds `(1+ε)^i` are kept in `[m, 2·budget·m]`, where `m` is the
/// largest singleton value seen so far; each threshold owns a partial
/// solution. An item joins the partial solution `S` of threshold `τ` when
/// `f(v|S) ≥ (τ/2 − f(S)) / (budget − |S|)`.
pub struct StreamState<'a> {
    f: &'a dyn SetFunction,
    budget: usize,
    log_base: f64,
    max_singleton: f64,
    buffers: BTreeMap<i64, Box<dyn GainOracle + 'a>>,
    items_seen: usize,
}

impl<'a> StreamState<'a> {
    pub fn new(f: &'a dyn SetFunction, budget: usize, epsilon: f64) -> Result<Self> {
        if budget == 0 {
            return Err(Error::InvalidArgument(
                "streaming budget must be ≥ 1".into(),
            ));
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "sieve epsilon must be > 0, got {epsilon}"
            )));
        }
        Ok(StreamState {
            f,
            budget,
            log_base: (1.0 + epsilon).ln(),
            max_singleton: 0.0,
            buffers: BTreeMap::new(),
            items_seen: 0,
        })
    }

    pub fn items_seen(&self) -> usize {
        self.items_seen
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    /// Active threshold values, ascending.
    pub fn thresholds(&self) -> Vec<f64> {
        self.buffers
            .keys()
            .map(|&i| (i as f64 * self.log_base).exp())
            .collect()
    }

    fn threshold(&self, i: i64) -> f64 {
        (i as f64 * self.log_base).exp()
    }

    pub fn push(&mut self, v: usize) -> Result<()> {
        if v >= self.f.n() {
            return Err(Error::IndexOutOfRange {
                index: v,
                n: self.f.n(),
            });
        }
        self.items_seen += 1;
        let single = self.f.eval(&[v]);
        if !single.is_finite() {
            return Err(Error::NonFinite("singleton value"));
        }
        if single > self.max_singleton {
            self.max_singleton = single;
            let m = self.max_singleton;
            let lo = (m.ln() / self.log_base).ceil() as i64;
            let hi = ((2.0 * self.budget as f64 * m).ln() / self.log_base).floor() as i64;
            self.buffers.retain(|&i, _| i >= lo);
            for i in lo..=hi {
                if !self.buffers.contains_key(&i) {
                    self.buffers.insert(i, self.f.oracle());
                }
            }
        }
        let k = self.budget as f64;
        let keys: Vec<i64> = self.buffers.keys().copied().collect();
        for i in keys {
            let tau = self.threshold(i);
            let buf = self.buffers.get_mut(&i).expect("key listed above");
            let size = buf.members().len();
            if size >= self.budget {
                continue;
            }
            let need = (tau / 2.0 - buf.value()) / (k - size as f64);
            let g = buf.gain(v);
            if g >= need && g > 0.0 {
                buf.insert(v);
            }
        }
        Ok(())
    }

    /// Best partial solution (ties to the lowest threshold).
    pub fn best(&self) -> Vec<usize> {
        let mut best: Option<(&Box<dyn GainOracle + 'a>, f64)> = None;
        for buf in self.buffers.values() {
            let v = buf.value();
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((buf, v));
            }
        }
        best.map(|(b, _)| b.members().to_vec()).unwrap_or_default()
    }
}

/// One pass over `stream`; returns at most `budget` items.
///
/// When the budget covers the whole stream every item with positive gain is
/// kept.
pub fn streaming_max(
    f: &dyn SetFunction,
    stream: &[usize],
    budget: usize,
    epsilon: f64,
) -> Result<(Vec<usize>, usize)> {
    if stream.is_empty() {
        return Err(Error::Empty("stream"));
    }
    if budget >= stream.len() {
        let mut oracle = f.oracle();
        let mut seen = 0;
        for &v in stream {
            if v >= f.n() {
                return Err(Error::IndexOutOfRange { index: v, n: f.n() });
            }
            seen += 1;
            if oracle.gain(v) > 0.0 {
                oracle.insert(v);
            }
        }
        return Ok((oracle.members().to_vec(), seen));
    }
    let mut state = StreamState::new(f, budget, epsilon)?;
    for &v in stream {
        state.push(v)?;
    }
    Ok((state.best(), state.items_seen()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::opt::greedy_max;
    use crate::setfn::{FacilityLocation, Modular, SimilarityKernel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn budget_covers_stream() {
        let f = Modular::new(vec![1.0, 0.0, 2.0, 3.0]);
        let (s, seen) = streaming_max(&f, &[0, 1, 2, 3], 4, 0.1).unwrap();
        assert_eq!(s, vec![0, 2, 3]);
        assert_eq!(seen, 4);
    }

    #[test]
    fn dominant_singleton_first_is_kept() {
        let mut w = vec![1000.0];
        w.extend((1..50).map(|i| 1.0 + i as f64 * 0.01));
        let f = Modular::new(w);
        let stream: Vec<usize> = (0..50).collect();
        let (s, seen) = streaming_max(&f, &stream, 5, 0.1).unwrap();
        assert!(s.contains(&0));
        assert!(s.len() <= 5);
        assert_eq!(seen, 50);
    }

    #[test]
    fn half_of_greedy_on_clustered_fl() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200;
        let mut pts = Vec::new();
        for c in 0..5 {
            for _ in 0..n / 5 {
                pts.push([
                    c as f64 * 3.0 + rng.random::<f64>() * 0.5,
                    rng.random::<f64>() * 0.5,
                ]);
            }
        }
        let m = Matrix::from_fn(n, n, |i, j| {
            let d = (pts[i][0] - pts[j][0]).powi(2) + (pts[i][1] - pts[j][1]).powi(2);
            (-d).exp()
        });
        let f = FacilityLocation::new(SimilarityKernel::from_matrix(m).unwrap());
        let stream: Vec<usize> = (0..n).collect();
        for b in [3, 5, 10] {
            let (s, seen) = streaming_max(&f, &stream, b, 0.1).unwrap();
            assert_eq!(seen, n);
            assert!(s.len() <= b);
            let g = greedy_max(&f, &stream, b, true).unwrap();
            assert!(f.eval(&s) >= 0.5 * g.value());
        }
    }

    #[test]
    fn rejects_bad_input() {
        let f = Modular::new(vec![1.0]);
        assert!(streaming_max(&f, &[], 1, 0.1).is_err());
        assert!(StreamState::new(&f, 0, 0.1).is_err());
        assert!(StreamState::new(&f, 1, 0.0).is_err());
    }
}
