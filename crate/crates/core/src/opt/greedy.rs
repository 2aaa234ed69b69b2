use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::setfn::{normalize_set, SetFunction};

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyTrace {
    /// Selected items in selection order.
    pub chain: Vec<usize>,
    /// `f` after each addition.
    pub values: Vec<f64>,
    /// Marginal gain of each addition.
    pub gains: Vec<f64>,
}

impl GreedyTrace {
    pub fn value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// First `k` items of the chain.
    pub fn prefix(&self, k: usize) -> &[usize] {
        &self.chain[..k.min(self.chain.len())]
    }

    pub fn values_nondecreasing(&self, tol: f64) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0] - tol)
    }

    pub fn gains_nonincreasing(&self, tol: f64) -> bool {
        self.gains.windows(2).all(|w| w[1] <= w[0] + tol)
    }
}

fn better(gain: f64, v: usize, best: Option<(f64, usize)>) -> bool {
    match best {
        None => true,
        Some((g, b)) => gain > g || (gain == g && v < b),
    }
}

fn checked_gain(g: f64) -> Result<f64> {
    if g.is_finite() {
        Ok(g)
    } else {
        Err(Error::NonFinite("marginal gain"))
    }
}

/// Greedy maximization of `f` over `pool` under a cardinality budget.
///
/// With `lazy` set, stale gains are kept in a priority queue and only the top
/// is re-evaluated; for submodular `f` this yields the same chain.
pub fn greedy_max(
    f: &dyn SetFunction,
    pool: &[usize],
    budget: usize,
    lazy: bool,
) -> Result<GreedyTrace> {
    let pool = normalize_set(pool);
    if pool.is_empty() {
        return Err(Error::Empty("greedy candidate pool"));
    }
    if let Some(&v) = pool.iter().find(|&&v| v >= f.n()) {
        return Err(Error::IndexOutOfRange { index: v, n: f.n() });
    }
    if budget > pool.len() {
        return Err(Error::InvalidArgument(format!(
            "budget {budget} exceeds pool size {}",
            pool.len()
        )));
    }
    if lazy {
        lazy_greedy(f, &pool, budget)
    } else {
        naive_greedy(f, &pool, budget)
    }
}

fn naive_greedy(f: &dyn SetFunction, pool: &[usize], budget: usize) -> Result<GreedyTrace> {
    let mut oracle = f.oracle();
    let mut taken = vec![false; pool.len()];
    let mut trace = GreedyTrace {
        chain: Vec::with_capacity(budget),
        values: Vec::with_capacity(budget),
        gains: Vec::with_capacity(budget),
    };
    for _ in 0..budget {
        let mut best: Option<(f64, usize)> = None;
        let mut best_pos = 0;
        for (p, &v) in pool.iter().enumerate() {
            if taken[p] {
                continue;
            }
            let g = checked_gain(oracle.gain(v))?;
            if better(g, v, best) {
                best = Some((g, v));
                best_pos = p;
            }
        }
        let (g, v) = best.expect("budget ≤ pool size");
        taken[best_pos] = true;
        oracle.insert(v);
        trace.chain.push(v);
        trace.gains.push(g);
        trace.values.push(oracle.value());
    }
    Ok(trace)
}

struct Entry {
    gain: f64,
    item: usize,
    round: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Max-heap: larger gain first, then smaller index.
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.item.cmp(&self.item))
    }
}

fn lazy_greedy(f: &dyn SetFunction, pool: &[usize], budget: usize) -> Result<GreedyTrace> {
    let mut oracle = f.oracle();
    let mut heap = BinaryHeap::with_capacity(pool.len());
    for &v in pool {
        heap.push(Entry {
            gain: checked_gain(oracle.gain(v))?,
            item: v,
            round: 0,
        });
    }
    let mut trace = GreedyTrace {
        chain: Vec::with_capacity(budget),
        values: Vec::with_capacity(budget),
        gains: Vec::with_capacity(budget),
    };
    let mut round = 0;
    while trace.chain.len() < budget {
        let top = heap.pop().expect("budget ≤ pool size");
        if top.round == round {
            oracle.insert(top.item);
            trace.chain.push(top.item);
            trace.gains.push(top.gain);
            trace.values.push(oracle.value());
            round += 1;
        } else {
            heap.push(Entry {
                gain: checked_gain(oracle.gain(top.item))?,
                item: top.item,
                round,
            });
        }
    }
    Ok(trace)
}
