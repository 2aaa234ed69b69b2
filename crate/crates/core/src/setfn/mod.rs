//! Set functions over a finite ground set `V = {0, .., n-1}`.

mod check;
mod groundset;
mod kernel;
mod matroid;

pub use check::{check_polymatroid_bruteforce, PolymatroidReport, Violation, MAX_BRUTEFORCE_N};
pub use groundset::GroundSet;
pub use kernel::{
    facility_location_eval, median_heuristic_gamma, rbf_similarity, FacilityLocation,
    SimilarityKernel,
};
pub use matroid::{weighted_matroid_rank, Matroid};

use crate::error::{Error, Result};

/// Sorted, de-duplicated copy of an index set. Every evaluator works on this
/// canonical form so results never depend on presentation order.
pub fn normalize_set(set: &[usize]) -> Vec<usize> {
    let mut s = set.to_vec();
    s.sort_unstable();
    s.dedup();
    s
}

/// A real-valued function of subsets of `{0, .., n-1}`.
pub trait SetFunction {
    fn n(&self) -> usize;

    /// `f(A)`. Callers are responsible for index validity; see [`checked_eval`].
    fn eval(&self, set: &[usize]) -> f64;

    /// `f(v | A) = f(A ∪ {v}) − f(A)`.
    fn gain(&self, v: usize, set: &[usize]) -> f64 {
        if set.contains(&v) {
            return 0.0;
        }
        let mut with = set.to_vec();
        with.push(v);
        self.eval(&with) - self.eval(set)
    }

    /// Incremental marginal-gain state rooted at the empty set.
    fn oracle(&self) -> Box<dyn GainOracle + '_> {
        Box::new(GenericOracle {
            f: self,
            members: Vec::new(),
            value: self.eval(&[]),
        })
    }
}

/// A partial solution `S` together with the gain query `v ↦ f(v | S)`.
pub trait GainOracle {
    fn gain(&self, v: usize) -> f64;
    fn insert(&mut self, v: usize);
    /// `f(S)`
    fn value(&self) -> f64;
    /// Items of `S` in insertion order.
    fn members(&self) -> &[usize];
}

struct GenericOracle<'a, F: ?Sized> {
    f: &'a F,
    members: Vec<usize>,
    value: f64,
}

impl<F: SetFunction + ?Sized> GainOracle for GenericOracle<'_, F> {
    fn gain(&self, v: usize) -> f64 {
        if self.members.contains(&v) {
            return 0.0;
        }
        let mut with = self.members.clone();
        with.push(v);
        self.f.eval(&with) - self.value
    }

    fn insert(&mut self, v: usize) {
        if self.members.contains(&v) {
            return;
        }
        self.members.push(v);
        self.value = self.f.eval(&self.members);
    }

    fn value(&self) -> f64 {
        self.value
    }

    fn members(&self) -> &[usize] {
        &self.members
    }
}

impl<T: SetFunction + ?Sized> SetFunction for &T {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn eval(&self, set: &[usize]) -> f64 {
        (**self).eval(set)
    }
    fn gain(&self, v: usize, set: &[usize]) -> f64 {
        (**self).gain(v, set)
    }
    fn oracle(&self) -> Box<dyn GainOracle + '_> {
        (**self).oracle()
    }
}

/// `m(A) = Σ_{a∈A} m_a`.
#[derive(Debug, Clone)]
pub struct Modular {
    pub weights: Vec<f64>,
}

impl Modular {
    pub fn new(weights: Vec<f64>) -> Self {
        Modular { weights }
    }
}

impl SetFunction for Modular {
    fn n(&self) -> usize {
        self.weights.len()
    }

    fn eval(&self, set: &[usize]) -> f64 {
        normalize_set(set).iter().map(|&v| self.weights[v]).sum()
    }

    fn gain(&self, v: usize, set: &[usize]) -> f64 {
        if set.contains(&v) {
            0.0
        } else {
            self.weights[v]
        }
    }
}

/// `c · f(A)` for a constant `c > 0`.
pub struct Scaled<F> {
    inner: F,
    scale: f64,
}

impl<F: SetFunction> Scaled<F> {
    pub fn new(inner: F, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "scale must be > 0, got {scale}"
            )));
        }
        Ok(Scaled { inner, scale })
    }

    /// `f(A) / |V|`
    pub fn per_item(inner: F) -> Self {
        let scale = 1.0 / inner.n().max(1) as f64;
        Scaled { inner, scale }
    }

    pub fn inner(&self) -> &F {
        &self.inner
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

struct ScaledOracle<'a> {
    inner: Box<dyn GainOracle + 'a>,
    scale: f64,
}

impl GainOracle for ScaledOracle<'_> {
    fn gain(&self, v: usize) -> f64 {
        self.scale * self.inner.gain(v)
    }
    fn insert(&mut self, v: usize) {
        self.inner.insert(v)
    }
    fn value(&self) -> f64 {
        self.scale * self.inner.value()
    }
    fn members(&self) -> &[usize] {
        self.inner.members()
    }
}

impl<F: SetFunction> SetFunction for Scaled<F> {
    fn n(&self) -> usize {
        self.inner.n()
    }
    fn eval(&self, set: &[usize]) -> f64 {
        self.scale * self.inner.eval(set)
    }
    fn gain(&self, v: usize, set: &[usize]) -> f64 {
        self.scale * self.inner.gain(v, set)
    }
    fn oracle(&self) -> Box<dyn GainOracle + '_> {
        Box::new(ScaledOracle {
            inner: self.inner.oracle(),
            scale: self.scale,
        })
    }
}

/// Adapter turning a closure into a [`SetFunction`].
pub struct FnSetFunction<F> {
    n: usize,
    f: F,
}

impl<F: Fn(&[usize]) -> f64> FnSetFunction<F> {
    pub fn new(n: usize, f: F) -> Self {
        FnSetFunction { n, f }
    }
}

impl<F: Fn(&[usize]) -> f64> SetFunction for FnSetFunction<F> {
    fn n(&self) -> usize {
        self.n
    }
    fn eval(&self, set: &[usize]) -> f64 {
        (self.f)(&normalize_set(set))
    }
}

fn check_indices(f: &dyn SetFunction, set: &[usize]) -> Result<()> {
    let n = f.n();
    match set.iter().find(|&&v| v >= n) {
        Some(&index) => Err(Error::IndexOutOfRange { index, n }),
        None => Ok(()),
    }
}

/// `f(A)` with index validation.
pub fn checked_eval(f: &dyn SetFunction, set: &[usize]) -> Result<f64> {
    check_indices(f, set)?;
    Ok(f.eval(set))
}

/// `f(v | A) = f(A ∪ {v}) − f(A)`; zero when `v ∈ A`.
pub fn conditional_gain(f: &dyn SetFunction, v: usize, set: &[usize]) -> Result<f64> {
    check_indices(f, set)?;
    check_indices(f, &[v])?;
    Ok(f.gain(v, set))
}

/// Graded pairwise comparison: `σ(E, M) = f_t(E) − f_t(M)`.
pub fn oracle_score(target: &dyn SetFunction, e: &[usize], m: &[usize]) -> Result<f64> {
    check_indices(target, e)?;
    check_indices(target, m)?;
    Ok(target.eval(e) - target.eval(m))
}
