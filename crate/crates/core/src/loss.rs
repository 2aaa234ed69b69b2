//! Peripteral loss family, augmentation/redundancy regularizers, total loss
//! and empirical risk, plus the regression and margin baselines.
//!
//! Throughout, `Δ` is the oracle's graded comparison `f_t(E) − f_t(M)` and
//! `δ = f_w(E) − f_w(M)` is the learner's.

use crate::error::{Error, Result};
use crate::model::{logistic, softplus, DspnGradients, DspnModel, Evaluator};
use crate::sampling::PairDataset;
use crate::setfn::{normalize_set, GroundSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeripteralHyper {
    /// Gate rate, `≥ 0`.
    pub alpha: f64,
    /// Anti-smoothness, `> 0`.
    pub beta: f64,
    /// Margin.
    pub tau: f64,
    /// Oracle-to-learner unit scale, `> 0`.
    pub kappa: f64,
    /// Denominator guard, `≥ 0`.
    pub epsilon: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda4: f64,
}

impl Default for PeripteralHyper {
    fn default() -> Self {
        PeripteralHyper {
            alpha: 1e-5,
            beta: 0.5,
            tau: 10.0,
            kappa: 1.0,
            epsilon: 1e-15,
            lambda1: 0.25,
            lambda2: 0.01,
            lambda3: 0.0,
            lambda4: 0.0,
        }
    }
}

impl PeripteralHyper {
    /// Plain mother loss: `β = τ = κ = 1`, no guard, no gate, no regularizers.
    pub fn mother() -> Self {
        PeripteralHyper {
            alpha: 0.0,
            beta: 1.0,
            tau: 1.0,
            kappa: 1.0,
            epsilon: 0.0,
            lambda1: 0.0,
            lambda2: 0.0,
            lambda3: 0.0,
            lambda4: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, v: f64, req: &str| {
            Err(Error::Config(format!("{name} must be {req}, got {v}")))
        };
        if !(self.beta > 0.0) {
            return bad("beta", self.beta, "> 0");
        }
        if !(self.kappa > 0.0) {
            return bad("kappa", self.kappa, "> 0");
        }
        if !self.tau.is_finite() {
            return bad("tau", self.tau, "finite");
        }
        for (name, v) in [
            ("alpha", self.alpha),
            ("epsilon", self.epsilon),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
            ("lambda4", self.lambda4),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(name, v, ">= 0");
            }
        }
        Ok(())
    }
}

/// Loss value together with `∂loss/∂δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub d_delta: f64,
}

/// Sign with `sgn(0) = 0`.
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `|Δ| ln(1 + exp(1 − δ/Δ))`.
pub fn mother_loss(oracle_delta: f64, delta: f64) -> Result<LossValue> {
    if oracle_delta == 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    let arg = 1.0 - delta / oracle_delta;
    Ok(LossValue {
        value: oracle_delta.abs() * softplus(arg),
        d_delta: -sgn(oracle_delta) * logistic(arg),
    })
}

/// `(|κΔ + ε sgn Δ| / β) ln(1 + exp(β(τ − δ/(κΔ + ε sgn Δ))))`.
pub fn param_loss(oracle_delta: f64, delta: f64, h: &PeripteralHyper) -> Result<LossValue> {
    let denom = h.kappa * oracle_delta + h.epsilon * sgn(oracle_delta);
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::DegenerateDenominator);
    }
    let arg = h.beta * (h.tau - delta / denom);
    Ok(LossValue {
        value: denom.abs() / h.beta * softplus(arg),
        d_delta: -sgn(oracle_delta) * logistic(arg),
    })
}

/// Gate `g = tanh(α / |κΔ|)`, with `g = 1` at `Δ = 0`.
pub fn gate(oracle_delta: f64, h: &PeripteralHyper) -> f64 {
    let scaled = (h.kappa * oracle_delta).abs();
    if scaled == 0.0 {
        1.0
    } else {
        (h.alpha / scaled).tanh()
    }
}

/// `g |δ| + (1 − g) L_{Δ;β,τ,κ,ε}(δ)`; the `|δ|` branch uses subgradient 0 at `δ = 0`.
pub fn gated_loss(oracle_delta: f64, delta: f64, h: &PeripteralHyper) -> LossValue {
    let g = gate(oracle_delta, h);
    let mut out = LossValue {
        value: g * delta.abs(),
        d_delta: g * sgn(delta),
    };
    if g < 1.0 {
        // g < 1 implies Δ ≠ 0, so the denominator is non-zero.
        if let Ok(p) = param_loss(oracle_delta, delta, h) {
            out.value += (1.0 - g) * p.value;
            out.d_delta += (1.0 - g) * p.d_delta;
        }
    }
    out
}

/// `(δ − Δ)²`
pub fn regression_loss(oracle_delta: f64, delta: f64) -> LossValue {
    let r = delta - oracle_delta;
    LossValue {
        value: r * r,
        d_delta: 2.0 * r,
    }
}

/// `max(Δ − δ, 0)`, subgradient 0 at the kink.
pub fn margin_loss(oracle_delta: f64, delta: f64) -> LossValue {
    let r = oracle_delta - delta;
    if r > 0.0 {
        LossValue {
            value: r,
            d_delta: -1.0,
        }
    } else {
        LossValue {
            value: 0.0,
            d_delta: 0.0,
        }
    }
}

/// Which pairwise term drives training. Regularizers apply to all three.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    Peripteral,
    Regression,
    Margin,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Peripteral => "peripteral",
            LossKind::Regression => "regression",
            LossKind::Margin => "margin",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "peripteral" => Ok(LossKind::Peripteral),
            "regression" => Ok(LossKind::Regression),
            "margin" => Ok(LossKind::Margin),
            other => Err(Error::Config(format!(
                "unknown loss '{other}' (expected peripteral, regression or margin)"
            ))),
        }
    }

    pub fn pair_loss(self, oracle_delta: f64, delta: f64, h: &PeripteralHyper) -> LossValue {
        match self {
            LossKind::Peripteral => gated_loss(oracle_delta, delta, h),
            LossKind::Regression => regression_loss(oracle_delta, delta),
            LossKind::Margin => margin_loss(oracle_delta, delta),
        }
    }
}

/// A regularizer's value and `∂value/∂f(S)` for every set `S` it evaluated.
type Terms = (f64, Vec<(Vec<usize>, f64)>);

fn check_paired(a: &[usize], b: &[usize]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
            context: "augmented copies must pair element-wise",
        });
    }
    Ok(())
}

fn aug_terms<F>(f: &mut F, e: &[usize], e_aug: &[usize], l1: f64, l2: f64) -> Result<Terms>
where
    F: FnMut(&[usize]) -> Result<f64>,
{
    check_paired(e, e_aug)?;
    let mut value = 0.0;
    let mut terms = Vec::new();
    if l1 != 0.0 {
        let diff = f(e)? - f(e_aug)?;
        value += l1 * diff * diff;
        terms.push((e.to_vec(), 2.0 * l1 * diff));
        terms.push((e_aug.to_vec(), -2.0 * l1 * diff));
    }
    if l2 != 0.0 && !e.is_empty() {
        let c = l2 / e.len() as f64;
        for (&a, &b) in e.iter().zip(e_aug) {
            let diff = f(&[a])? - f(&[b])?;
            value += c * diff * diff;
            terms.push((vec![a], 2.0 * c * diff));
            terms.push((vec![b], -2.0 * c * diff));
        }
    }
    Ok((value, terms))
}

fn redn_terms<F>(f: &mut F, e: &[usize], e_aug: &[usize], l3: f64, l4: f64) -> Result<Terms>
where
    F: FnMut(&[usize]) -> Result<f64>,
{
    check_paired(e, e_aug)?;
    let mut value = 0.0;
    let mut terms = Vec::new();
    let mut pair_terms = |x: &[usize], y: &[usize], coef: f64, f: &mut F| -> Result<()> {
        let mut union = x.to_vec();
        union.extend_from_slice(y);
        let union = normalize_set(&union);
        let fu = f(&union)?;
        let fx = f(x)?;
        let fy = f(y)?;
        // f(X|Y) and f(Y|X)
        let gxy = fu - fy;
        let gyx = fu - fx;
        value += coef * (gxy * gxy + gyx * gyx);
        terms.push((union, 2.0 * coef * (gxy + gyx)));
        terms.push((y.to_vec(), -2.0 * coef * gxy));
        terms.push((x.to_vec(), -2.0 * coef * gyx));
        Ok(())
    };
    if l3 != 0.0 {
        pair_terms(e, e_aug, l3, f)?;
    }
    if l4 != 0.0 && !e.is_empty() {
        let c = l4 / e.len() as f64;
        for (&a, &b) in e.iter().zip(e_aug) {
            pair_terms(&[a], &[b], c, f)?;
        }
    }
    Ok((value, terms))
}

/// `λ1 (f(E) − f(E'))² + (λ2/|E|) Σ_e (f(e) − f(e'))²`
pub fn aug_regularizer<F>(
    mut f: F,
    e: &[usize],
    e_aug: &[usize],
    lambda1: f64,
    lambda2: f64,
) -> Result<f64>
where
    F: FnMut(&[usize]) -> f64,
{
    let mut ok = |s: &[usize]| Ok(f(s));
    Ok(aug_terms(&mut ok, e, e_aug, lambda1, lambda2)?.0)
}

/// `λ3 (f(E|E')² + f(E'|E)²) + (λ4/|E|) Σ_e (f(e|e')² + f(e'|e)²)`
pub fn redn_regularizer<F>(
    mut f: F,
    e: &[usize],
    e_aug: &[usize],
    lambda3: f64,
    lambda4: f64,
) -> Result<f64>
where
    F: FnMut(&[usize]) -> f64,
{
    let mut ok = |s: &[usize]| Ok(f(s));
    Ok(redn_terms(&mut ok, e, e_aug, lambda3, lambda4)?.0)
}

/// One training pair: `E`, `M` and their element-paired augmented copies,
/// all given as indices into the same pool.
#[derive(Debug, Clone, Copy)]
pub struct PairSets<'a> {
    pub e: &'a [usize],
    pub m: &'a [usize],
    pub e_aug: &'a [usize],
    pub m_aug: &'a [usize],
}

/// Per-pair breakdown returned by [`total_loss`].
#[derive(Debug, Clone)]
pub struct TotalLoss {
    pub value: f64,
    /// `δ = f_w(E) − f_w(M)`
    pub delta: f64,
    /// Gate activity (peripteral loss only; 0 otherwise).
    pub gate: f64,
    pub grads: Option<DspnGradients>,
}

/// Paired `(E ∪ M, E' ∪ M')` with pairs keyed by the original item.
fn union_pairs(p: &PairSets<'_>) -> (Vec<usize>, Vec<usize>) {
    let mut seen = std::collections::BTreeMap::new();
    for (&a, &b) in p.e.iter().zip(p.e_aug).chain(p.m.iter().zip(p.m_aug)) {
        seen.entry(a).or_insert(b);
    }
    seen.into_iter().unzip()
}

/// Pair loss plus `L_aug(E∪M, E'∪M') + L_redn(E, E') + L_redn(M, M')`.
pub fn total_loss(
    model: &DspnModel,
    pool: &GroundSet,
    pair: PairSets<'_>,
    oracle_delta: f64,
    h: &PeripteralHyper,
    kind: LossKind,
    with_grads: bool,
) -> Result<TotalLoss> {
    check_paired(pair.e, pair.e_aug)?;
    check_paired(pair.m, pair.m_aug)?;
    let mut ev = Evaluator::new(model, pool)?;

    let fe = ev.value(pair.e)?;
    let fm = ev.value(pair.m)?;
    let delta = fe - fm;
    let main = kind.pair_loss(oracle_delta, delta, h);
    let gate_value = match kind {
        LossKind::Peripteral => gate(oracle_delta, h),
        _ => 0.0,
    };

    let (eu, eu_aug) = union_pairs(&pair);
    let mut eval = |s: &[usize]| ev.value(s);
    let (aug_v, aug_t) = aug_terms(&mut eval, &eu, &eu_aug, h.lambda1, h.lambda2)?;
    let (re_v, re_t) = redn_terms(&mut eval, pair.e, pair.e_aug, h.lambda3, h.lambda4)?;
    let (rm_v, rm_t) = redn_terms(&mut eval, pair.m, pair.m_aug, h.lambda3, h.lambda4)?;
    let value = main.value + aug_v + re_v + rm_v;
    if !value.is_finite() {
        return Err(Error::NonFinite("total loss"));
    }

    let grads = if with_grads {
        ev.accumulate(pair.e, main.d_delta)?;
        ev.accumulate(pair.m, -main.d_delta)?;
        for (set, coef) in aug_t.iter().chain(&re_t).chain(&rm_t) {
            if *coef != 0.0 {
                ev.accumulate(set, *coef)?;
            }
        }
        Some(ev.into_gradients()?)
    } else {
        None
    };
    Ok(TotalLoss {
        value,
        delta,
        gate: gate_value,
        grads,
    })
}

/// Mean total loss over every pair of the dataset.
pub fn empirical_risk(
    model: &DspnModel,
    data: &PairDataset,
    h: &PeripteralHyper,
    kind: LossKind,
) -> Result<f64> {
    if data.pairs.is_empty() {
        return Err(Error::Empty("pair dataset"));
    }
    let mut sum = 0.0;
    for p in &data.pairs {
        sum += total_loss(model, &data.pool, p.sets(), p.delta, h, kind, false)?.value;
    }
    Ok(sum / data.pairs.len() as f64)
}
