//! Deep submodular roof `ψ(z) = W⁽ᴸ⁾ Φ₍ᴸ₋₁₎( … W⁽¹⁾ Φ₍₀₎(z))`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::activation::{activation_bank, Concave};

/// `weights[l]` maps layer `l`'s activated channels to layer `l+1`; the last
/// matrix has a single row. `activations[l][u]` is applied to channel `u` of
/// the input of `weights[l]`. No biases, so `ψ(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoofParams {
    pub weights: Vec<Matrix>,
    pub activations: Vec<Vec<Concave>>,
}

pub(crate) struct RoofTrace {
    /// Layer inputs before activation; `xs[0]` is `z`.
    xs: Vec<Vec<f64>>,
    /// Activated layer inputs.
    ys: Vec<Vec<f64>>,
    pub(crate) value: f64,
}

impl RoofParams {
    pub fn new(weights: Vec<Matrix>, activations: Vec<Vec<Concave>>) -> Result<Self> {
        let r = RoofParams {
            weights,
            activations,
        };
        r.validate()?;
        Ok(r)
    }

    /// Roof with hidden widths `hidden` over input width `d`; each layer's
    /// channels are split across `allowed` activations.
    pub fn random<R: Rng + ?Sized>(
        d: usize,
        hidden: &[usize],
        allowed: &[Concave],
        rng: &mut R,
    ) -> Result<Self> {
        let mut widths = vec![d];
        widths.extend_from_slice(hidden);
        widths.push(1);
        let mut weights = Vec::new();
        let mut activations = Vec::new();
        for w in widths.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let hi = 2.0 / fan_in as f64;
            // Drawn from a range straddling zero, then projected: some weights
            // start exactly at the boundary of the feasible set.
            let m = Matrix::from_fn(fan_out, fan_in, |_, _| rng.random_range(-0.25 * hi..hi));
            weights.push(m);
            activations.push(activation_bank(fan_in, allowed));
        }
        let mut r = Self::new(weights, activations)?;
        project_nonneg_in_place(&mut r);
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.is_empty() {
            return Err(Error::Empty("roof layers"));
        }
        if self.weights.len() != self.activations.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                actual: self.activations.len(),
                context: "roof activation layers",
            });
        }
        for (l, (w, a)) in self.weights.iter().zip(&self.activations).enumerate() {
            if w.cols() != a.len() {
                return Err(Error::DimensionMismatch {
                    expected: w.cols(),
                    actual: a.len(),
                    context: "roof activation bank width",
                });
            }
            if let Some(next) = self.weights.get(l + 1) {
                if next.cols() != w.rows() {
                    return Err(Error::DimensionMismatch {
                        expected: w.rows(),
                        actual: next.cols(),
                        context: "roof layer chaining",
                    });
                }
            }
        }
        let out = self.weights.last().map_or(0, Matrix::rows);
        if out != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                actual: out,
                context: "roof output width",
            });
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.weights.first().map_or(0, Matrix::cols)
    }

    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(|w| w.rows() * w.cols()).sum()
    }

    /// First negative weight as `(flat position, value)`, if any.
    pub fn first_negative(&self) -> Option<(usize, f64)> {
        self.weights
            .iter()
            .flat_map(|w| w.as_slice().iter().copied())
            .enumerate()
            .find(|&(_, v)| !(v >= 0.0))
    }

    pub(crate) fn trace(&self, z: &[f64]) -> RoofTrace {
        let mut xs = Vec::with_capacity(self.weights.len());
        let mut ys = Vec::with_capacity(self.weights.len());
        let mut x = z.to_vec();
        for (w, acts) in self.weights.iter().zip(&self.activations) {
            let y: Vec<f64> = x.iter().zip(acts).map(|(&v, a)| a.apply(v)).collect();
            let mut next = vec![0.0; w.rows()];
            w.matvec(&y, &mut next);
            xs.push(std::mem::replace(&mut x, next));
            ys.push(y);
        }
        RoofTrace {
            xs,
            ys,
            value: x[0],
        }
    }

    pub(crate) fn forward(&self, z: &[f64]) -> f64 {
        self.trace(z).value
    }

    /// Accumulate `∂(upstream · ψ)/∂W` into `grads`; returns `∂(upstream · ψ)/∂z`.
    pub(crate) fn backward(
        &self,
        trace: &RoofTrace,
        upstream: f64,
        grads: &mut [Matrix],
    ) -> Vec<f64> {
        let mut g = vec![upstream];
        for l in (0..self.weights.len()).rev() {
            grads[l].add_outer(1.0, &g, &trace.ys[l]);
            let mut gy = vec![0.0; self.weights[l].cols()];
            self.weights[l].matvec_t_acc(&g, &mut gy);
            for ((gi, &x), a) in gy.iter_mut().zip(&trace.xs[l]).zip(&self.activations[l]) {
                *gi *= a.derivative(x);
            }
            g = gy;
        }
        g
    }
}

/// `ψ(z)` for a valid roof and a non-negative input.
pub fn dsf_eval(roof: &RoofParams, z: &[f64]) -> Result<f64> {
    if z.len() != roof.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: roof.input_dim(),
            actual: z.len(),
            context: "roof input",
        });
    }
    if let Some((position, &value)) = z.iter().enumerate().find(|(_, &v)| !(v >= 0.0)) {
        return Err(Error::NegativeWeight {
            value,
            position,
            context: "roof input must be non-negative",
        });
    }
    if let Some((position, value)) = roof.first_negative() {
        return Err(Error::NegativeWeight {
            value,
            position,
            context: "roof weight",
        });
    }
    Ok(roof.forward(z))
}

/// Clamp every roof weight to `max(w, 0)`.
pub fn project_nonneg(roof: &RoofParams) -> RoofParams {
    let mut r = roof.clone();
    project_nonneg_in_place(&mut r);
    r
}

pub fn project_nonneg_in_place(roof: &mut RoofParams) {
    for w in &mut roof.weights {
        for v in w.as_mut_slice() {
            // also maps NaN to 0
            if !(*v >= 0.0) {
                *v = 0.0;
            }
        }
    }
}
