//! Per-item feature network `φ: R^{d_in} → R_+^d`, shared by all items.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::activation::PillarOutput;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `out × in`
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(input: usize, output: usize) -> Self {
        DenseLayer {
            weights: Matrix::zeros(output, input),
            bias: vec![0.0; output],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    fn param_count(&self) -> usize {
        self.weights.rows() * self.weights.cols() + self.bias.len()
    }
}

/// Feed-forward network: fixed input standardization, `tanh` hidden layers and
/// a non-negative output activation.
#[derive(Debug, Clone, PartialEq)]
pub struct PillarParams {
    /// Subtracted from raw inputs before the first layer. Not trained.
    pub input_shift: Vec<f64>,
    /// Multiplies shifted inputs. Not trained.
    pub input_scale: Vec<f64>,
    pub layers: Vec<DenseLayer>,
    pub output: PillarOutput,
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct PillarTrace {
    /// Input to each layer (standardized input first).
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of each layer.
    pre: Vec<Vec<f64>>,
    pub(crate) out: Vec<f64>,
}

impl PillarParams {
    pub fn new(layers: Vec<DenseLayer>, output: PillarOutput) -> Result<Self> {
        let d_in = layers
            .first()
            .map(DenseLayer::input_dim)
            .ok_or(Error::Empty("pillar layers"))?;
        let p = PillarParams {
            input_shift: vec![0.0; d_in],
            input_scale: vec![1.0; d_in],
            layers,
            output,
        };
        p.validate()?;
        Ok(p)
    }

    /// Random initialization: weights uniform in `±1/√fan_in`, small biases.
    pub fn random<R: Rng + ?Sized>(
        d_in: usize,
        hidden: &[usize],
        d: usize,
        output: PillarOutput,
        rng: &mut R,
    ) -> Result<Self> {
        let mut widths = vec![d_in];
        widths.extend_from_slice(hidden);
        widths.push(d);
        let mut layers = Vec::with_capacity(widths.len() - 1);
        for w in widths.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let weights = Matrix::from_fn(fan_out, fan_in, |_, _| rng.random_range(-bound..bound));
            let bias = (0..fan_out).map(|_| rng.random_range(-0.1..0.1)).collect();
            layers.push(DenseLayer { weights, bias });
        }
        Self::new(layers, output)
    }

    pub fn validate(&self) -> Result<()> {
        let d_in = self.input_dim();
        if self.input_shift.len() != d_in || self.input_scale.len() != d_in {
            return Err(Error::DimensionMismatch {
                expected: d_in,
                actual: self.input_shift.len().min(self.input_scale.len()),
                context: "pillar input standardization",
            });
        }
        for pair in self.layers.windows(2) {
            if pair[1].input_dim() != pair[0].output_dim() {
                return Err(Error::DimensionMismatch {
                    expected: pair[0].output_dim(),
                    actual: pair[1].input_dim(),
                    context: "pillar layer chaining",
                });
            }
        }
        for l in &self.layers {
            if l.bias.len() != l.output_dim() {
                return Err(Error::DimensionMismatch {
                    expected: l.output_dim(),
                    actual: l.bias.len(),
                    context: "pillar bias length",
                });
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, DenseLayer::input_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, DenseLayer::output_dim)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    /// Fit the input standardization to per-column mean and standard deviation.
    pub fn fit_standardization(&mut self, data: &Matrix) {
        let n = data.rows().max(1) as f64;
        for j in 0..data.cols().min(self.input_dim()) {
            let mean = (0..data.rows()).map(|i| data.get(i, j)).sum::<f64>() / n;
            let var = (0..data.rows())
                .map(|i| (data.get(i, j) - mean).powi(2))
                .sum::<f64>()
                / n;
            self.input_shift[j] = mean;
            self.input_scale[j] = if var > 0.0 { 1.0 / var.sqrt() } else { 1.0 };
        }
    }

    pub(crate) fn trace(&self, x: &[f64]) -> PillarTrace {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut cur: Vec<f64> = x
            .iter()
            .zip(&self.input_shift)
            .zip(&self.input_scale)
            .map(|((v, s), c)| (v - s) * c)
            .collect();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = layer.bias.clone();
            for (zi, row) in z.iter_mut().zip(0..layer.output_dim()) {
                *zi += crate::matrix::dot(layer.weights.row(row), &cur);
            }
            let next = if l == last {
                z.iter().map(|&v| self.output.apply(v)).collect()
            } else {
                z.iter().map(|v| v.tanh()).collect()
            };
            inputs.push(std::mem::replace(&mut cur, next));
            pre.push(z);
        }
        PillarTrace {
            inputs,
            pre,
            out: cur,
        }
    }

    /// Accumulate `∂(gout · φ(x))/∂params` into `grads` (same layout as `layers`).
    pub(crate) fn backward(&self, trace: &PillarTrace, gout: &[f64], grads: &mut [DenseLayer]) {
        let last = self.layers.len() - 1;
        let mut g: Vec<f64> = gout
            .iter()
            .zip(&trace.pre[last])
            .map(|(&go, &z)| go * self.output.derivative(z))
            .collect();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let gl = &mut grads[l];
            gl.weights.add_outer(1.0, &g, &trace.inputs[l]);
            for (b, &gi) in gl.bias.iter_mut().zip(&g) {
                *b += gi;
            }
            if l == 0 {
                break;
            }
            let mut gin = vec![0.0; layer.input_dim()];
            layer.weights.matvec_t_acc(&g, &mut gin);
            for (gi, &z) in gin.iter_mut().zip(&trace.pre[l - 1]) {
                let t = z.tanh();
                *gi *= 1.0 - t * t;
            }
            g = gin;
        }
    }
}

/// `φ(x)`: element-wise non-negative pillar embedding of one item.
pub fn pillar_forward(pillar: &PillarParams, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != pillar.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: pillar.input_dim(),
            actual: x.len(),
            context: "pillar input",
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("pillar input"));
    }
    Ok(pillar.trace(x).out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_params_give_zero_with_clamp() {
        let p = PillarParams::new(
            vec![DenseLayer::zeros(3, 4), DenseLayer::zeros(4, 2)],
            PillarOutput::Clamp,
        )
        .unwrap();
        assert_eq!(
            pillar_forward(&p, &[1.0, -2.0, 3.0]).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn zero_params_give_ln2_with_softplus() {
        let p = PillarParams::new(vec![DenseLayer::zeros(2, 3)], PillarOutput::Softplus).unwrap();
        for v in pillar_forward(&p, &[5.0, 1.0]).unwrap() {
            assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_single_layer_passes_through() {
        let mut layer = DenseLayer::zeros(3, 3);
        for i in 0..3 {
            layer.weights.set(i, i, 1.0);
        }
        let p = PillarParams::new(vec![layer], PillarOutput::Clamp).unwrap();
        let x = [0.5, 0.0, 2.25];
        assert_eq!(pillar_forward(&p, &x).unwrap(), x.to_vec());
    }

    #[test]
    fn outputs_non_negative_for_random_params() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..1000 {
            let out = if trial % 2 == 0 {
                PillarOutput::Softplus
            } else {
                PillarOutput::Clamp
            };
            let p = PillarParams::random(4, &[8, 8], 6, out, &mut rng).unwrap();
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-20.0..20.0)).collect();
            assert!(pillar_forward(&p, &x).unwrap().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = PillarParams::random(2, &[3], 2, PillarOutput::Softplus, &mut rng).unwrap();
        assert!(pillar_forward(&p, &[1.0]).is_err());
        assert!(pillar_forward(&p, &[1.0, f64::NAN]).is_err());
    }
}
