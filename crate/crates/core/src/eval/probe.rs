use crate::error::{Error, Result};
use crate::setfn::GroundSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSettings {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub l2: f64,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        ProbeSettings {
            max_iters: 5000,
            grad_tol: 1e-6,
            l2: 1e-4,
        }
    }
}

/// Train a multinomial logistic regression on `train` (full-batch gradient
/// descent from zero, features standardized on `train`) and return its
/// accuracy on `test`.
pub fn linear_probe(train: &GroundSet, test: &GroundSet, s: &ProbeSettings) -> Result<f64> {
    let ytr = train.require_labels("linear probe training set")?;
    let yte = test.require_labels("linear probe test set")?;
    if train.dim() != test.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            actual: test.dim(),
            context: "probe feature width",
        });
    }
    let n = train.n();
    let d = train.dim();
    let classes = train.num_classes().max(test.num_classes());

    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, &x) in mean.iter_mut().zip(train.row(i)) {
            *m += x / n as f64;
        }
    }
    let mut scale = vec![0.0; d];
    for i in 0..n {
        for j in 0..d {
            let c = train.row(i)[j] - mean[j];
            scale[j] += c * c / n as f64;
        }
    }
    for sc in &mut scale {
        *sc = if *sc > 1e-24 { 1.0 / sc.sqrt() } else { 1.0 };
    }
    let feats = |g: &GroundSet, i: usize| -> Vec<f64> {
        let mut f: Vec<f64> = g
            .row(i)
            .iter()
            .zip(&mean)
            .zip(&scale)
            .map(|((x, m), s)| (x - m) * s)
            .collect();
        f.push(1.0);
        f
    };
    let xtr: Vec<Vec<f64>> = (0..n).map(|i| feats(train, i)).collect();
    let dp = d + 1;
    let max_sq = xtr
        .iter()
        .map(|x| x.iter().map(|v| v * v).sum::<f64>())
        .fold(0.0, f64::max);
    let lr = 1.0 / (0.5 * max_sq + s.l2);

    let mut w = vec![0.0; classes * dp];
    let mut grad = vec![0.0; classes * dp];
    let mut probs = vec![0.0; classes];
    for _ in 0..s.max_iters {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (x, &y) in xtr.iter().zip(ytr) {
            let mut mx = f64::NEG_INFINITY;
            for c in 0..classes {
                probs[c] = w[c * dp..(c + 1) * dp]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum();
                mx = mx.max(probs[c]);
            }
            let mut z = 0.0;
            for p in probs.iter_mut() {
                *p = (*p - mx).exp();
                z += *p;
            }
            for c in 0..classes {
                let r = probs[c] / z - f64::from(u8::from(c == y));
                for (g, &xi) in grad[c * dp..(c + 1) * dp].iter_mut().zip(x) {
                    *g += r * xi / n as f64;
                }
            }
        }
        for c in 0..classes {
            for j in 0..d {
                grad[c * dp + j] += s.l2 * w[c * dp + j];
            }
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < s.grad_tol {
            break;
        }
        for (wi, gi) in w.iter_mut().zip(&grad) {
            *wi -= lr * gi;
        }
    }

    let mut correct = 0usize;
    for i in 0..test.n() {
        let x = feats(test, i);
        let mut best = (f64::NEG_INFINITY, 0);
        for c in 0..classes {
            let score: f64 = w[c * dp..(c + 1) * dp]
                .iter()
                .zip(&x)
                .map(|(a, b)| a * b)
                .sum();
            if score > best.0 {
                best = (score, c);
            }
        }
        correct += usize::from(best.1 == yte[i]);
    }
    Ok(correct as f64 / test.n() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    fn blobs(offset: f64) -> GroundSet {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..20 {
            let t = i as f64 * 0.05 + offset;
            rows.push(vec![-2.0 + t, 1.0 - t]);
            labels.push(0);
            rows.push(vec![2.0 - t, -1.0 + t]);
            labels.push(1);
        }
        GroundSet::new(Matrix::from_rows(&rows).unwrap(), Some(labels)).unwrap()
    }

    #[test]
    fn separable_blobs() {
        let acc = linear_probe(&blobs(0.0), &blobs(0.02), &ProbeSettings::default()).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn single_class_training_set() {
        let train = GroundSet::new(
            Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap(),
            Some(vec![1, 1]),
        )
        .unwrap();
        let test = GroundSet::new(
            Matrix::from_rows(&[vec![0.0], vec![5.0], vec![-3.0], vec![2.0]]).unwrap(),
            Some(vec![1, 0, 0, 1]),
        )
        .unwrap();
        assert_eq!(
            linear_probe(&train, &test, &ProbeSettings::default()).unwrap(),
            0.5
        );
    }

    #[test]
    fn duplicated_rows_match() {
        let train = blobs(0.0);
        let idx: Vec<usize> = (0..train.n()).chain(0..train.n()).collect();
        let doubled = train.subset(&idx).unwrap();
        let test = blobs(0.3);
        let s = ProbeSettings::default();
        assert_eq!(
            linear_probe(&train, &test, &s).unwrap(),
            linear_probe(&doubled, &test, &s).unwrap()
        );
    }
}
