//! Exhaustive polymatroid checks over the full subset lattice.

use std::fmt;

use crate::error::{Error, Result};
use crate::setfn::SetFunction;

/// Largest ground set the brute-force checker will enumerate.
pub const MAX_BRUTEFORCE_N: usize = 14;

const MAX_WITNESSES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// `f(v|X) < f(v|Y) − tol` with `X ⊆ Y`, `v ∉ Y`.
    Submodularity {
        x: Vec<usize>,
        y: Vec<usize>,
        v: usize,
        gain_x: f64,
        gain_y: f64,
    },
    /// `f(X) > f(Y) + tol` with `X ⊆ Y`.
    Monotonicity {
        x: Vec<usize>,
        y: Vec<usize>,
        fx: f64,
        fy: f64,
    },
    /// `|f(∅)| > tol`.
    Normalization { value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Submodularity {
                x,
                y,
                v,
                gain_x,
                gain_y,
            } => write!(
                f,
                "submodularity: X={x:?} ⊆ Y={y:?}, v={v}: f(v|X)={gain_x:.6e} < f(v|Y)={gain_y:.6e}"
            ),
            Violation::Monotonicity { x, y, fx, fy } => write!(
                f,
                "monotonicity: X={x:?} ⊆ Y={y:?}: f(X)={fx:.6e} > f(Y)={fy:.6e}"
            ),
            Violation::Normalization { value } => write!(f, "normalization: f(∅)={value:.6e}"),
        }
    }
}

/// Outcome of [`check_polymatroid_bruteforce`]. Violation counts are exact;
/// at most a bounded number of witnesses per kind is retained.
#[derive(Debug, Clone, Default)]
pub struct PolymatroidReport {
    pub n: usize,
    pub submodularity_violations: usize,
    pub monotonicity_violations: usize,
    pub normalization_violated: bool,
    pub witnesses: Vec<Violation>,
}

impl PolymatroidReport {
    pub fn is_polymatroid(&self) -> bool {
        self.total_violations() == 0
    }

    pub fn total_violations(&self) -> usize {
        self.submodularity_violations
            + self.monotonicity_violations
            + usize::from(self.normalization_violated)
    }

    pub fn first_submodularity_witness(&self) -> Option<&Violation> {
        self.witnesses
            .iter()
            .find(|w| matches!(w, Violation::Submodularity { .. }))
    }
}

fn members(mask: usize, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask >> i & 1 == 1).collect()
}

/// Enumerate all `2^n` subsets and report every violation of
/// (a) diminishing returns, (b) monotonicity and (c) normalization, each
/// up to the additive tolerance `tol`.
pub fn check_polymatroid_bruteforce(f: &dyn SetFunction, tol: f64) -> Result<PolymatroidReport> {
    let n = f.n();
    if n > MAX_BRUTEFORCE_N {
        return Err(Error::TooLarge {
            n,
            max: MAX_BRUTEFORCE_N,
        });
    }
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be non-negative, got {tol}"
        )));
    }
    let full = 1usize << n;
    let values: Vec<f64> = (0..full).map(|mask| f.eval(&members(mask, n))).collect();

    let mut report = PolymatroidReport {
        n,
        ..Default::default()
    };
    let mut sub_w = 0;
    let mut mono_w = 0;

    if !(values[0].abs() <= tol) {
        report.normalization_violated = true;
        report
            .witnesses
            .push(Violation::Normalization { value: values[0] });
    }

    for y in 0..full {
        let fy = values[y];
        // Proper submasks X ⊊ Y, including ∅.
        let mut x = y;
        loop {
            x = x.wrapping_sub(1) & y;
            if x == y {
                break;
            }
            let fx = values[x];
            if !(fx <= fy + tol) {
                report.monotonicity_violations += 1;
                if mono_w < MAX_WITNESSES {
                    mono_w += 1;
                    report.witnesses.push(Violation::Monotonicity {
                        x: members(x, n),
                        y: members(y, n),
                        fx,
                        fy,
                    });
                }
            }
            if x == 0 {
                break;
            }
        }

        for v in 0..n {
            let bit = 1 << v;
            if y & bit != 0 {
                continue;
            }
            let gain_y = values[y | bit] - fy;
            let mut x = y;
            loop {
                let gain_x = values[x | bit] - values[x];
                if !(gain_x >= gain_y - tol) {
                    report.submodularity_violations += 1;
                    if sub_w < MAX_WITNESSES {
                        sub_w += 1;
                        report.witnesses.push(Violation::Submodularity {
                            x: members(x, n),
                            y: members(y, n),
                            v,
                            gain_x,
                            gain_y,
                        });
                    }
                }
                if x == 0 {
                    break;
                }
                x = (x - 1) & y;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::setfn::{rbf_similarity, FacilityLocation, FnSetFunction};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sqrt_cardinality_is_polymatroid() {
        let f = FnSetFunction::new(6, |s: &[usize]| (s.len() as f64).sqrt());
        let r = check_polymatroid_bruteforce(&f, 1e-9).unwrap();
        assert!(r.is_polymatroid(), "{:?}", r.witnesses);
    }

    #[test]
    fn squared_cardinality_violates_submodularity() {
        let f = FnSetFunction::new(3, |s: &[usize]| (s.len() * s.len()) as f64);
        let r = check_polymatroid_bruteforce(&f, 1e-9).unwrap();
        assert!(r.submodularity_violations > 0);
        assert_eq!(r.monotonicity_violations, 0);
        // X = ∅ ⊂ Y = {0}, v = 1: gain 1 < 3
        assert!(r.witnesses.contains(&Violation::Submodularity {
            x: vec![],
            y: vec![0],
            v: 1,
            gain_x: 1.0,
            gain_y: 3.0,
        }));
    }

    #[test]
    fn facility_location_random_kernel_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = Matrix::from_fn(6, 2, |_, _| rng.random_range(-1.0..1.0));
        let fl = FacilityLocation::new(rbf_similarity(&pts, 1.3).unwrap());
        let r = check_polymatroid_bruteforce(&fl, 1e-9).unwrap();
        assert!(r.is_polymatroid(), "{:?}", r.witnesses);
    }

    #[test]
    fn detects_non_normalized_and_decreasing() {
        let f = FnSetFunction::new(2, |s: &[usize]| 1.0 - s.len() as f64);
        let r = check_polymatroid_bruteforce(&f, 1e-9).unwrap();
        assert!(r.normalization_violated);
        assert!(r.monotonicity_violations > 0);
    }

    #[test]
    fn guards_large_ground_sets() {
        let f = FnSetFunction::new(40, |s: &[usize]| s.len() as f64);
        assert!(matches!(
            check_polymatroid_bruteforce(&f, 0.0),
            Err(Error::TooLarge { .. })
        ));
    }
}
