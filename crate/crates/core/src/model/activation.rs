use crate::error::{Error, Result};

/// Monotone non-decreasing, concave, normalized scalar maps used in the roof.
///
/// On a valid roof every input is non-negative. Negative inputs (only reachable
/// when the non-negativity invariant has been broken on purpose) use odd
/// extensions so evaluation stays finite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Concave {
    Identity,
    Sqrt,
    Log1p,
    Tanh,
    OneMinusExp,
}

pub const ALL_CONCAVE: [Concave; 5] = [
    Concave::Identity,
    Concave::Sqrt,
    Concave::Log1p,
    Concave::Tanh,
    Concave::OneMinusExp,
];

const SQRT_FLOOR: f64 = 1e-12;

impl Concave {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Concave::Identity => x,
            Concave::Sqrt => x.abs().sqrt().copysign(x),
            Concave::Log1p => x.abs().ln_1p().copysign(x),
            Concave::Tanh => x.tanh(),
            Concave::OneMinusExp => -(-x).exp_m1(),
        }
    }

    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Concave::Identity => 1.0,
            Concave::Sqrt => 0.5 / x.abs().max(SQRT_FLOOR).sqrt(),
            Concave::Log1p => 1.0 / (1.0 + x.abs()),
            Concave::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Concave::OneMinusExp => (-x).exp(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Concave::Identity => "identity",
            Concave::Sqrt => "sqrt",
            Concave::Log1p => "log1p",
            Concave::Tanh => "tanh",
            Concave::OneMinusExp => "one_minus_exp",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        ALL_CONCAVE
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown roof activation '{s}'")))
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Concave::Identity => 0,
            Concave::Sqrt => 1,
            Concave::Log1p => 2,
            Concave::Tanh => 3,
            Concave::OneMinusExp => 4,
        }
    }

    pub(crate) fn from_code(c: u8) -> Option<Self> {
        ALL_CONCAVE.get(c as usize).copied()
    }
}

/// Activation bank for a layer of `width` channels: the allowed activations
/// each get an equal contiguous block, leftover channels get the identity.
/// Narrow layers (fewer channels than activations) cycle through the bank.
pub fn activation_bank(width: usize, allowed: &[Concave]) -> Vec<Concave> {
    if allowed.is_empty() {
        return vec![Concave::Identity; width];
    }
    let per = width / allowed.len();
    if per == 0 {
        return (0..width).map(|u| allowed[u % allowed.len()]).collect();
    }
    (0..width)
        .map(|u| allowed.get(u / per).copied().unwrap_or(Concave::Identity))
        .collect()
}

/// Final pillar activation; both keep outputs non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PillarOutput {
    /// `ln(1 + eˣ)`, strictly positive with non-vanishing gradient.
    Softplus,
    /// `max(x, 0)`.
    Clamp,
}

impl PillarOutput {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            PillarOutput::Softplus => softplus(x),
            PillarOutput::Clamp => x.max(0.0),
        }
    }

    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            PillarOutput::Softplus => logistic(x),
            PillarOutput::Clamp => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PillarOutput::Softplus => "softplus",
            PillarOutput::Clamp => "clamp",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "softplus" => Ok(PillarOutput::Softplus),
            "clamp" => Ok(PillarOutput::Clamp),
            other => Err(Error::InvalidArgument(format!(
                "unknown pillar output activation '{other}'"
            ))),
        }
    }
}

/// Numerically stable `ln(1 + eˣ)`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Logistic function `1 / (1 + e^{-x})`.
#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concave_activations_are_normalized_and_monotone() {
        for a in ALL_CONCAVE {
            assert_eq!(a.apply(0.0), 0.0, "{}", a.name());
            let mut prev = 0.0;
            let mut prev_slope = f64::INFINITY;
            for i in 1..200 {
                let x = i as f64 * 0.05;
                let y = a.apply(x);
                assert!(y >= prev, "{} not monotone", a.name());
                let slope = (y - prev) / 0.05;
                assert!(slope <= prev_slope + 1e-12, "{} not concave", a.name());
                prev = y;
                prev_slope = slope;
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for a in ALL_CONCAVE {
            for &x in &[0.3, 1.0, 2.5, 7.0] {
                let h = 1e-6;
                let fd = (a.apply(x + h) - a.apply(x - h)) / (2.0 * h);
                assert!((fd - a.derivative(x)).abs() < 1e-7, "{}", a.name());
            }
        }
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0);
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((logistic(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bank_layout() {
        let b = activation_bank(12, &ALL_CONCAVE);
        assert_eq!(&b[0..2], &[Concave::Identity, Concave::Identity]);
        assert_eq!(&b[2..4], &[Concave::Sqrt, Concave::Sqrt]);
        assert_eq!(&b[8..10], &[Concave::OneMinusExp, Concave::OneMinusExp]);
        assert_eq!(&b[10..], &[Concave::Identity, Concave::Identity]);
        assert_eq!(activation_bank(3, &ALL_CONCAVE), ALL_CONCAVE[..3].to_vec());
    }
}
