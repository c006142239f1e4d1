//! Small numerical helpers shared by the propagation and solver code.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Plain sum over four interleaved lanes; fast, and fixed in order.
pub fn lane_sum(values: &[f64]) -> f64 {
    let mut lanes = [0.0f64; 4];
    let chunks = values.chunks_exact(4);
    let tail: f64 = chunks.remainder().iter().sum();
    for c in chunks {
        for k in 0..4 {
            lanes[k] += c[k];
        }
    }
    (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]) + tail
}

/// log(exp(a) + exp(b)) without overflow; either side may be -inf.
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// A nonnegative cost that may be infinite. Infinity is a variant, never a
/// large sentinel number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Cost {
    Finite(f64),
    Infinite,
}

impl Cost {
    /// `-ln(weight)`; zero weight maps to [`Cost::Infinite`].
    pub fn from_weight(weight: f64) -> Cost {
        if weight > 0.0 {
            Cost::Finite(-weight.ln())
        } else {
            Cost::Infinite
        }
    }

    pub fn from_log_weight(log_weight: f64) -> Cost {
        if log_weight == f64::NEG_INFINITY {
            Cost::Infinite
        } else {
            Cost::Finite(-log_weight)
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Cost::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Cost::Finite(v) => Some(v),
            Cost::Infinite => None,
        }
    }

    /// Value as an `f64`, with `+inf` for the infinite variant.
    pub fn as_f64(self) -> f64 {
        match self {
            Cost::Finite(v) => v,
            Cost::Infinite => f64::INFINITY,
        }
    }

    /// Clamp into `[lo, hi]`; an infinite cost clamps to `hi`.
    pub fn clamp(self, lo: f64, hi: f64) -> f64 {
        lo.max(self.as_f64().min(hi))
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Finite(v) => write!(f, "{v}"),
            Cost::Infinite => f.write_str("inf"),
        }
    }
}
