//! Numeric abstraction used by the metric aggregators.
//!
//! Metrics are ratios of integer counts, so any field-like type works:
//! `f64`/`f32` for reporting and `BigRational` when identities must hold exactly.

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, ToPrimitive};

pub trait Scalar: Num + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive {
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn hundred() -> Self {
        Self::from_count(100)
    }
}

impl<T> Scalar for T where T: Num + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive {}
