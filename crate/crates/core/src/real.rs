use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Scalar type of feature-map values: `f64` on the verification path,
/// `f32` where training speed matters.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("representable")
    }

    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Sum whose result depends only on the multiset of inputs, not on their
/// order: values are sorted before accumulation. Permuting a feature map
/// therefore leaves the sum bit-identical.
pub fn order_invariant_sum<T: Real>(values: &mut [T]) -> T {
    values.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    values.iter().fold(T::zero(), |acc, &v| acc + v)
}
