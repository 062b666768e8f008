//! Scalar abstraction so the whole toolkit can run on `f32` or `f64`.
//!
//! All costs, coordinates, and clock values are expressed in one scalar type.
//! The crate root exports `f64` aliases for every public type; pick `f32`
//! explicitly if memory pressure ever matters more than precision.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, NumAssign};
use rand::distr::uniform::SampleUniform;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar used for time, distance, and cost arithmetic.
pub trait Scalar:
    Float
    + NumAssign
    + SampleUniform
    + Sum
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;

    /// One draw from N(0, 1).
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Slack used when comparing objective values (local-search acceptance,
    /// oracle assertions). Scaled to the precision of the type.
    fn tolerance() -> Self;
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }

    fn as_f64(self) -> f64 {
        self
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    fn tolerance() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    fn as_f64(self) -> f64 {
        self as f64
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    fn tolerance() -> Self {
        1e-4
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn round_trips_between_widths() {
        let x: f32 = Scalar::from_f64(2.5);
        assert_eq!(x.as_f64(), 2.5);
        let y: f64 = Scalar::from_f64(2.5);
        assert_eq!(y, 2.5);
    }

    #[test]
    fn normal_draws_are_reproducible() {
        let mut a = ChaCha12Rng::seed_from_u64(7);
        let mut b = ChaCha12Rng::seed_from_u64(7);
        let xa: f64 = Scalar::standard_normal(&mut a);
        let xb: f64 = Scalar::standard_normal(&mut b);
        assert_eq!(xa, xb);
    }
}
