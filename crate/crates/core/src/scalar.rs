//! Floating point abstraction shared by the similarity, clustering and
//! community code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar used for RSS means, similarity scores and edge weights.
///
/// Implemented for `f32` and `f64`. RSS readings arrive as integer dBm and
/// are lifted into the scalar with [`Scalar::from_dbm`].
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    fn from_dbm(rss: i16) -> Self {
        Self::from_i16(rss).expect("dBm readings are representable in every float type")
    }

    /// Lossy conversion used for configuration values stored as `f64`.
    fn of(value: f64) -> Self {
        Self::from_f64(value).unwrap_or_else(Self::nan)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
