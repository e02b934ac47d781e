use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumCast};

/// Real scalar used by the kernel-space code.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static
{
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal fits the scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}
