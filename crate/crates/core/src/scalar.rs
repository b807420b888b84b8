//! Scalar abstraction for the numeric modules.
//!
//! All linear-algebra and sampling code is generic over [`Scalar`], which is
//! satisfied by `f32` and `f64`. The graph machinery is scalar-free.

use nalgebra::RealField;
use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, Open01, StandardNormal, StudentT};

/// Floating-point scalar usable throughout the numeric modules.
///
/// The sampling hooks expose the standard distributions for the concrete
/// type, so generic code never has to thread `Distribution<F>` bounds.
pub trait Scalar:
    RealField + Float + FromPrimitive + ToPrimitive + Default + Copy + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, for constants and tolerances.
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite f64 constant")
    }

    /// Standard normal draw.
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
    /// Uniform draw on `[0, 1)`.
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;
    /// Uniform draw on the open interval `(0, 1)`.
    fn open01<R: Rng + ?Sized>(rng: &mut R) -> Self;
    /// Student t draw with 5 degrees of freedom (not standardized).
    fn student_t5<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }
            fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.random()
            }
            fn open01<R: Rng + ?Sized>(rng: &mut R) -> Self {
                Open01.sample(rng)
            }
            fn student_t5<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StudentT::new(5.0).expect("valid dof").sample(rng)
            }
        }
    };
}

impl_scalar!(f64);
impl_scalar!(f32);
