//! Exact integer coefficients.
//!
//! Every polyhedral object in this crate is generic over a [`Coeff`], an exact
//! signed machine integer. All arithmetic goes through the checked helpers in
//! this module so overflow surfaces as [`Error::Overflow`] instead of wrapping.

use std::fmt::{Debug, Display};
use std::hash::Hash;

use num_integer::Integer;
use num_traits::{NumCast, PrimInt, Signed};

use crate::error::{Error, Result};

/// Signed integer usable as a constraint coefficient (`i32`, `i64`, `i128`).
pub trait Coeff:
    PrimInt + Signed + Integer + Hash + Debug + Display + Send + Sync + 'static
{
}

impl<T> Coeff for T where
    T: PrimInt + Signed + Integer + Hash + Debug + Display + Send + Sync + 'static
{
}

#[inline]
pub(crate) fn add<C: Coeff>(a: C, b: C) -> Result<C> {
    a.checked_add(&b).ok_or(Error::Overflow)
}

#[inline]
pub(crate) fn mul<C: Coeff>(a: C, b: C) -> Result<C> {
    a.checked_mul(&b).ok_or(Error::Overflow)
}

#[inline]
pub(crate) fn neg<C: Coeff>(a: C) -> Result<C> {
    C::zero().checked_sub(&a).ok_or(Error::Overflow)
}

/// Converts any primitive integer into `C`, reporting values that do not fit.
pub fn cast<C: Coeff, T: NumCast + Copy + Display>(v: T) -> Result<C> {
    <C as NumCast>::from(v).ok_or(Error::Overflow)
}

/// `floor(a / b)` for `b > 0`.
#[inline]
pub fn floor_div<C: Coeff>(a: C, b: C) -> C {
    debug_assert!(b > C::zero());
    Integer::div_floor(&a, &b)
}

/// `ceil(a / b)` for `b > 0`.
#[inline]
pub fn ceil_div<C: Coeff>(a: C, b: C) -> C {
    debug_assert!(b > C::zero());
    Integer::div_ceil(&a, &b)
}

#[inline]
pub(crate) fn gcd<C: Coeff>(a: C, b: C) -> C {
    Integer::gcd(&a, &b)
}
