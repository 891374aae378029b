//! Computational workbench for heights of arithmetic objects.
//!
//! The crate is organized around a chain of algebraic structures:
//!
//! - [`numfield`]: exact arithmetic in number fields `Q[x]/(m(x))`, their
//!   archimedean embeddings and absolute values.
//! - [`heights`]: heights of algebraic numbers and polynomials, Mahler
//!   measures, and a small-degree Lehmer-problem search.
//! - [`lattice`]: integer lattices with trace-form norms, exact LLL
//!   reduction, orthogonality defects and k-volumes.
//! - [`ssalgebra`]: semisimple algebras `⊕ M_n(L)` over Q, their orders,
//!   regular traces and norms, ideal norms, and Hattori–Stallings ranks.
//! - [`bimodule`]: hermitian bimodules between such algebras, tensor
//!   composition, and the height functionals they carry.
//! - [`dynamics`]: convolution algebras over finite bimodule universes,
//!   height-generated time evolutions and partition functions.
//! - [`nctorus`]: the twisted group ring of the noncommutative torus with
//!   its canonical trace.

pub mod bimodule;
pub mod dynamics;
pub mod error;
pub mod heights;
pub mod io;
pub mod lattice;
pub mod matrix;
pub mod nctorus;
pub mod numfield;
pub mod poly;
pub mod roots;
pub mod ssalgebra;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) mod rat {
    //! Small helpers for `BigRational` values.

    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, Signed, ToPrimitive, Zero};

    pub fn int(n: i64) -> BigInt {
        BigInt::from(n)
    }

    pub fn q(n: i64) -> BigRational {
        BigRational::from_integer(int(n))
    }

    pub fn qq(n: i64, d: i64) -> BigRational {
        BigRational::new(int(n), int(d))
    }

    pub fn is_integer(x: &BigRational) -> bool {
        x.denom().is_one()
    }

    pub fn to_f64(x: &BigRational) -> f64 {
        // `BigRational::to_f64` returns None only on overflow; saturate there.
        x.to_f64().unwrap_or_else(|| {
            if x.is_negative() {
                f64::NEG_INFINITY
            } else if x.is_zero() {
                0.0
            } else {
                f64::INFINITY
            }
        })
    }

    /// Round to the nearest integer (ties toward +infinity, as in classical
    /// LLL size reduction).
    pub fn round_nearest(x: &BigRational) -> BigInt {
        (x + BigRational::new(int(1), int(2))).floor().to_integer()
    }

    /// Truncate to a dyadic rational with denominator `2^bits`, used to stop
    /// coefficient blow-up in exact Newton iterations.
    pub fn dyadic_round(x: &BigRational, bits: u32) -> BigRational {
        let scale = BigInt::one() << bits;
        let scaled = x * BigRational::from_integer(scale.clone());
        BigRational::new(scaled.round().to_integer(), scale)
    }
}
