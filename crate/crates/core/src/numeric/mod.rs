//! Numerical building blocks shared by the exact engine and the limit laws.

pub mod quad;
pub mod special;
pub mod sum;

pub use quad::{gauss_kronrod, integrate_tail, Quadrature};
pub use special::{beta, gamma, ln_beta, ln_gamma_signed, poisson_pmf};
pub use sum::CompensatedSum;
