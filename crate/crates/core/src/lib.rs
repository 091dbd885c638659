//! Replica theory and Monte Carlo checks for ℓ2-regularized Expected
//! Shortfall portfolio optimization.

pub mod error;
pub mod special_fn;
pub(crate) mod quadrature;
pub mod saddle;

#[cfg(test)]
pub(crate) mod test_support;
pub mod geometry;
pub mod mc;
pub mod io;
