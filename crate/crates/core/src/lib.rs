//! Multiparameter Poisson processes, their stable time changes and
//! fractional integrals, with Monte Carlo cross-checks for every closed form.

pub mod error;
pub mod index;
pub mod integrals;
pub mod martingale;
pub mod mc;
pub mod mpp;
pub mod quadrature;
pub mod special;
pub mod subordinators;
pub mod time_changed;

pub use error::{Error, Result};
pub use index::{
    compositions, lambda_dot, partial_le, Composition, FracOrders, IndexPoint, RateVector,
};
