//! Independent reference solvers used to check the closed forms.
//!
//! [`fd`] solves the pricing PDEs on a grid, [`mc`] simulates the underlying
//! processes. Neither shares numerical code with the closed-form path beyond
//! the model types.

pub mod fd;
pub mod mc;
pub mod rng;
pub mod tridiag;

pub use fd::{fd_2d, fd_price_1d, fd_price_2d, fd_survival_2d, FdReport, FdTarget, GridSpec, Scheme};
pub use mc::{mc_price, mc_survival, McEstimate, McSpec, Monitoring};
