//! Spectral toolkit for the stability of 2-D plane Poiseuille flow
//! `(1-y^2, 0)` in the channel `T x (-1,1)` with Navier-slip walls
//! (vorticity and streamfunction vanish at `y = +-1`).
//!
//! The crate has three layers:
//!
//! * Chebyshev collocation calculus on `[-1,1]` ([`spectral`]) and the
//!   dense complex linear algebra it needs ([`linalg`]);
//! * the linearized operator `L_k = -nu (dyy - k^2) + ik (1-y^2)
//!   + 2ik (dyy - k^2)^{-1}` with resolvent, pseudospectral-gap and
//!   eigenvalue machinery ([`linop`]), resolvent-inequality sweeps
//!   ([`resolvent`]) and the time integrator for the linearized system
//!   with space-time norm accumulation ([`evolution`]);
//! * the nonlinear pseudo-spectral solver with per-mode energy
//!   functionals ([`nonlinear`]) and the amplitude-threshold scan
//!   orchestration ([`scan`]).
//!
//! Parameter sweeps are data-parallel. With the default `parallel`
//! feature they run on a rayon pool; without it the same code maps
//! sequentially, with identical results (order-independence is part of
//! the sweep contract).

pub mod error;
pub mod evolution;
pub mod linalg;
pub mod linop;
pub mod nonlinear;
pub mod report;
pub mod resolvent;
pub mod scan;
pub mod spectral;
pub mod util;

pub use error::{Error, Result};
pub use spectral::{build_grid, ChebGrid, ComplexProfile, NormBundle};
