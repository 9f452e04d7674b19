//! Simulation of fractional stochastic processes and estimation of their
//! Hurst exponent.
//!
//! The crate has three layers:
//!
//! * [`generators`]: exact fractional Gaussian noise through circulant
//!   embedding, fractional Brownian motion, the fractional
//!   Ornstein-Uhlenbeck process, and linear fractional stable motion.
//! * [`classical`]: scaling-law estimators of the Hurst exponent
//!   (Higuchi, madogram, variogram, rescaled range, DFA, Whittle).
//! * [`neural`]: a small LSTM regression network trained on synthetic
//!   trajectories, together with its optimizer and serialization format.
//!
//! [`eval`] computes error reports and benchmark matrices over labelled
//! trajectory sets, and [`io`] holds the on-disk formats shared by the
//! command line tool.

pub mod classical;
pub mod error;
pub mod eval;
pub mod generators;
pub mod io;
pub mod neural;
pub mod process;
pub mod seed;
pub mod trajectory;

pub use error::{Error, Result};
pub use process::{fgn_autocov, FbmParams, FouParams, LfsmParams, ProcessKind, ProcessParams};
pub use seed::SeedScheme;
pub use trajectory::{Trajectory, TrajectoryMeta};
