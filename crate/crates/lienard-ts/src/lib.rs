//! Periodic solutions of singular φ-Laplacian Liénard equations on
//! T-periodic time scales: Δ-calculus on hybrid continuous/discrete node
//! sets, the homotopy operator whose fixed points are the periodic
//! solutions, per-window continuation, hypothesis certification, and a
//! scenario-driven CLI.

pub mod catalog;
pub mod checker;
pub mod grid;
pub mod homotopy;
pub mod oracle;
pub mod output;
pub mod phi;
pub mod problem;
pub mod scenario;
pub mod timescale;

pub use grid::{GridFunction, InterpKind};
pub use homotopy::{homotopy_solve, multi_solve, SolveSettings, SolutionRecord};
pub use phi::{phi_inverse_relativistic, q_phi, PhiHomeomorphism, PhiKind};
pub use problem::{Problem, ScalarFn};
pub use timescale::{Cell, Mesh, TimeScale, TimeScaleError};
