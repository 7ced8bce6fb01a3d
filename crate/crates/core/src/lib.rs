//! Certifies Lyapunov stability of an equilibrium of `dx/dt = f(x)` by
//! extracting a shrinking, nested family of closed level hypersurfaces of a
//! scalar function `F` around the equilibrium and checking that the field
//! never points out of any of them: `<N(x), f(x)> >= 0` for the inward unit
//! normal `N` on every surface.
//!
//! The crate is organised bottom-up:
//!
//! * [`expr`] parses and differentiates the expressions defining `F` and `f`.
//! * [`geometry`] samples `F` on a grid and extracts closed level curves
//!   (2-D) and surfaces (3-D), with inside/outside predicates.
//! * [`certify`] decides quasi-isolation, builds nested families and
//!   evaluates the sign condition.
//! * [`dynamics`] integrates trajectories to look for counterexamples.
//! * [`config`] and [`pipeline`] tie the pieces together for the CLI.

pub mod expr;
pub mod geometry;
pub mod certify;
pub mod dynamics;
pub mod config;
pub mod pipeline;
