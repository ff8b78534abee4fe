//! Numerical laboratory for oscillation rigidity on the flat torus T^n = R^n/Z^n.
//!
//! A 1-Lipschitz function on a high-dimensional torus is nearly constant on
//! some low-dimensional coordinate subtorus chosen uniformly at random. This
//! crate implements every ingredient of that statement at desk scale:
//!
//! * [`torus`] — wrapped coordinates, geodesic distance, coordinate-subtorus
//!   embedding, and isometric charts inside the injectivity radius.
//! * [`zoo`] — a catalog of locally-Lipschitz test functions with analytic
//!   gradients, declared Lipschitz constants, and gradient p-norm estimation.
//! * [`bounds`] — the parameter arithmetic: admissible subtorus dimension,
//!   the coordinate threshold δ, log-space inequality diagnostics, and exact
//!   hypergeometric avoidance probabilities.
//! * [`sampling`] — counter-based, thread-count-independent randomness for
//!   subsets, subtori, balls, and chord points.
//! * [`projection`] — exact and Monte Carlo moments of random coordinate
//!   projections, and restricted gradient p-norms over random subtori.
//! * [`oscillation`] — certified two-sided enclosures of Osc(f; M) by
//!   Lipschitz grid bounds and branch-and-bound refinement.
//! * [`morrey`] — polygonal chaining paths, the chord-sampling density and
//!   its q-norm, and Monte Carlo verification of the Morrey-type bound.
//! * [`harness`] — experiment orchestration, reproducible configs, and
//!   CSV/JSON result records.
//!
//! The `examples/` directory holds one runnable program per capability; the
//! `torus-rigidity` binary exposes the same machinery as subcommands.

pub mod bounds;
pub mod combinat;
pub mod error;
pub mod harness;
pub mod morrey;
pub mod oscillation;
pub mod projection;
pub mod sampling;
pub mod stats;
pub mod torus;
pub mod zoo;

pub use error::{Error, Result};
pub use torus::{Chart, Segment, SubtorusSpec, TorusPoint};
pub use zoo::FunctionSpec;
