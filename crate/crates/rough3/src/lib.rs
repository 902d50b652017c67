//! Level-3 rough path numerics.
//!
//! This crate implements the calculus of third-level rough paths on time
//! grids: the truncated tensor algebra T³(ℝᵈ), grid rough paths with exact
//! Chen relations, controlled paths and their remainders, compensated-sum
//! rough integration, a Davie-type RDE solver with a Picard cross-check,
//! mixed fractional-Brownian × Brownian drivers built through an anisotropic
//! extension map, and a slow-fast averaging experiment driven by the mixed
//! rough path.
//!
//! The building blocks are organised bottom-up:
//!
//! * [`tensor`] — arithmetic in T³(V): Chen product, dilation, segment
//!   exponentials, antipode.
//! * [`roughpath`] — grid rough paths, lifts of sampled paths, Hölder norms,
//!   Chen/shuffle residual checks.
//! * [`controlled`] — controlled paths (Y, Y†, Y††), remainders, composition
//!   with smooth maps, concatenation.
//! * [`integrate`] — compensated Riemann sums and the rough integral.
//! * [`rde`] — RDEs with drift, explicit step scheme and grid Picard
//!   iteration, stability functional.
//! * [`drivers`] — fractional Brownian motion (circulant embedding), Brownian
//!   motion, Itô cross integrals, reproducible seeding.
//! * [`anisotropic`] — anisotropic rough paths, the extension map producing a
//!   full level-3 rough path over ℝ^{d+e}, dyadic Kolmogorov majorants.
//! * [`slowfast`] — the slow-fast system, frozen SDE, averaged drift and the
//!   averaging experiment.
//! * [`io`] — CSV file formats used by the command-line tool.
//!
//! Everything is `f64`, deterministic given a root seed, and safe to run from
//! multiple threads; Monte Carlo loops parallelise internally with rayon and
//! reduce in a fixed order so results do not depend on the worker count.

pub mod anisotropic;
pub mod controlled;
pub mod drivers;
pub mod error;
pub mod integrate;
pub mod io;
pub mod norms;
pub mod rde;
pub mod roughpath;
pub mod slowfast;
pub mod tensor;

pub use error::Error;
pub use roughpath::GridRoughPath;
pub use tensor::Tensor3;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
