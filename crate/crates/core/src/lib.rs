//! Heisenberg-group dynamics laboratory.
//!
//! Building blocks, roughly bottom-up:
//!
//! * [`heis`] — exact group arithmetic, lattices `Γ_k`, the left-invariant
//!   frame and metric estimates, projections, `exp`/`log`.
//! * [`auto`] — the automorphism-matrix group `G`, automorphisms from
//!   derivatives, diagonal normal forms, lattice preservation, algebraic
//!   parts.
//! * [`dynamics`] — perturbed automorphisms as lifts, derivative cocycles in
//!   the frame, invariant-splitting and constants estimation, invariant
//!   curves, and the quantitative verification suites.
//! * [`conjugacy`] — the semiconjugacy to the induced toral automorphism,
//!   center-leaf tests, the section of the fiber projection, the normalized
//!   center flow and the equivariant leaf conjugacy.
//! * [`scenario`] / [`report`] — the JSON interfaces consumed by the CLI.

pub mod auto;
pub mod conjugacy;
pub mod dynamics;
pub mod error;
pub mod heis;
pub mod linalg;
pub mod report;
pub mod scenario;

pub use auto::{
    algebraic_part, conjugate_to_diagonal, from_derivative, is_partially_hyperbolic,
    lattice_normalizer, preserves_lattice, swap_automorphism, GMatrix, HAutomorphism, PhCheck,
};
pub use dynamics::{FrameSplitting, NilDiffeo, PHConstants, Perturbation, PerturbationTerm};
pub use error::{Error, Result};
pub use heis::{
    exp_h, frame_coords, frame_to_ambient, log_h, path_length, proj_plane, proj_s, proj_u,
    BoxRegion, FrameVector, HPoint, Lattice, LatticeElement,
};
pub use scenario::Scenario;
