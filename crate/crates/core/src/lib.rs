//! Numerical toolkit for the spherical pendulum seen as a bundle of invariant
//! 2-tori: energy-momentum classification, action-angle quadratures, Diophantine
//! frequency selection, a frequency-fixed Newton solver for perturbed tori, and
//! partition-of-unity gluing of per-chart torus correspondences.

pub mod action_angle;
pub mod diophantine;
pub mod embedding;
pub mod error;
pub mod fibration;
pub mod fourier;
pub mod freq;
pub mod geometry;
pub mod glue;
pub mod kam;
pub mod monodromy;
pub mod quad;
pub mod rng;
pub mod spline;

pub use error::{Error, Result};
