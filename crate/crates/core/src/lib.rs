//! Numerical laboratory for the Gaussian-pair renormalization of
//! one-dimensional spin potentials: the renormalization map, coarse-grained
//! Hamiltonians via a Cramér representation, covariance kernels and
//! asymmetric Brascamp–Lieb bounds, small hierarchical ensembles and
//! finite-volume spectral gaps.

pub mod covkernel;
pub mod cramer;
pub mod ensemble;
pub mod error;
pub mod interval;
pub mod measure1d;
pub mod potential;
pub mod quad;
pub mod renorm;
pub mod spectral;
pub mod spline;

pub use error::{Error, Result};
pub use interval::Interval;
pub use measure1d::{Moments, OneDMeasure, QuadConfig};
pub use potential::{catalog, PotentialSpec, SingleSite, SplittingReport};
