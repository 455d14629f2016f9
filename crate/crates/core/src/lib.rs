//! Numerical laboratory for metric graphs and their thickened neighbourhoods.
//!
//! A metric graph carries the standard (Kirchhoff) Laplacian; a family of
//! two-dimensional "graph-like" domains — edge tubes of width `eps` glued to
//! `eps`-scaled vertex templates — carries the Neumann Laplacian.  This crate
//! builds both sides, the identification operators between their L² spaces,
//! and every explicit constant entering the quantitative convergence
//! estimates, so that the O(eps^1/2) resolvent-convergence rate and the
//! supporting identities (Gaffney, Kato, trace, scaling) can be verified
//! numerically at desk scale.
//!
//! Module map:
//! - [`graph`]: metric graphs, Betti numbers, Euler index
//! - [`mg`]: Kirchhoff Laplacian, discrete exterior calculus, Dirac spectrum,
//!   secular-equation oracle
//! - [`mesh`]: vertex templates and conforming tube/template triangulations
//! - [`fem`]: P1 assembly and sparse/dense generalized eigensolvers
//! - [`ident`]: identification operators, defect norms, Hausdorff distances
//! - [`analysis`]: quadrature checks of the analytic identities
//! - [`consts`]: uniformity constants and the convergence rates

pub mod analysis;
pub mod consts;
pub mod fem;
pub mod graph;
pub mod ident;
pub mod mesh;
pub mod mg;
pub mod util;

pub use graph::{GraphError, GraphSpec, MetricGraph};
