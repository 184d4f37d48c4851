//! Dimer covers of periodic bipartite planar graphs: enumeration, Gibbs
//! measures, Kasteleyn determinants, surface tension, Monte Carlo sampling
//! and the variational limit-shape problem.

pub mod calculus;
pub mod covers;
pub mod error;
pub mod geometry;
pub mod gibbs;
pub mod io;
pub mod kasteleyn;
pub mod lattice;
pub mod mesh;
pub mod montecarlo;
pub mod varsolve;

pub use covers::{DimerCover, HeightFunction, NewtonPolygon};
pub use error::{DimerError, Result};
pub use calculus::ContinuumBoundary;
pub use gibbs::{BoundaryCondition, WeightSystem};
pub use kasteleyn::{LaurentPolynomial2, SurfaceTensionTable};
pub use lattice::{Color, FundamentalDomain, Graph, GraphWithBoundary, TorusGraph};
pub use mesh::{AsymptoticHeightField, Mesh};
pub use montecarlo::GlauberChain;
pub use varsolve::VariationalProblem;
