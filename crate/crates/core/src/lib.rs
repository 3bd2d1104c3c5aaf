//! Laplace-Dirichlet spectra of binary 2D/3D shapes and the weighted spectral
//! distance family built on them.

pub mod cli;
pub mod distances;
pub mod eigensolver;
pub mod embedding;
pub mod error;
pub mod geometry;
pub mod laplacian;
pub mod retrieval;
pub mod synth;

pub use distances::{distance, nwesd, shape_dna_distance, wesd, DistanceParams, DistanceReport, Metric};
pub use eigensolver::{smallest_eigenvalues, weyl_asymptote, Normalisation, SolverOptions, Spectrum};
pub use embedding::{isomap, pairwise_matrix, procrustes_rms, AffinityMatrix, Embedding};
pub use error::{Error, Result};
pub use geometry::{BinaryDomain, GridIsometry};
pub use laplacian::SparseOperator;
pub use retrieval::{evaluate, LabeledDataset, RetrievalScores};
