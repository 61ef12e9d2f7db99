pub mod chain;
pub mod eigen;
pub mod error;
pub mod graph;
pub mod means;
pub mod oracle;
pub mod robustness;
pub mod vertex_set;
pub mod walk;
pub mod weighting;

pub use error::{Error, Result};
pub use graph::{Graph, GraphKind};
pub use vertex_set::VertexSet;
