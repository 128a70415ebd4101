//! Case files, field output, CSV reports and the mesh file format.

mod config;
mod csv;
mod fvmesh;
mod vtk;


pub use config::{BcSpec, CaseConfig, ConfigError, MeshSpec, OutputConfig, SECTIONS};
pub use csv::{
    write_metrics_csv, write_metrics_csv_file, write_report_csv, write_report_csv_file, METRICS_CSV_HEADER,
    REPORT_CSV_HEADER,
};
pub use fvmesh::{read_fvmesh, read_fvmesh_file, write_fvmesh, write_fvmesh_file, FVMESH_VERSION};
pub use vtk::{write_vtk, write_vtk_file, VtkFields, VTK_HEXAHEDRON, VTK_POLYGON, VTK_POLYHEDRON, VTK_QUAD};

use crate::mesh::MeshError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("{0}")]
    Length(String),
}
