use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape error in {what}: expected {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("topology error: {msg} (elements {elements:?})")]
    Topology { msg: String, elements: Vec<usize> },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("inverted or degenerate element {element} (J = {jacobian:e})")]
    InvertedElement { element: usize, jacobian: f64 },

    #[error("non-physical material: {0}")]
    NonPhysical(String),

    #[error("indefinite Hessian: {0}")]
    IndefiniteHessian(String),

    #[error("coefficient evaluation failed at ({}, {}, {}): {msg}", x[0], x[1], x[2])]
    Field { x: [f64; 3], msg: String },

    #[error("{what} did not converge after {iterations} iterations")]
    Convergence { what: String, iterations: usize },

    #[error("non-finite value in element {element} at t = {time:e}")]
    NonFinite { element: usize, time: f64 },

    #[error("setup error: {0}")]
    Setup(String),

    #[error("size guard exceeded: {n} degrees of freedom > {max}")]
    SizeGuard { n: usize, max: usize },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
