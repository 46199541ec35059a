//! Sparse storage, the pencil type and Matrix Market ingestion.

mod market;
mod pencil;
mod sparse;

pub use market::{parse_matrix_market, read_matrix_market, write_matrix_market};
pub use pencil::{Pencil, PencilOperator};
pub use sparse::{spmm, SparseMatrix};
