//! Dense reverse-mode automatic differentiation.
//!
//! The models in this crate are small (molecules rarely exceed a hundred
//! heavy atoms), so everything is a dense row-major `f64` matrix. A
//! [`Tape`] records primitive operations as they run; [`Tape::backward`]
//! replays them in reverse to produce gradients of a scalar with respect to
//! every registered leaf.
//!
//! Dropout is not a primitive with internal randomness: masks are sampled by
//! the caller and applied with [`Tape::apply_mask`], which keeps any taped
//! computation deterministic and therefore checkable by finite differences
//! (see [`grad_check`]).
//!
//! ```
//! use graphsal::autodiff::{Tape, Tensor};
//!
//! let mut tape = Tape::new();
//! let x = tape.leaf(Tensor::from_rows(&[vec![1.0, 2.0, 3.0]])?);
//! let sq = tape.mul(x, x)?;
//! let y = tape.sum_all(sq)?;
//! let grads = tape.backward(y)?;
//! assert_eq!(grads.get(x).unwrap().data(), &[2.0, 4.0, 6.0]);
//! # Ok::<(), graphsal::autodiff::AutodiffError>(())
//! ```

mod check;
mod tape;
mod tensor;

pub use check::{grad_check, relative_error};
pub use tape::{sigmoid, Gradients, Tape, Var};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("{op}: shape mismatch between {left:?} and {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: [usize; 2],
        right: [usize; 2],
    },
    #[error("{op}: non-finite value at flat index {index}")]
    NonFinite { op: &'static str, index: usize },
    #[error("tensor of shape {shape:?} needs {} values, got {len}", shape[0] * shape[1])]
    DataLength { shape: [usize; 2], len: usize },
    #[error("ragged rows: expected {expected} columns, found {found}")]
    RaggedRows { expected: usize, found: usize },
    #[error("{op}: row index {index} out of range for {rows} rows")]
    RowIndex {
        op: &'static str,
        index: usize,
        rows: usize,
    },
    #[error("dropout mask entry {index} is not 0 or 1")]
    NonBinaryMask { index: usize },
    #[error("backward needs a 1x1 output, got {0:?}")]
    NotScalar([usize; 2]),
    #[error("variable {0} is not on this tape")]
    UnknownVar(usize),
}
