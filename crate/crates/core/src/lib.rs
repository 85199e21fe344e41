//! Input-guided multiple-deconstruction single-reconstruction networks for
//! non-negative matrix factorization.
//!
//! The model maps a non-negative data matrix `X` (m samples × n columns)
//! through `s` sigmoid hidden layers of strictly decreasing width down to a
//! slender layer of width `r`, and reconstructs `X` with a single ReLU layer.
//! Every hidden layer after the first additionally receives the raw input
//! through its own guidance matrix. The slender-layer activation is the
//! basis matrix `B` (m×r, entries in (0,1)) and the reconstruction weights
//! are the coefficient matrix `W` (r×n), so that `X ≈ ReLU(B·W)`.
//!
//! A single reconstruction layer is used deliberately: with several stacked
//! reconstruction layers the coefficient factor would only be recoverable
//! through a pseudoinverse of `B`, which is not unique for rectangular `B`.
//! One layer yields a unique `(B, W)` pair.
//!
//! Two variants are supported:
//!
//! * [`Variant::Nmf`]: `W` is kept entrywise non-negative by zeroing negative
//!   entries after every optimizer step.
//! * [`Variant::Rnmf`]: the relaxed variant; only `B` is constrained (by the
//!   sigmoid), `W` is free.
//!
//! Signed data is made non-negative by [`preprocess::fold`], which splits every
//! column into a positive-part and a negative-part column.

pub mod error;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod nmf;
pub mod preprocess;
pub mod training;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use model::{ArchitectureSpec, ForwardTrace, ModelParams, Variant};
pub use preprocess::{FoldedDataset, RawDataset};
pub use training::{AdamState, BatchMode, Gradients, StopReason, TrainConfig, TrainLog};
