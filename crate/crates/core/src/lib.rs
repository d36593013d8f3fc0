//! Supervision machinery for best-buddy super-resolution.
//!
//! - [`imagekit`]: image tensors, bicubic resampling, PNG I/O
//! - [`patchcore`]: GT pyramids, patch databases, exact best-buddy search
//! - [`lossfns`]: best-buddy, back-projection, perceptual and RaGAN losses
//! - [`regionmask`]: texture masks from windowed standard deviation
//! - [`toylab`]: the Swiss-roll one-to-many regression study
//! - [`cli`]: the `buddykit` command-line front end
//!
//! See the crate's `examples/` directory for one runnable program per capability.

pub mod cli;
pub mod error;
pub mod imagekit;
pub mod lossfns;
pub mod patchcore;
pub mod regionmask;
pub mod synth;
pub mod toylab;

pub use error::{Error, Result};
pub use imagekit::{ImageTensor, ResampleSpec};
pub use patchcore::{BuddyAssignment, BuddyProblem, BuddySearchConfig, PatchDatabase, PatchGrid, SearchMode};
