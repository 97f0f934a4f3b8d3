//! Power allocation for multi-antenna (MIMO) interference channels.
//!
//! Implements the classical WMMSE block-coordinate-descent solver for
//! sum-rate maximization, its truncated variant, and an unfolded learnable
//! network that embeds two small graph convolutional networks inside the
//! truncated iteration. Training is unsupervised (the loss is the negated
//! mean sum-rate) and gradients come either from a built-in reverse-mode
//! tape or from central finite differences.
//!
//! The crate is `no_std`-compatible (`alloc` required); file formats, the
//! CLI and the benchmark harness live in the companion `uwmmse-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod channel;
pub mod csi;
pub mod error;
pub mod mat;
pub mod model;
pub mod real;
pub mod tape;
pub mod train;
pub mod wmmse;

pub use channel::{ChannelFamily, ChannelSpec, GeometricLayout};
pub use csi::{CsiTensor, LiftedCsi};
pub use error::Error;
pub use mat::Mat;
pub use model::{GcnParams, ModelParams, ReducedChannel, ReductionFilter};
pub use real::Real;
pub use tape::{Tape, Var};
pub use train::{GradientMethod, HistoryEntry, TrainConfig, TrainState};
pub use wmmse::{BeamformerSet, InterferenceMode, ProblemConfig, SolveTrace};
