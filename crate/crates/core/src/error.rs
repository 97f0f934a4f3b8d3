//! Error type shared across the crate.

use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

use crate::train::TrainState;

#[derive(Debug)]
pub enum Error {
    /// A configuration value is out of range or inconsistent.
    Config(String),
    /// Two objects that must agree in shape do not.
    Dim(String),
    /// The matrix inverted inside the weight update is singular for
    /// the given user.
    SingularWeight { user: usize },
    /// The weight matrix passed to the surrogate objective is not
    /// positive definite for the given user.
    NotPositiveDefinite { user: usize },
    /// The loss evaluated to a non-finite value on the given sample.
    NonFiniteLoss { sample: usize },
    /// A gradient coordinate evaluated to a non-finite value; `param`
    /// names the offending coordinate.
    NonFiniteGradient { param: String },
    /// Training diverged; the boxed state is the last finite snapshot
    /// and can be saved or inspected.
    Diverged(Box<TrainState>),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Dim(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::SingularWeight { user } => {
                write!(f, "singular error matrix in weight update for user {user}")
            }
            Error::NotPositiveDefinite { user } => {
                write!(f, "weight matrix for user {user} is not positive definite")
            }
            Error::NonFiniteLoss { sample } => {
                write!(f, "non-finite loss on sample {sample}")
            }
            Error::NonFiniteGradient { param } => {
                write!(f, "non-finite gradient for parameter {param}")
            }
            Error::Diverged(_) => write!(f, "training diverged; last finite state attached"),
        }
    }
}

impl core::error::Error for Error {}
