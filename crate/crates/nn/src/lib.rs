//! A small G-CNN stack: lifting and group convolutions, pooling, dense
//! layers, standard and equivariant sampling layers, trained with a
//! hand-written reverse pass.

pub mod error;
pub mod gradcheck;
pub mod layer;
pub mod manifest;
pub mod model;
pub mod params;

pub use error::NnError;
pub use gradcheck::{grad_check, rel_error, BlockCheck, GradCheckReport};
pub use layer::LayerSpec;
pub use manifest::Manifest;
pub use model::{Model, SamplingMode, Signal, Tape};
pub use params::{Adam, Grads, LayerParams, Params};
