//! Group-equivariant autoencoders on sprite images: architectures and
//! baselines, the sprite dataset, training, out-of-distribution evaluation,
//! latent manipulation and the verification suite.

pub mod arch;
pub mod dataset;
pub mod demo;
pub mod error;
pub mod eval;
pub mod train;
pub mod verify;

pub use arch::{rescaled_channels, Autoencoder, LatentCode, Variant, Widths};
pub use dataset::{Constraint, Dataset, Placement};
pub use demo::{demo_fig1, fig1_csv, fig1_trace, manipulate, swap_invariant, Fig1Panel};
pub use error::GaeError;
pub use eval::{eval_ood, evaluate_cells, summarize, OodCell, OodSummary};
pub use train::{load_model, save_model, train, SavedModel, TrainConfig, TrainReport};
pub use verify::{verify, Check, Report, Sampler, VerifyConfig};
