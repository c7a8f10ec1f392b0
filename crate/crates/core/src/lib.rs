//! Exact group-equivariant subsampling and upsampling on periodic grids.
//!
//! The crate covers the finite groups p1, p4 and p4m (plus the 1D
//! translation group), feature maps on them and their subgroups, the
//! coset-valued sampling map Φ, subsampling/upsampling with the induced
//! action on sampled pairs, multi-layer chains with the tuple codec ν, and
//! the file formats shared with the rest of the workspace.

pub mod chain;
pub mod equisample;
pub mod error;
pub mod feature_map;
pub mod group;
pub mod io;
pub mod real;

pub use chain::{chain_subsample, mixed_radix, phi_all, ChainSample, CosetTuple, SubgroupChain};
pub use equisample::{
    act_sampled, coset_pool, phi, phi_with_rng, standard_subsample, subsample, subsample_at, upsample, Blur, CosetMap,
    PhiConfig, PhiOutcome, Pool, SampledPair, Subsampled, TiePolicy,
};
pub use error::{ChainError, GroupError, MapError, SampleError};
pub use feature_map::{act, act_on_image, extend, l1_field, lift, project_to_grid, restrict, FeatureMap, Permutation};
pub use group::{CosetId, GroupElement, GroupKind, GroupSpec, Subgroup};
pub use real::Real;
