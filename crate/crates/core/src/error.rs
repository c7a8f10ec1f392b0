use thiserror::Error;

use crate::group::GroupSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error("unknown group name `{0}` (expected z1, p1, p4 or p4m)")]
    UnknownGroup(String),
    #[error("grid period must be positive")]
    ZeroPeriod,
    #[error("elements belong to different groups: {0} vs {1}")]
    Mismatch(GroupSpec, GroupSpec),
    #[error("element not in group: {0}")]
    NotInGroup(String),
    #[error("stride {stride} does not divide grid period {size}")]
    StrideNotDividing { stride: u32, size: u32 },
    #[error("invalid subgroup: {0}")]
    InvalidSubgroup(String),
    #[error("bad group element literal `{literal}`: {reason}")]
    Literal { literal: String, reason: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("expected {expected} values, got {actual}")]
    Length { expected: usize, actual: usize },
    #[error("feature map contains a non-finite value at position {0}")]
    NonFinite(usize),
    #[error("channel count must be positive")]
    ZeroChannels,
    #[error("domain mismatch: {0}")]
    Domain(String),
    #[error("element {0} does not belong to the map's domain")]
    ElementOutsideDomain(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SampleError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("invalid phi configuration: {0}")]
    Config(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error("chain syntax error at token {index} (`{token}`): {reason}")]
    Syntax { index: usize, token: String, reason: String },
    #[error("chain is not nested at layer {0}")]
    NotNested(usize),
    #[error("coset tuple does not match the chain: {0}")]
    Tuple(String),
    #[error("chain must end in the trivial subgroup")]
    NotTrivial,
}
