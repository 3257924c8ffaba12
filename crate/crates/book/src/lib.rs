//! The guide under `book/`, compiled so its snippets run as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/dynamics.md")]
pub mod dynamics {}
#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("../../../book/src/estimation.md")]
pub mod estimation {}
#[doc = include_str!("../../../book/src/testing.md")]
pub mod testing {}
#[doc = include_str!("../../../book/src/asc.md")]
pub mod asc {}
#[doc = include_str!("../../../book/src/self-consistency.md")]
pub mod self_consistency {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
