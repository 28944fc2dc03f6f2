//! Doc-test shim for the guide in `book/`.
//!
//! mdbook renders the chapters but cannot run their code against a
//! dependency, so each chapter is included here as module
//! documentation and `cargo test` compiles every fenced Rust block as
//! a doctest.  One module per chapter keeps a failing snippet
//! traceable to its file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/potentials.md")]
pub mod potentials {}

#[doc = include_str!("../../../book/src/forward-problem.md")]
pub mod forward_problem {}

#[doc = include_str!("../../../book/src/locating-zeros.md")]
pub mod locating_zeros {}

#[doc = include_str!("../../../book/src/product-models.md")]
pub mod product_models {}

#[doc = include_str!("../../../book/src/transformation-kernels.md")]
pub mod transformation_kernels {}

#[doc = include_str!("../../../book/src/reconstruction.md")]
pub mod reconstruction {}

#[doc = include_str!("../../../book/src/stability-envelopes.md")]
pub mod stability_envelopes {}

#[doc = include_str!("../../../book/src/command-line.md")]
pub mod command_line {}
