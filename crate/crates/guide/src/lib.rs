// Each chapter of book/ becomes a module doc, so `cargo test` runs every code
// block in the book. A failure names the chapter module.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/denoisers.md")]
pub mod denoisers {}
#[doc = include_str!("../../../book/src/kernels.md")]
pub mod kernels {}
#[doc = include_str!("../../../book/src/properties.md")]
pub mod properties {}
#[doc = include_str!("../../../book/src/decomposition.md")]
pub mod decomposition {}
#[doc = include_str!("../../../book/src/flow.md")]
pub mod flow {}
#[doc = include_str!("../../../book/src/inverse.md")]
pub mod inverse {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
