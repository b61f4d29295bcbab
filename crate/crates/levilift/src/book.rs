//! The user guide, included chapter by chapter so that every code block
//! in the book compiles and runs as a doctest of this crate.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/fields.md")]
pub mod fields {}

#[doc = include_str!("../../../book/src/root-data.md")]
pub mod root_data {}

#[doc = include_str!("../../../book/src/characters.md")]
pub mod characters {}

#[doc = include_str!("../../../book/src/data.md")]
pub mod data {}

#[doc = include_str!("../../../book/src/lifting.md")]
pub mod lifting {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
