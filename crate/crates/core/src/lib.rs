//! Cubic-to-trigonal martensite toolkit: strain wells, periodic strain
//! fields, discrete compatibility and structure classification.

pub mod classify;
pub mod compat;
pub mod field;
pub mod wells;

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/wells.md")]
    mod wells {}
    #[doc = include_str!("../../../book/src/fields.md")]
    mod fields {}
    #[doc = include_str!("../../../book/src/compatibility.md")]
    mod compatibility {}
    #[doc = include_str!("../../../book/src/classification.md")]
    mod classification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
