pub mod conflict;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod graph;
pub mod learn;
pub mod pipeline;
pub mod sentiment;
pub mod terms;
pub mod text;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/conflict.md")]
    mod conflict {}
    #[doc = include_str!("../../../book/src/graph.md")]
    mod graph {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    mod reproducibility {}
}
