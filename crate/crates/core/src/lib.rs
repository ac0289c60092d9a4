pub mod geometry;
pub mod orca;
pub mod report;
pub mod spin;
pub mod tensor;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/tensors.md")]
    mod tensors {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/producer_output.md")]
    mod producer_output {}
    #[doc = include_str!("../../../book/src/spin_simulation.md")]
    mod spin_simulation {}
    #[doc = include_str!("../../../book/src/reports.md")]
    mod reports {}
}
