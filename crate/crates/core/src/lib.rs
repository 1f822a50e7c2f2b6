pub mod checks;
pub mod error;
pub mod ext;
pub mod field;
pub mod grid;
pub mod montecarlo;
pub mod ratefn;
pub mod rng;
pub mod spectral;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/scenery.md")]
    pub mod scenery {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    pub mod spectral {}
    #[doc = include_str!("../../../book/src/annealed.md")]
    pub mod annealed {}
    #[doc = include_str!("../../../book/src/quenched.md")]
    pub mod quenched {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    pub mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
