pub mod binary;
pub mod construction;
pub mod error;
pub mod guttman;
pub mod io;
pub mod model;
pub mod oracle;
pub mod response;

pub use error::{Error, Result};
pub mod estimation;
pub mod simulation;
pub mod verification;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    struct Readme;
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/families.md")]
    struct Families;
    #[doc = include_str!("../../../book/src/dichotomization.md")]
    struct Dichotomization;
    #[doc = include_str!("../../../book/src/guttman.md")]
    struct Guttman;
    #[doc = include_str!("../../../book/src/construction.md")]
    struct Construction;
    #[doc = include_str!("../../../book/src/verification.md")]
    struct Verification;
    #[doc = include_str!("../../../book/src/simulation.md")]
    struct Simulation;
    #[doc = include_str!("../../../book/src/estimation.md")]
    struct Estimation;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
