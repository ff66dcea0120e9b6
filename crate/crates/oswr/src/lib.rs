//! Optimized Schwarz waveform relaxation for the 2D advection-reaction-diffusion
//! equation.

pub mod cli;
pub mod closedform;
pub mod error;
pub mod oracle;
pub mod problem;
pub mod symbol;
pub mod swr;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/convergence-factor.md")]
    mod convergence_factor {}
    #[doc = include_str!("../../../book/src/closed-form.md")]
    mod closed_form {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/swr.md")]
    mod swr {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
