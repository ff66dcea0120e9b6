//! Space-time discretization, decomposition and the Schwarz waveform
//! relaxation iteration.

mod decompose;
mod field;
mod krylov;
mod kron;
mod solver;
mod subdomain;
mod tridiag;

pub use decompose::{decompose, decompose_cells, Decomposition, Edge, InterfaceDesc, Subdomain};
pub use field::{IterationLog, SpaceTimeField};
pub use krylov::{gmres, krylov_accelerate, swr_gmres, GmresOutcome};
pub use kron::{BandedLu, KronOp, Separable, StepSolver};
pub use solver::{monodomain_reference, swr_solve, InitialFn, SourceFn, SwrOptions, SwrRun, SwrStatus};
pub use subdomain::{
    check_explicit, discretize_monodomain, step_ops, subdomain_step_matrix, AxisOps, EndKind, InterfaceParams,
    LocalSystem, MonodomainOperator, StepOps,
};
pub use tridiag::{ThomasLu, Tridiag};

use serde::{Deserialize, Serialize};

/// Time marching scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Backward Euler.
    Implicit,
    /// Forward Euler with lumped mass.
    Explicit,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Implicit => "implicit",
            Scheme::Explicit => "explicit",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "implicit" => Ok(Scheme::Implicit),
            "explicit" => Ok(Scheme::Explicit),
            _ => Err(crate::Error::Config(format!("unknown scheme '{s}'"))),
        }
    }
}
