//! Command implementations behind the `rome` binary, exposed as a
//! library so integration tests can drive them in-process.

pub mod commands;
pub mod config;
pub mod ingest;
pub mod svg;

pub use commands::{cmd_ablate_alpha, cmd_evaluate, cmd_fit_em, cmd_fit_moe, cmd_simulate};

use rome_core::RomeError;

/// Process exit code for an error: 2 configuration, 3 data, 4 numerical.
pub fn exit_code(err: &RomeError) -> i32 {
    match err {
        RomeError::InvalidConfig(_) | RomeError::DimensionMismatch(_) => 2,
        RomeError::Data(_) => 3,
        RomeError::Numerical(_) | RomeError::Infeasible(_) | RomeError::DegenerateTest(_) => 4,
    }
}
