//! Shared tolerance ladder.

use serde::{Deserialize, Serialize};

/// Algebraic identities on directly constructed objects.
pub const EXACT: f64 = 1e-10;
/// Identities on composed pipelines (polar factors, conjugators, gluing).
pub const COMPOSED: f64 = 1e-8;
/// Lifts obtained by integrating the transport ODE or by finite differences.
pub const TRANSPORT: f64 = 1e-5;
/// Threshold below which a fiber matrix counts as singular.
pub const MIN_SINGULAR: f64 = 1e-8;
/// Finite-difference step for Jacobians and projector derivatives.
pub const FD_STEP: f64 = 1e-6;
/// Default number of transport steps.
pub const DEFAULT_STEPS: usize = 1024;

/// Tolerances used when turning residuals into verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub exact: f64,
    pub transport: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            exact: EXACT,
            transport: TRANSPORT,
        }
    }
}

/// Which rung of the ladder a construction is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Exact,
    Transport,
}

impl Tier {
    pub fn tolerance(self, tol: &Tolerances) -> f64 {
        match self {
            Tier::Exact => tol.exact,
            Tier::Transport => tol.transport,
        }
    }

    pub fn max(self, other: Tier) -> Tier {
        if self == Tier::Transport || other == Tier::Transport {
            Tier::Transport
        } else {
            Tier::Exact
        }
    }
}
