//! Integer constraint systems over significant-bit counts.

mod gen;
mod loops;
mod system;

pub use gen::{gen_ilp, gen_refined};
pub use system::*;

use crate::frontend::ControlPoint;
use crate::numerics::DEFAULT_P_MAX;

/// How loop-carried def-use links are weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoopModel {
    /// `nsb(def) ≥ nsb(use)` on every link. Loops whose body needs carry bits are infeasible.
    Plain,
    /// Back-edge links refund the bits the loop body demands per iteration; values leaving a
    /// loop gain `⌈log2 n⌉` bits for a loop whose condition ran `n` times.
    ExitSkew,
    /// As `ExitSkew`, and reads of a loop-carried variable inside its loop also gain `⌈log2 n⌉`.
    #[default]
    CarriedSkew,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct GenConfig {
    /// Lower bound on comparison operand widths.
    pub cond_nsb: u32,
    pub p_max: u32,
    pub loop_model: LoopModel,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            cond_nsb: 53,
            p_max: DEFAULT_P_MAX,
            loop_model: LoopModel::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConstraintError {
    #[error("no range recorded for {0}")]
    NoRange(ControlPoint),
    #[error("{point} was never executed but a requirement at {requirement} depends on it")]
    Unvisited {
        point: ControlPoint,
        requirement: ControlPoint,
    },
}
