//! Online symbolic model learning by variation and selection.
//!
//! The crate covers three-valued state variables and their learner, a
//! backward-chaining planner, a two-cell FSM test environment, typed graph
//! networks with refinement, the graph-sourced classifier built on them, and
//! an image-to-graph feature pipeline.

pub mod error;
pub mod export;
pub mod fsm;
pub mod learner;
pub mod mnist;
pub mod mnr;
pub mod planner;
pub mod scalar;
pub mod significance;
pub mod spn;
pub mod vision;
pub mod sv;

pub use error::{Error, Result};
pub use learner::{Learner, LearnerConfig, StepEvent, StepRecord};
pub use scalar::Scalar;
pub use significance::NceStats;
pub use sv::{BsvId, CsvId, DsvId, EventKind, Model, SourceId, SvId, SvState, TargetId, Unconditionality};
pub use mnr::{MnrConfig, MnrModel};
pub use spn::{AssignConfig, StatePolynetwork};

pub type Spn = spn::StatePolynetwork<f64>;
pub type SpnF32 = spn::StatePolynetwork<f32>;
pub type Mnr = mnr::MnrModel<f64>;
pub type MnrF32 = mnr::MnrModel<f32>;
