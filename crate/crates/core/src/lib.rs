//! Moment maps, gradient flows of the moment-map norm square, and orbit
//! verdicts for `GL_n`-actions on Lie brackets.
//!
//! The flow of `F(v) = ||m̃(v)||²/|v|⁴` on the unit sphere finds the critical
//! points of the projectivized moment map; for nilpotent brackets these are
//! exactly the nilsoliton metrics. The Kempf–Ness flow under `SL_n(R)` finds
//! minimal vectors, which exist precisely in closed orbits.

pub mod bracket;
pub mod catalog;
pub mod error;
pub mod flow;
pub mod linalg;
pub mod moment;
pub mod orbit;
pub mod par;
pub mod random;

pub use bracket::{AlgebraInvariants, Bracket, ComplexBracket};
pub use error::{Error, Result};
pub use flow::{FlowConfig, FlowResult, FlowStatus};
pub use moment::{ActionModel, CriticalCertificate, GroupTag, MomentValue};
pub use par::Execution;
