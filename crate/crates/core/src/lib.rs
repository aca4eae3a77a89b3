//! Combinatorics of refined limit linear series on chains of elliptic curves.
//!
//! A series is recorded by its table of vanishing orders ([`VanishingTable`]).
//! From it we build the tensor-square table, choose unimaginative
//! multidegrees, extract potentially appearing sections and try to eliminate
//! them with the dropping rules, producing a replayable certificate.

pub mod chain;
pub mod drop;
pub mod enumerate;
pub mod error;
pub mod family;
pub mod multidegree;
pub mod render;
pub mod table;
pub mod tensor;
pub mod verify;

pub use chain::ChainCurve;
pub use drop::{DropCertificate, DropContext, DropOutcome, Rule, Step};
pub use enumerate::{Enumerator, Params, SwapFilter};
pub use error::{Error, Result};
pub use family::{verify_family, Checkpoint, FamilyConfig, Mode, Report, Sink, Stratum};
pub use multidegree::{candidate_multidegrees, default_multidegree, twist_vanishing_components, TwistVector};
pub use table::{DegeneracyClass, LambdaSequence, RhoBreakdown, Swap, VanishingTable};
pub use tensor::{spanning_count, PotentialSection, TensorTable};
pub use verify::{verify_table, SideCondition, Verdict, VerifyConfig};
