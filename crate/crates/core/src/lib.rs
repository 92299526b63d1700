//! Simulation of a self-healing drone swarm searching for the point of
//! maximum concentration in a gas plume, together with an independent
//! spoke-and-chemotaxis baseline and the experiment harness that compares
//! them.

pub mod geom;
pub mod harness;
pub mod locus;
pub mod mobs;
pub mod numerics;
pub mod plume;
pub mod sim;
pub mod tree;

pub use geom::{Vec2, Vec3};
pub use sim::{run_trial, Algorithm, FailureModel, PlumeVariant, TrialConfig, TrialResult};
pub use tree::{SlotId, SwarmTree, TreeParams};
