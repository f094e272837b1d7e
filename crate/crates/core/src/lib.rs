//! Simulation toolkit for distributed action coordination with noisy
//! observations: probability utilities, strong typicality, random-codebook
//! coordination codes, rate-region solvers and a Monte Carlo harness.

pub mod coding;
pub mod harness;
pub mod probkit;
pub mod region;
pub mod rng;
pub mod source;
pub mod typicality;

pub use coding::{ErrorCase, MarkovLaw, Scheme};
pub use probkit::{CondPmf, JointPmf, JointPmf3, JointType, Pmf};
pub use source::{draw_actions, ActionDraw, SourceConfig};
