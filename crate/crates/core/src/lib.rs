//! Proxy-utility optimization in a resource-constrained attribute space.
//!
//! A principal cares about `L` attributes of the world through a utility
//! `U`, subject to a resource constraint `C(s) <= 0` and lower bounds `b`.
//! An agent optimizes a proxy that only references a subset of attributes.
//! This crate simulates that interaction and checks, empirically, when proxy
//! optimization destroys utility and which protocols prevent it.
//!
//! Modules:
//! - [`model`]: environments, states, proxies, separable function catalog.
//! - [`robots`]: single-step agent behaviors (fixed proxy, impact-minimizing,
//!   efficient, adversarial).
//! - [`principal`]: principal policies emitting proxies or `Off`.
//! - [`sim`]: the interaction protocol and trajectory recording.
//! - [`analysis`]: oracles, overoptimization detection, condition checks, sweeps.

pub mod analysis;
pub mod format;
pub mod model;
pub mod principal;
pub mod robots;
pub mod sim;

pub use model::{Environment, ModelError, ProxySpec, SeparableFunction, StateVector, TermSpec};
pub use principal::{Directive, PolicyKind, PrincipalPolicy};
pub use robots::{RobotError, RobotKind, RobotStep, StepOutcome};
pub use sim::{Event, SimConfig, SimError, Termination, Trajectory};
