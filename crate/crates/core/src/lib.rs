//! Game-theoretic motion planning for mixed traffic.
//!
//! The crate plans the motion of an ego vehicle that shares the road with
//! other vehicles and pedestrians. Two planners are provided:
//!
//! * [`nash_planner`]: a discrete search planner. Every agent gets a small
//!   fan of candidate displacements per tick, the joint choices are scored
//!   into a payoff tensor, and the planner picks a pure-strategy Nash
//!   equilibrium of that tensor (with a minimum-regret fallback when no
//!   pure equilibrium exists). A separate longitudinal rule adjusts the ego
//!   speed around predicted conflict points.
//! * [`dmpc_planner`]: a distributed MPC baseline. Two agents repeatedly
//!   solve single-agent optimal control problems against each other's
//!   latest predicted trajectory until their control sequences stop
//!   changing.
//!
//! [`sim`] closes the loop: non-ego agents replay their game moves with
//! heading noise, the ego tracks its plan with a pure-pursuit controller on
//! a kinematic bicycle model, and per-tick records feed the trace writers
//! in the CLI crate.

pub mod agents;
pub mod costs;
pub mod dmpc_planner;
pub mod game;
pub mod geometry;
pub mod nash_planner;
pub mod sim;
pub mod speed;

pub use agents::{AgentSpec, AgentState, BicycleInput, BicycleParams, Role, SearchParams};
pub use game::{EquilibriumKind, EquilibriumResult, GameError, PayoffTensor};
pub use geometry::{GeometryError, Point2, Polyline, Vec2};
