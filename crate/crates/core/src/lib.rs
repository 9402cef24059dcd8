//! Barrier construction for a pendulum on a cart hanging from a cable that
//! can go slack.
//!
//! The crate computes the boundary of the admissible set, the states from
//! which some bounded cart force keeps the cable taut forever, by integrating
//! the state/costate system backwards from tangency points on `G0`.

pub mod config;
pub mod error;
pub mod export;
pub mod integrator;
pub mod intersection;
pub mod model;
pub mod ode;
pub mod pipeline;
pub mod setassembly;
pub mod tangency;

pub use error::{BarrierError, Result};
pub use model::{
    Adjoint, ConstrainedSystem, ControlInterval, ControlMode, Direction, FullState,
    HamiltonianMinimum, PendulumParams, ReducedState,
};
pub use config::RunConfig;
pub use integrator::{ArcEvent, ArcSample, BarrierArc, EventKind, IntegratorOptions, Termination, Window};
pub use intersection::StoppingPoint;
pub use ode::Tolerance;
pub use pipeline::{run, Construction};
pub use setassembly::{AdmissibleSetModel, BoundaryCurve, Component, CurveKind, MembershipTag, MembershipVerdict, Resolution};
pub use tangency::{ApproachSide, EndpointKind, TangencyPoint};
