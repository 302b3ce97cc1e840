//! Geometric kinematic control of a two-wheel-driven spherical rolling
//! robot.
//!
//! The configuration space is the trivial principal bundle
//! `SO(3) x R^2 x T^2 -> T^2`: wheel angles `(phi1, phi2)` are the shape,
//! the sphere's orientation and the contact point in the plane are the
//! group fiber. Rolling without slipping or spinning loss makes the wheel
//! rates a connection on that bundle. The crate exposes
//!
//! - [`kinematics`]: the constrained equations of motion and an RK4
//!   integrator that stays on SO(3);
//! - [`connection`]: the local connection form, its curvature, and a
//!   rank certificate for fiber controllability;
//! - [`holonomy`]: closed-form translational and rotational holonomy of
//!   rectangular shape-space loops, with numeric cross-checks;
//! - [`elliptic`]: incomplete elliptic integrals and Jacobi amplitude
//!   functions used by the exact optimal solution;
//! - [`optimal_control`]: the PMP extremal system for minimum-energy wheel
//!   controls, its first integrals, the pendulum reduction solved by
//!   elliptic functions, and a multistart shooting solver;
//! - [`io`]: parameter files and CSV trajectory persistence;
//! - [`geometry`]: small SO(3)/so(3) helpers shared by the above.
//!
//! Heavy grid and multistart computations run data-parallel through
//! [`exec`] when the default `parallel` feature is enabled; every such
//! entry point has a `_serial` twin with identical results.

pub mod connection;
pub mod elliptic;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod holonomy;
pub mod io;
pub mod kinematics;
pub mod optimal_control;

pub use error::{Error, Result};
pub use kinematics::{Pose, RobotParams, ShapeState, Trajectory};
