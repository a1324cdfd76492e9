//! Kinematic simulator, constraint checker and motion planner for the
//! homeostatic wheel: a wheel driven through a three-servo articulated
//! linkage so that a continuous membrane can wrap body, shafts and wheel.
//! Bounded servo oscillations are rectified into unbounded wheel rotation
//! while the twist carried by every membrane segment stays bounded and
//! returns to zero whenever the servos do.
//!
//! * [`rotations`]: quaternion and matrix algebra, angle lifting.
//! * [`mechanism`]: servo ranges, clutch model, forward kinematics.
//! * [`tegument`]: twist ledger and integrity report.
//! * [`executor`]: trajectories, the 2n-turn routine, simulation, file formats.
//! * [`planner`]: rotation/distance plans and periodic gaits.
//! * [`scaling`]: size scaling laws and cost of transport.
//! * [`cli`]: the `hwheel` command line.

pub mod cli;
pub mod executor;
pub mod mechanism;
pub mod planner;
pub mod rotations;
pub mod scaling;
pub mod tegument;
