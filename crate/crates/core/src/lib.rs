//! Formation control for equal-radius disk robots in the plane, driven by the
//! angles each robot subtends on its neighbors' disks.
//!
//! * [`graph`]: topology and incidence matrix.
//! * [`sensing`]: tangent-point bearings and the cosine/distance relation.
//! * [`rigidity`]: distance and angle rigidity functions, Jacobians, rank tests.
//! * [`control`]: barrier potential and the gradient control law.
//! * [`simulator`]: RK4 closed loop with contact-aware step halving.
//! * [`analysis`]: sublevel-set parameters, spectral bounds, rate fits.
//! * [`realization`]: target positions from desired edge lengths.
//! * [`scenario`], [`trace_io`]: scenario files and trace CSV.

pub mod analysis;
pub mod control;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod realization;
pub mod rigidity;
pub mod scenario;
pub mod sensing;
pub mod simulator;
pub mod trace_io;

pub use control::{AngleConstraint, ConstraintSet, ControllerKind};
pub use error::{FormationError, Result};
pub use graph::FormationGraph;
pub use rigidity::Configuration;
pub use simulator::{Scenario, SimulationTrace};
