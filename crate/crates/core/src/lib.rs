//! Handover probability in a network of mobile aerial base stations serving
//! a static ground user.
//!
//! Drone base stations start as a homogeneous Poisson point process and fly
//! along straight lines in uniformly random directions; the user always
//! associates with the nearest drone. This crate provides two independent
//! engines for the probability that the serving drone has changed at least
//! once by time `t`:
//!
//! * [`analytic`] — nested adaptive quadrature over the closed-form integral
//!   expressions: exact for the same-speed model (SSM, one shared constant
//!   speed), a lower bound for the different-speed model (DSM, i.i.d. random
//!   speeds), plus the radial density of non-serving drones after
//!   displacement;
//! * [`montecarlo`] — an exact-event simulator that root-solves the
//!   squared-distance crossings per realization, with no time
//!   discretization, and reports confidence intervals.
//!
//! The engines share nothing beyond the speed laws and elementary geometry,
//! so their agreement is a meaningful cross-validation; the `acceptance`
//! integration test drives both at the same parameter points.

pub mod analytic;
pub mod geometry;
pub mod montecarlo;
pub mod quad;
pub mod speed;

pub use analytic::{AnalyticError, AnalyticInputs};
pub use geometry::{DroneState, GeometryError, PlanarPoint};
pub use montecarlo::{HandoverCurve, McError, RadialDensityHistogram, Realization, SimConfig};
pub use quad::{IntegralEstimate, QuadError, QuadratureSpec};
pub use speed::{SpeedDistribution, SpeedError};

/// Exact unit conversions used at configuration boundaries; the engines
/// themselves work in meters, seconds, and points per square meter.
pub mod units {
    /// Kilometers per hour to meters per second.
    pub fn kmh_to_ms(v: f64) -> f64 {
        v / 3.6
    }

    /// Points per square kilometer to points per square meter.
    pub fn per_km2_to_per_m2(density: f64) -> f64 {
        density * 1e-6
    }
}
