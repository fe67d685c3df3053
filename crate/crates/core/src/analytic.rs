//! Numerical evaluation of the closed-form handover expressions.
//!
//! Three quantities are computed here, all by nested adaptive quadrature
//! with explicit truncation of infinite ranges:
//!
//! * the exact handover probability of the same-speed model, through two
//!   independent integral routes — the moving-observer form (conditioning on
//!   the initial serving distance and the direction of relative motion) and
//!   the exclusion-zone form (conditioning on the serving drone's own
//!   displacement and integrating the non-serving radial density). The two
//!   routes have different integrands but identical values, which the test
//!   suites exploit as a cross-check;
//! * the radial density of non-serving drones after displacement, together
//!   with its complement, the density contribution of drones that started
//!   inside the exclusion disc;
//! * a lower bound on the handover probability of the different-speed
//!   model, obtained from the marginal non-serving density.
//!
//! Probabilities are evaluated in cancellation-free form: the normalization
//! of the nearest-neighbor distance density is applied analytically, so the
//! integrand is `weight * (1 - exp(-mass))` and small probabilities retain
//! full relative accuracy.
//!
//! Truncation rules: radial integrals stop where the nearest-neighbor weight
//! `exp(-lambda0 pi r^2)` falls below `tail_mass_epsilon`; speed integrals
//! stop at the matching upper quantile (or the exact support bound). Every
//! arc-cosine argument is the cosine of a triangle angle and is clamped to
//! `[-1, 1]` against floating-point rounding.

use std::f64::consts::PI;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::lens_area;
use crate::quad::{integrate, QuadratureSpec};
use crate::speed::SpeedDistribution;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("density must be positive and finite, got {0}")]
    InvalidDensity(f64),
    #[error("time must be non-negative and finite, got {0}")]
    InvalidTime(f64),
    #[error("time must be positive, got {0}; use initial_nonserving_density at t = 0")]
    NonpositiveTime(f64),
}

/// Everything needed to evaluate the analytic expressions at one time point:
/// fleet density, elapsed time, speed law, and quadrature budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticInputs {
    pub lambda0: f64,
    pub t: f64,
    pub speed: SpeedDistribution,
    pub quad: QuadratureSpec,
}

impl AnalyticInputs {
    pub fn new(
        lambda0: f64,
        t: f64,
        speed: SpeedDistribution,
        quad: QuadratureSpec,
    ) -> Result<Self, AnalyticError> {
        if !(lambda0 > 0.0 && lambda0.is_finite()) {
            return Err(AnalyticError::InvalidDensity(lambda0));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(AnalyticError::InvalidTime(t));
        }
        Ok(Self {
            lambda0,
            t,
            speed,
            quad,
        })
    }
}

/// Radius beyond which the nearest-neighbor weight `exp(-lambda0 pi r^2)`
/// carries less than `tail_eps` probability mass.
pub fn tail_truncation_radius(lambda0: f64, tail_eps: f64) -> f64 {
    ((1.0 / tail_eps).ln() / (lambda0 * PI)).sqrt()
}

/// Density of non-serving drones at time zero: the fleet density outside the
/// exclusion disc of radius `u_star`, zero inside (the boundary belongs to
/// the exclusion zone).
pub fn initial_nonserving_density(u_x: f64, u_star: f64, lambda0: f64) -> f64 {
    debug_assert!(u_x >= 0.0 && u_star >= 0.0);
    if u_x > u_star {
        lambda0
    } else {
        0.0
    }
}

/// Probability that a drone observed at distance `u_x` from the user at time
/// `t` started inside the exclusion disc of radius `u_star`, mixed over the
/// speed law.
///
/// A drone needs displacement at most `u_star - u_x` to have surely started
/// inside, at least `(u_star + u_x)` to have surely started outside, and in
/// between the originating directions subtend an arc whose fraction is
/// `acos((v^2 t^2 + u_x^2 - u_star^2) / (2 v t u_x)) / pi`.
fn exclusion_origin_weight(
    t: f64,
    u_x: f64,
    u_star: f64,
    speed: &SpeedDistribution,
    spec: &QuadratureSpec,
) -> f64 {
    debug_assert!(t > 0.0);
    if u_x == 0.0 {
        // continuity value: the arc term vanishes with the integration range
        return speed.cdf(u_star / t);
    }
    let lo = (u_star - u_x).abs() / t;
    let hi = (u_star + u_x) / t;
    let arc = |v: f64| {
        let d = v * t;
        ((d * d + u_x * u_x - u_star * u_star) / (2.0 * d * u_x))
            .clamp(-1.0, 1.0)
            .acos()
            / PI
    };
    let sure = speed.cdf((u_star - u_x) / t);
    let partial = match speed.atom() {
        Some(v0) => {
            if lo < v0 && v0 < hi {
                arc(v0)
            } else {
                0.0
            }
        }
        None => {
            let cap = speed.effective_max_speed(spec.tail_mass_epsilon);
            let b = hi.min(cap);
            if lo < b {
                integrate(|v| speed.pdf_continuous(v) * arc(v), lo, b, spec).value
            } else {
                0.0
            }
        }
    };
    sure + partial
}

/// Radial density of the non-serving drones at time `t > 0`, conditioned on
/// an initial serving distance of `u_star`.
pub fn nonserving_density(
    t: f64,
    u_x: f64,
    u_star: f64,
    inputs: &AnalyticInputs,
) -> Result<f64, AnalyticError> {
    if t <= 0.0 {
        return Err(AnalyticError::NonpositiveTime(t));
    }
    debug_assert!(u_x >= 0.0 && u_star >= 0.0);
    let w = exclusion_origin_weight(t, u_x, u_star, &inputs.speed, &inputs.quad);
    Ok(inputs.lambda0 * (1.0 - w))
}

/// Density contribution at time `t > 0` of the drones that started inside
/// the exclusion disc. Complements [`nonserving_density`]: the two sum to
/// the fleet density.
pub fn exclusion_origin_density(
    t: f64,
    u_x: f64,
    u_star: f64,
    inputs: &AnalyticInputs,
) -> Result<f64, AnalyticError> {
    if t <= 0.0 {
        return Err(AnalyticError::NonpositiveTime(t));
    }
    debug_assert!(u_x >= 0.0 && u_star >= 0.0);
    let w = exclusion_origin_weight(t, u_x, u_star, &inputs.speed, &inputs.quad);
    Ok(inputs.lambda0 * w)
}

/// Lens overlap written through the two wedge angles of the triangle with
/// sides `(d, r1, r2)`, exactly as it appears in the moving-observer
/// integrand. Kept separate from [`lens_area`] so the two expressions can
/// validate each other.
fn lens_overlap_from_angles(r1: f64, r2: f64, d: f64) -> f64 {
    if r1 == 0.0 || r2 == 0.0 {
        return 0.0;
    }
    let phi1 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1))
        .clamp(-1.0, 1.0)
        .acos();
    let phi2 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2))
        .clamp(-1.0, 1.0)
        .acos();
    r1 * r1 * (phi1 - 0.5 * (2.0 * phi1).sin())
        + r2 * r2 * (phi2 - 0.5 * (2.0 * phi2).sin())
}

/// Exact handover probability of the same-speed model, moving-observer
/// route.
///
/// Conditioning on the initial serving distance `r` and the direction of
/// relative motion, a handover has occurred by time `t` unless the disc
/// around the displaced observer through the old serving drone is empty
/// outside the initial serving disc. Averaging the void probability of that
/// crescent over `r` (nearest-neighbor density) and the uniform direction
/// gives
///
/// `P[H(t)] = ∫ 2 pi lambda0 r exp(-lambda0 pi r^2)
///            (1/pi) ∫ 1 - exp(-lambda0 (pi R^2 - S)) dtheta dr`
///
/// with `R^2 = r^2 + (vt)^2 - 2 r vt cos(theta)` and `S` the lens overlap of
/// the two discs.
pub fn ssm_handover_probability(lambda0: f64, v: f64, t: f64, quad: &QuadratureSpec) -> f64 {
    assert!(lambda0 > 0.0, "density must be positive");
    assert!(v >= 0.0 && t >= 0.0, "speed and time must be non-negative");
    let d = v * t;
    if d == 0.0 {
        return 0.0;
    }
    let r_max = tail_truncation_radius(lambda0, quad.tail_mass_epsilon);
    let theta_spec = quad.inner();
    let prob = integrate(
        |r| {
            let averaged = integrate(
                |theta: f64| {
                    let grown = (r * r + d * d - 2.0 * r * d * theta.cos()).sqrt();
                    let crescent =
                        PI * grown * grown - lens_overlap_from_angles(r, grown, d);
                    -(-lambda0 * crescent).exp_m1()
                },
                0.0,
                PI,
                &theta_spec,
            )
            .value
                / PI;
            2.0 * PI * lambda0 * r * (-lambda0 * PI * r * r).exp() * averaged
        },
        0.0,
        r_max,
        quad,
    )
    .value;
    prob.clamp(0.0, 1.0)
}

/// Exact handover probability of the same-speed model, exclusion-zone route.
///
/// Conditioning instead on the serving drone's own displacement, the
/// no-handover event requires the disc of radius `R` around the user (where
/// `R` is the displaced serving distance) to hold no non-serving drone. The
/// annular void mass is the `Q` integral below; when the serving drone
/// started closer than its displacement, the displaced exclusion disc
/// contributes a further `pi (vt - u*)^2` of mass.
pub fn ssm_handover_probability_via_density(
    lambda0: f64,
    v: f64,
    t: f64,
    quad: &QuadratureSpec,
) -> f64 {
    assert!(lambda0 > 0.0, "density must be positive");
    assert!(v >= 0.0 && t >= 0.0, "speed and time must be non-negative");
    let d = v * t;
    if d == 0.0 {
        return 0.0;
    }
    let r_max = tail_truncation_radius(lambda0, quad.tail_mass_epsilon);
    let theta_spec = quad.inner();
    let q_spec = theta_spec.inner();

    // Q(u*, R): mean count of displaced non-serving drones within radius R,
    // written directly as an annular integral of the origin arc fraction.
    let annular_void_mass = |u_star: f64, radius: f64| -> f64 {
        let lo = (d - u_star).abs();
        if radius <= lo {
            return 0.0;
        }
        integrate(
            |u_x| {
                let z = ((u_star * u_star - u_x * u_x - d * d) / (2.0 * u_x * d))
                    .clamp(-1.0, 1.0);
                2.0 * u_x * z.acos()
            },
            lo,
            radius,
            &q_spec,
        )
        .value
    };

    let averaged = |u_star: f64, extra_mass: f64| -> f64 {
        integrate(
            |theta: f64| {
                let radius =
                    (u_star * u_star + d * d - 2.0 * u_star * d * theta.cos()).sqrt();
                -(-lambda0 * (extra_mass + annular_void_mass(u_star, radius))).exp_m1()
            },
            0.0,
            PI,
            &theta_spec,
        )
        .value
            / PI
    };

    let weight = |u_star: f64| 2.0 * PI * lambda0 * u_star * (-lambda0 * PI * u_star * u_star).exp();

    let far = if d < r_max {
        integrate(|u| weight(u) * averaged(u, 0.0), d, r_max, quad).value
    } else {
        0.0
    };
    let near = integrate(
        |u| weight(u) * averaged(u, PI * (d - u) * (d - u)),
        0.0,
        d.min(r_max),
        quad,
    )
    .value;
    (far + near).clamp(0.0, 1.0)
}

/// Mean lens overlap `E_V[lens(u_star, radius, V t)]` over the speed law.
///
/// Splitting at the overlap-regime boundaries keeps the integrand analytic:
/// speeds below `|radius - u_star| / t` leave the smaller disc fully
/// covered, speeds above `(radius + u_star) / t` separate the discs.
fn mean_lens_area(
    u_star: f64,
    radius: f64,
    t: f64,
    speed: &SpeedDistribution,
    spec: &QuadratureSpec,
) -> f64 {
    if let Some(v0) = speed.atom() {
        return lens_area(u_star, radius, v0 * t);
    }
    let lo = (radius - u_star).abs() / t;
    let hi = (radius + u_star) / t;
    let r_min = u_star.min(radius);
    let covered = PI * r_min * r_min * speed.cdf(lo);
    let b = hi.min(speed.effective_max_speed(spec.tail_mass_epsilon));
    let partial = if lo < b {
        integrate(
            |v| speed.pdf_continuous(v) * lens_area(u_star, radius, v * t),
            lo,
            b,
            spec,
        )
        .value
    } else {
        0.0
    };
    covered + partial
}

/// Mean number of displaced non-serving drones within `radius` of the user
/// at time `t`, given initial serving distance `u_star`:
/// the radial integral of [`nonserving_density`] over the disc, reduced
/// exactly to `lambda0 (pi radius^2 - E_V[lens(u_star, radius, V t)])`.
pub fn nonserving_mean_count(
    t: f64,
    radius: f64,
    u_star: f64,
    lambda0: f64,
    speed: &SpeedDistribution,
    spec: &QuadratureSpec,
) -> f64 {
    debug_assert!(t > 0.0 && radius >= 0.0 && u_star >= 0.0);
    lambda0 * (PI * radius * radius - mean_lens_area(u_star, radius, t, speed, spec))
}

/// Lower bound on the handover probability of the different-speed model.
///
/// The bound conditions on the serving drone's initial distance, speed and
/// direction, and requires the disc through its displaced position to hold
/// no non-serving drone; drones that pass through the disc and leave before
/// `t` make it a strict lower bound. For a degenerate speed law the bound is
/// exact and this routes to [`ssm_handover_probability_via_density`]
/// directly.
pub fn dsm_handover_lower_bound(inputs: &AnalyticInputs) -> f64 {
    if let Some(v0) = inputs.speed.atom() {
        return ssm_handover_probability_via_density(inputs.lambda0, v0, inputs.t, &inputs.quad);
    }
    let t = inputs.t;
    if t == 0.0 {
        return 0.0;
    }
    let lambda0 = inputs.lambda0;
    let speed = inputs.speed;
    let quad = &inputs.quad;
    let u_spec = quad.inner();
    let theta_spec = u_spec.inner();
    let lens_spec = theta_spec.inner();
    let r_max = tail_truncation_radius(lambda0, quad.tail_mass_epsilon);
    let v_hi = speed.effective_max_speed(quad.tail_mass_epsilon);

    let prob = integrate(
        |v| {
            let d = v * t;
            let over_serving_distance = integrate(
                |u_star| {
                    let averaged = integrate(
                        |theta: f64| {
                            let radius = (u_star * u_star + d * d
                                - 2.0 * u_star * d * theta.cos())
                            .sqrt();
                            let mass = nonserving_mean_count(
                                t, radius, u_star, lambda0, &speed, &lens_spec,
                            );
                            -(-mass).exp_m1()
                        },
                        0.0,
                        PI,
                        &theta_spec,
                    )
                    .value
                        / PI;
                    2.0 * PI * lambda0 * u_star * (-lambda0 * PI * u_star * u_star).exp() * averaged
                },
                0.0,
                r_max,
                &u_spec,
            )
            .value;
            speed.pdf_continuous(v) * over_serving_distance
        },
        0.0,
        v_hi,
        quad,
    )
    .value;
    prob.clamp(0.0, 1.0)
}

/// Same-speed handover probabilities over a time grid, in parallel.
pub fn ssm_handover_curve(lambda0: f64, v: f64, t_grid: &[f64], quad: &QuadratureSpec) -> Vec<f64> {
    t_grid
        .par_iter()
        .map(|&t| ssm_handover_probability(lambda0, v, t, quad))
        .collect()
}

/// Different-speed lower bounds over a time grid, in parallel.
pub fn dsm_lower_bound_curve(
    lambda0: f64,
    speed: SpeedDistribution,
    t_grid: &[f64],
    quad: &QuadratureSpec,
) -> Result<Vec<f64>, AnalyticError> {
    let inputs: Vec<AnalyticInputs> = t_grid
        .iter()
        .map(|&t| AnalyticInputs::new(lambda0, t, speed, *quad))
        .collect::<Result<_, _>>()?;
    Ok(inputs.par_iter().map(dsm_handover_lower_bound).collect())
}

/// Non-serving density over a grid of distances, in parallel.
pub fn nonserving_density_profile(
    t: f64,
    u_grid: &[f64],
    u_star: f64,
    inputs: &AnalyticInputs,
) -> Result<Vec<f64>, AnalyticError> {
    if t <= 0.0 {
        return Err(AnalyticError::NonpositiveTime(t));
    }
    Ok(u_grid
        .par_iter()
        .map(|&u_x| inputs.lambda0 * (1.0 - exclusion_origin_weight(t, u_x, u_star, &inputs.speed, &inputs.quad)))
        .collect())
}
