//! Planar geometry and Poisson point process sampling.
//!
//! Everything here is two-dimensional: a constant fleet height never enters
//! the handover computation, so drone positions live in the plane of flight.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("annulus radii must satisfy 0 <= r_in < r_out, got r_in={r_in}, r_out={r_out}")]
    InvalidRadii { r_in: f64, r_out: f64 },
}

/// A point in the drone plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Straight-line trajectory of one drone: initial position, heading, speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroneState {
    pub initial_position: PlanarPoint,
    /// Heading in radians, normalized into `[0, 2pi)`.
    pub direction: f64,
    /// Speed in m/s, non-negative.
    pub speed: f64,
}

impl DroneState {
    pub fn new(initial_position: PlanarPoint, direction: f64, speed: f64) -> Self {
        debug_assert!(speed >= 0.0, "speed must be non-negative");
        Self {
            initial_position,
            direction: direction.rem_euclid(TAU),
            speed,
        }
    }

    /// Velocity vector, m/s.
    pub fn velocity(&self) -> PlanarPoint {
        PlanarPoint::new(
            self.speed * self.direction.cos(),
            self.speed * self.direction.sin(),
        )
    }

    /// Position after `t` seconds of straight-line motion.
    pub fn position_at(&self, t: f64) -> PlanarPoint {
        debug_assert!(t >= 0.0);
        let v = self.velocity();
        PlanarPoint::new(
            self.initial_position.x + v.x * t,
            self.initial_position.y + v.y * t,
        )
    }
}

fn uniform_annulus_point<R: Rng + ?Sized>(r_in_sq: f64, r_out_sq: f64, rng: &mut R) -> PlanarPoint {
    // uniform area: the squared radius is uniform on [r_in^2, r_out^2]
    let u: f64 = rng.random();
    let r = (r_in_sq + u * (r_out_sq - r_in_sq)).sqrt();
    let angle: f64 = TAU * rng.random::<f64>();
    PlanarPoint::new(r * angle.cos(), r * angle.sin())
}

/// Sample a homogeneous Poisson point process of the given intensity
/// (points/m²) on the annulus `r_in <= |x| <= r_out`. `r_in = 0` gives a
/// disc. The count is Poisson with mean `density * area`; positions are
/// i.i.d. uniform, with radii drawn by inverse cdf on r² rather than by
/// rejection.
pub fn sample_ppp_annulus<R: Rng + ?Sized>(
    density: f64,
    r_in: f64,
    r_out: f64,
    rng: &mut R,
) -> Result<Vec<PlanarPoint>, GeometryError> {
    if !(0.0 <= r_in && r_in < r_out) {
        return Err(GeometryError::InvalidRadii { r_in, r_out });
    }
    debug_assert!(density >= 0.0);
    let mean = density * PI * (r_out * r_out - r_in * r_in);
    if mean == 0.0 {
        return Ok(Vec::new());
    }
    let count = Poisson::new(mean)
        .expect("positive finite mean")
        .sample(rng) as usize;
    let (ri2, ro2) = (r_in * r_in, r_out * r_out);
    Ok((0..count)
        .map(|_| uniform_annulus_point(ri2, ro2, rng))
        .collect())
}

/// Sample the same process with points emitted in increasing distance from
/// the origin, via exponential spacings of a unit-rate process in the r²
/// coordinate.
///
/// With a fixed random stream, enlarging `r_out` appends points without
/// disturbing the ones already produced. The Monte Carlo engine relies on
/// this prefix property to measure window-boundary effects without
/// statistical noise.
pub fn sample_ppp_annulus_ordered<R: Rng + ?Sized>(
    density: f64,
    r_in: f64,
    r_out: f64,
    rng: &mut R,
) -> Result<Vec<PlanarPoint>, GeometryError> {
    if !(0.0 <= r_in && r_in < r_out) {
        return Err(GeometryError::InvalidRadii { r_in, r_out });
    }
    debug_assert!(density >= 0.0);
    let rate = density * PI;
    let mut points = Vec::new();
    if rate == 0.0 {
        return Ok(points);
    }
    let mut r_sq = r_in * r_in;
    let r_out_sq = r_out * r_out;
    loop {
        let u: f64 = rng.random();
        r_sq -= (1.0 - u).ln() / rate;
        if r_sq > r_out_sq {
            return Ok(points);
        }
        let r = r_sq.sqrt();
        let angle: f64 = TAU * rng.random::<f64>();
        points.push(PlanarPoint::new(r * angle.cos(), r * angle.sin()));
    }
}

/// Area of the intersection of two discs of radii `r1` and `r2` whose
/// centers are `d` apart. Containment and disjointness are resolved before
/// the general circular-segment formula is evaluated.
pub fn lens_area(r1: f64, r2: f64, d: f64) -> f64 {
    debug_assert!(r1 >= 0.0 && r2 >= 0.0 && d >= 0.0);
    if d >= r1 + r2 {
        return 0.0;
    }
    let r_min = r1.min(r2);
    if d <= (r2 - r1).abs() {
        return PI * r_min * r_min;
    }
    lens_area_partial(r1, r2, d)
}

/// The two-segment formula for partially overlapping discs. The arc-cosine
/// arguments are cosines of triangle angles, hence mathematically in
/// [-1, 1]; clamping guards the rounding at tangency.
fn lens_area_partial(r1: f64, r2: f64, d: f64) -> f64 {
    let half1 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1))
        .clamp(-1.0, 1.0)
        .acos();
    let half2 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2))
        .clamp(-1.0, 1.0)
        .acos();
    r1 * r1 * (half1 - 0.5 * (2.0 * half1).sin()) + r2 * r2 * (half2 - 0.5 * (2.0 * half2).sin())
}
