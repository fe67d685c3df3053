//! Exact-event Monte Carlo engine.
//!
//! Each trial samples a full drone field, and the first handover time is
//! found by root-solving the squared-distance difference between every
//! competitor and the initial serving drone. The difference is at most
//! quadratic in time, so the first crossing is available in closed form and
//! no time discretization enters the estimates; time-stepped simulation
//! survives only as a diagnostic oracle.
//!
//! Trials are reproducible and scheduling-independent: every trial derives
//! its own counter-based random stream from `(master_seed, trial_index)`,
//! and aggregation is a pure reduction over the per-trial outcomes, so any
//! number of workers produces bit-identical results.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{sample_ppp_annulus_ordered, DroneState, PlanarPoint};
use crate::speed::SpeedDistribution;

/// Resampling gives up after this many consecutive empty fields in one trial.
const MAX_EMPTY_RESAMPLES: u32 = 10_000;
/// Tolerated ratio of empty-field draws to trials before the window is
/// declared mis-sized.
const MAX_EMPTY_FRACTION: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error("lambda0 and t_max must be positive and finite, got lambda0={lambda0}, t_max={t_max}")]
    InvalidConfig { lambda0: f64, t_max: f64 },
    #[error("window factor, margin quantile and ci z are out of range")]
    InvalidWindowPolicy,
    #[error("competitor is not strictly farther than the serving drone at t = 0")]
    NotInitiallyFarther,
    #[error("time grid must be nonempty, ascending, non-negative, and bounded by t_max")]
    InvalidTimeGrid,
    #[error("n_trials must be positive")]
    NoTrials,
    #[error("empty-field fraction {fraction:e} exceeds {MAX_EMPTY_FRACTION:e}: the sampling window is mis-sized")]
    EmptyFieldRate { fraction: f64 },
    #[error("the moving-user estimator requires a degenerate speed law")]
    NonDegenerateSpeed,
    #[error("density histogram request invalid: need t > 0, u_star > 0, 0 < bin_width <= r_max")]
    InvalidDensityRequest,
}

/// Configuration of one simulation experiment.
///
/// The sampling window combines a nearest-neighbor length scale with the
/// largest displacement any drone is likely to make:
/// `factor / sqrt(lambda0 pi) + upper_quantile(margin) * t_max`. For
/// unbounded speed laws the quantile introduces a bias bounded by the
/// quantile tail mass; the realized window radius is reported in the outputs
/// so the policy is auditable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub lambda0: f64,
    pub speed: SpeedDistribution,
    pub t_max: f64,
    /// Quantile of the speed law used as the effective maximum speed.
    pub window_margin_quantile: f64,
    /// Multiplies the mean nearest-neighbor spacing scale `1/sqrt(lambda0 pi)`.
    pub window_base_radius_factor: f64,
    /// Width of reported confidence intervals, in standard errors.
    pub ci_z: f64,
    pub master_seed: u64,
}

impl SimConfig {
    pub fn new(
        lambda0: f64,
        speed: SpeedDistribution,
        t_max: f64,
        master_seed: u64,
    ) -> Result<Self, McError> {
        if !(lambda0 > 0.0 && lambda0.is_finite() && t_max > 0.0 && t_max.is_finite()) {
            return Err(McError::InvalidConfig { lambda0, t_max });
        }
        Ok(Self {
            lambda0,
            speed,
            t_max,
            window_margin_quantile: 1.0 - 1e-5,
            window_base_radius_factor: 5.0,
            ci_z: 3.0,
            master_seed,
        })
    }

    pub fn with_window_factor(mut self, factor: f64) -> Result<Self, McError> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(McError::InvalidWindowPolicy);
        }
        self.window_base_radius_factor = factor;
        Ok(self)
    }

    /// Radius of the disc in which drone fields are sampled.
    pub fn window_radius(&self) -> f64 {
        self.window_base_radius_factor / (self.lambda0 * PI).sqrt()
            + self.speed.upper_quantile(self.window_margin_quantile) * self.t_max
    }

    /// Independent random stream for one trial, split off the master seed by
    /// the stream counter.
    pub fn trial_rng(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(trial);
        rng
    }
}

/// One sampled drone field.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub drones: Vec<DroneState>,
    /// Index of the drone nearest the user at time zero (lowest index wins
    /// ties).
    pub serving_index: usize,
    pub window_radius: f64,
}

impl Realization {
    /// Sample one field in the configured window; `None` when the Poisson
    /// draw is empty.
    ///
    /// Drones are generated in increasing distance from the user, with each
    /// drone's position, heading and speed drawn consecutively, so a larger
    /// window extends a field rather than reshuffling it.
    pub fn sample<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Option<Self> {
        let window_radius = cfg.window_radius();
        let drones = sample_drone_field(cfg.lambda0, window_radius, &cfg.speed, rng);
        if drones.is_empty() {
            return None;
        }
        let serving_index = argmin_initial_distance(&drones);
        Some(Self {
            drones,
            serving_index,
            window_radius,
        })
    }
}

fn sample_drone_field<R: Rng + ?Sized>(
    lambda0: f64,
    radius: f64,
    speed: &SpeedDistribution,
    rng: &mut R,
) -> Vec<DroneState> {
    let rate = lambda0 * PI;
    let mut drones = Vec::new();
    if rate <= 0.0 {
        return drones;
    }
    let mut r_sq = 0.0;
    let r_out_sq = radius * radius;
    loop {
        let u: f64 = rng.random();
        r_sq -= (1.0 - u).ln() / rate;
        if r_sq > r_out_sq {
            return drones;
        }
        let r = r_sq.sqrt();
        let pos_angle = TAU * rng.random::<f64>();
        let position = PlanarPoint::new(r * pos_angle.cos(), r * pos_angle.sin());
        let direction = TAU * rng.random::<f64>();
        let v = speed.sample(rng);
        drones.push(DroneState::new(position, direction, v));
    }
}

fn argmin_initial_distance(drones: &[DroneState]) -> usize {
    let mut best = 0;
    let mut best_d = drones[0].initial_position.norm_sq();
    for (i, d) in drones.iter().enumerate().skip(1) {
        let dd = d.initial_position.norm_sq();
        if dd < best_d {
            best = i;
            best_d = dd;
        }
    }
    best
}

/// Squared-distance trajectory coefficients: `|x(t)|^2 = c + 2 b t + a t^2`.
fn distance_sq_coeffs(d: &DroneState) -> (f64, f64, f64) {
    let v = d.velocity();
    let p = d.initial_position;
    (d.speed * d.speed, p.x * v.x + p.y * v.y, p.norm_sq())
}

/// Smallest `t` in `(after, t_max]` at which `a t^2 + 2 b t + c` crosses
/// from positive to negative. Tangencies (double roots) never change the
/// sign and return `None`.
fn smallest_down_crossing(a: f64, b: f64, c: f64, after: f64, t_max: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    let mut consider = |t: f64, half_slope: f64| {
        if half_slope < 0.0 && t > after && t <= t_max {
            best = Some(best.map_or(t, |prev: f64| prev.min(t)));
        }
    };
    if a == 0.0 {
        if b < 0.0 {
            consider(-c / (2.0 * b), b);
        }
        return best;
    }
    let disc = b * b - a * c;
    if disc <= 0.0 {
        return None;
    }
    // stable root pair: q/a and c/q avoid the cancelling branch
    let q = -(b + b.signum() * disc.sqrt());
    let r1 = q / a;
    consider(r1, a * r1 + b);
    if q != 0.0 {
        let r2 = c / q;
        consider(r2, a * r2 + b);
    }
    best
}

/// First time in `(0, t_max]` at which `other` becomes strictly closer to
/// the user than `serving`, or `None` if it never does. `other` must start
/// strictly farther.
pub fn first_crossing_time(
    serving: &DroneState,
    other: &DroneState,
    t_max: f64,
) -> Result<Option<f64>, McError> {
    let (a_o, b_o, c_o) = distance_sq_coeffs(other);
    let (a_s, b_s, c_s) = distance_sq_coeffs(serving);
    let c = c_o - c_s;
    if c <= 0.0 {
        return Err(McError::NotInitiallyFarther);
    }
    Ok(smallest_down_crossing(a_o - a_s, b_o - b_s, c, 0.0, t_max))
}

/// First handover time of a realization: the minimum first crossing of any
/// competitor against the initial serving drone. Until the first handover
/// the serving drone is the initial one, so the minimum over pairwise
/// crossings is exact — no event sequencing is needed for the first change.
pub fn first_handover_time(r: &Realization, t_max: f64) -> Result<Option<f64>, McError> {
    let serving = &r.drones[r.serving_index];
    let mut best: Option<f64> = None;
    for (i, other) in r.drones.iter().enumerate() {
        if i == r.serving_index {
            continue;
        }
        if let Some(t) = first_crossing_time(serving, other, t_max)? {
            best = Some(best.map_or(t, |prev: f64| prev.min(t)));
        }
    }
    Ok(best)
}

/// Empirical first-handover-time distribution on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HandoverCurve {
    pub t_grid: Vec<f64>,
    /// Empirical cdf of the first-handover time; nondecreasing by
    /// construction.
    pub estimates: Vec<f64>,
    /// `z` standard errors per grid point; Wilson-based near 0 and 1 so the
    /// interval never collapses to zero width.
    pub ci_half_widths: Vec<f64>,
    pub n_trials: usize,
    pub z: f64,
    pub window_radius: f64,
    pub empty_field_draws: u64,
}

impl HandoverCurve {
    fn from_first_times(
        t_grid: &[f64],
        taus: &[Option<f64>],
        z: f64,
        window_radius: f64,
        empty_field_draws: u64,
    ) -> Self {
        let n = taus.len();
        let mut sorted: Vec<f64> = taus.iter().flatten().copied().collect();
        sorted.sort_by(f64::total_cmp);
        let estimates: Vec<f64> = t_grid
            .iter()
            .map(|&t| sorted.partition_point(|&tau| tau <= t) as f64 / n as f64)
            .collect();
        let ci_half_widths = estimates
            .iter()
            .map(|&p| ci_half_width(p, n as f64, z))
            .collect();
        Self {
            t_grid: t_grid.to_vec(),
            estimates,
            ci_half_widths,
            n_trials: n,
            z,
            window_radius,
            empty_field_draws,
        }
    }

    /// Per-point standard errors implied by the interval half-widths.
    pub fn standard_errors(&self) -> Vec<f64> {
        self.ci_half_widths.iter().map(|hw| hw / self.z).collect()
    }
}

fn ci_half_width(p: f64, n: f64, z: f64) -> f64 {
    if p > 0.0 && p < 1.0 {
        z * (p * (1.0 - p) / n).sqrt()
    } else {
        // Wilson interval half-width at a degenerate point estimate
        let z2 = z * z;
        z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n)
    }
}

fn validate_grid(t_grid: &[f64], t_max: f64) -> Result<(), McError> {
    if t_grid.is_empty() || t_grid[0] < 0.0 {
        return Err(McError::InvalidTimeGrid);
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(McError::InvalidTimeGrid);
    }
    if *t_grid.last().unwrap() > t_max {
        return Err(McError::InvalidTimeGrid);
    }
    Ok(())
}

fn run_trials<F>(
    cfg: &SimConfig,
    t_grid: &[f64],
    n_trials: usize,
    sample: F,
) -> Result<HandoverCurve, McError>
where
    F: Fn(&mut ChaCha8Rng) -> Option<Realization> + Sync,
{
    validate_grid(t_grid, cfg.t_max)?;
    if n_trials == 0 {
        return Err(McError::NoTrials);
    }
    let outcomes: Result<Vec<(Option<f64>, u32)>, McError> = (0..n_trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = cfg.trial_rng(trial);
            let mut empties = 0u32;
            let realization = loop {
                match sample(&mut rng) {
                    Some(r) => break r,
                    None => {
                        empties += 1;
                        if empties >= MAX_EMPTY_RESAMPLES {
                            return Err(McError::EmptyFieldRate { fraction: 1.0 });
                        }
                    }
                }
            };
            let tau = first_handover_time(&realization, cfg.t_max)?;
            Ok((tau, empties))
        })
        .collect();
    let outcomes = outcomes?;
    let empty_field_draws: u64 = outcomes.iter().map(|(_, e)| u64::from(*e)).sum();
    let fraction = empty_field_draws as f64 / n_trials as f64;
    if fraction > MAX_EMPTY_FRACTION {
        return Err(McError::EmptyFieldRate { fraction });
    }
    let taus: Vec<Option<f64>> = outcomes.into_iter().map(|(tau, _)| tau).collect();
    Ok(HandoverCurve::from_first_times(
        t_grid,
        &taus,
        cfg.ci_z,
        cfg.window_radius(),
        empty_field_draws,
    ))
}

/// Estimate the handover probability curve of the configured mobility
/// scenario: drones move, the user is static.
pub fn estimate_handover_curve(
    cfg: &SimConfig,
    t_grid: &[f64],
    n_trials: usize,
) -> Result<HandoverCurve, McError> {
    run_trials(cfg, t_grid, n_trials, |rng| Realization::sample(cfg, rng))
}

/// Estimate the handover curve of the dual scenario: a static drone field
/// and a user moving at the (degenerate) configured speed.
///
/// The observer's motion is recast as a uniform translation of the whole
/// field — every drone gets the same heading — and the same root-solving
/// machinery detects the first change of nearest neighbor.
pub fn estimate_handover_curve_moving_user(
    cfg: &SimConfig,
    t_grid: &[f64],
    n_trials: usize,
) -> Result<HandoverCurve, McError> {
    let v = cfg.speed.atom().ok_or(McError::NonDegenerateSpeed)?;
    run_trials(cfg, t_grid, n_trials, move |rng| {
        let heading = TAU * rng.random::<f64>();
        let window_radius = cfg.window_radius();
        let positions = sample_ppp_annulus_ordered(cfg.lambda0, 0.0, window_radius, rng)
            .expect("window radius is positive");
        if positions.is_empty() {
            return None;
        }
        let drones: Vec<DroneState> = positions
            .into_iter()
            .map(|p| DroneState::new(p, heading, v))
            .collect();
        let serving_index = argmin_initial_distance(&drones);
        Some(Realization {
            drones,
            serving_index,
            window_radius,
        })
    })
}

/// Radial histogram of the non-serving drone density.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialDensityHistogram {
    pub bin_centers: Vec<f64>,
    /// Estimated density per bin, points/m².
    pub densities: Vec<f64>,
    /// Standard error per bin, from the per-realization count variance,
    /// floored at the single-count scale so empty bins report a usable
    /// uncertainty.
    pub std_errs: Vec<f64>,
    pub n_realizations: usize,
    pub bin_width: f64,
}

/// Estimate the radial density of non-serving drones at time `t`,
/// conditioned on an initial serving distance of `u_star`.
///
/// The conditioning is constructive: the non-serving field starts as a
/// homogeneous process on the annulus outside the exclusion disc (the
/// serving drone's own motion is irrelevant to the non-serving marginal),
/// every drone is displaced by its sampled speed times `t`, and the
/// resulting distances are binned up to `r_max`. The sampling annulus
/// reaches `r_max` plus the effective maximum displacement, so every origin
/// that could land in a bin is covered.
pub fn estimate_nonserving_density(
    cfg: &SimConfig,
    t: f64,
    u_star: f64,
    n_realizations: usize,
    bin_width: f64,
    r_max: f64,
) -> Result<RadialDensityHistogram, McError> {
    if !(t > 0.0 && u_star > 0.0 && bin_width > 0.0 && bin_width <= r_max) {
        return Err(McError::InvalidDensityRequest);
    }
    if n_realizations == 0 {
        return Err(McError::NoTrials);
    }
    let reach = cfg.speed.upper_quantile(cfg.window_margin_quantile) * t;
    let r_out = r_max + reach;
    let n_bins = (r_max / bin_width).ceil() as usize;

    let zero = || (vec![0u64; n_bins], vec![0u64; n_bins]);
    let (sums, sum_sqs) = (0..n_realizations as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = cfg.trial_rng(trial);
            let mut counts = vec![0u32; n_bins];
            if u_star < r_out {
                let points = sample_ppp_annulus_ordered(cfg.lambda0, u_star, r_out, &mut rng)
                    .expect("annulus radii are ordered");
                for p in points {
                    let dir = TAU * rng.random::<f64>();
                    let step = cfg.speed.sample(&mut rng) * t;
                    let x = p.x + step * dir.cos();
                    let y = p.y + step * dir.sin();
                    let dist = (x * x + y * y).sqrt();
                    if dist < r_max {
                        counts[((dist / bin_width) as usize).min(n_bins - 1)] += 1;
                    }
                }
            }
            counts
        })
        .fold(zero, |(mut s, mut s2), counts| {
            for (j, &c) in counts.iter().enumerate() {
                s[j] += u64::from(c);
                s2[j] += u64::from(c) * u64::from(c);
            }
            (s, s2)
        })
        .reduce(zero, |(mut s, mut s2), (s_r, s2_r)| {
            for j in 0..n_bins {
                s[j] += s_r[j];
                s2[j] += s2_r[j];
            }
            (s, s2)
        });

    let n = n_realizations as f64;
    let mut bin_centers = Vec::with_capacity(n_bins);
    let mut densities = Vec::with_capacity(n_bins);
    let mut std_errs = Vec::with_capacity(n_bins);
    for j in 0..n_bins {
        let r_c = (j as f64 + 0.5) * bin_width;
        let area = 2.0 * PI * r_c * bin_width;
        let mean = sums[j] as f64 / n;
        let var = if n > 1.0 {
            ((sum_sqs[j] as f64 - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        let se_counts = (var / n).sqrt().max((sums[j] as f64 + 1.0).sqrt() / n);
        bin_centers.push(r_c);
        densities.push(mean / area);
        std_errs.push(se_counts / area);
    }
    Ok(RadialDensityHistogram {
        bin_centers,
        densities,
        std_errs,
        n_realizations,
        bin_width,
    })
}

/// Serving-drone index over a uniform time grid: the discretized diagnostic
/// oracle. Returns the change events `(time, new_serving_index)` including
/// the initial state.
pub fn serving_sequence_stepped(r: &Realization, t_max: f64, dt: f64) -> Vec<(f64, usize)> {
    assert!(dt > 0.0 && t_max > 0.0);
    let coeffs: Vec<(f64, f64, f64)> = r.drones.iter().map(distance_sq_coeffs).collect();
    let argmin_at = |t: f64| {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (i, &(a, b, c)) in coeffs.iter().enumerate() {
            let d = c + 2.0 * b * t + a * t * t;
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    };
    let steps = (t_max / dt).floor() as usize;
    let mut events = vec![(0.0, argmin_at(0.0))];
    for k in 1..=steps {
        let t = k as f64 * dt;
        let idx = argmin_at(t);
        if idx != events.last().unwrap().1 {
            events.push((t, idx));
        }
    }
    events
}

/// Exact serving-drone change events in `(0, t_max]`, computed by repeated
/// root-solving against the current serving drone. Simultaneous crossings
/// resolve to the lowest index.
pub fn serving_sequence_events(r: &Realization, t_max: f64) -> Vec<(f64, usize)> {
    let coeffs: Vec<(f64, f64, f64)> = r.drones.iter().map(distance_sq_coeffs).collect();
    let mut current = r.serving_index;
    let mut t_now = 0.0f64;
    let mut events = vec![(0.0, current)];
    let cap = 4 * r.drones.len() * r.drones.len();
    while events.len() <= cap {
        let (a_s, b_s, c_s) = coeffs[current];
        let mut next: Option<(f64, usize)> = None;
        for (i, &(a, b, c)) in coeffs.iter().enumerate() {
            if i == current {
                continue;
            }
            let guard = t_now * (1.0 + 1e-12) + 1e-12;
            if let Some(t) =
                smallest_down_crossing(a - a_s, b - b_s, c - c_s, guard, t_max)
            {
                let better = match next {
                    None => true,
                    Some((t_best, _)) => t < t_best,
                };
                if better {
                    next = Some((t, i));
                }
            }
        }
        match next {
            None => break,
            Some((t, i)) => {
                events.push((t, i));
                current = i;
                t_now = t;
            }
        }
    }
    events
}
