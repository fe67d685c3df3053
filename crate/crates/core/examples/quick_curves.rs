//! Compute a short handover-probability comparison at the default network
//! parameters (1 drone/km², mean speed 45 km/h) and print per-point timings.

use std::time::Instant;

use handover_core::analytic::{
    dsm_handover_lower_bound, ssm_handover_probability, ssm_handover_probability_via_density,
};
use handover_core::montecarlo::{estimate_handover_curve, SimConfig};
use handover_core::{units, AnalyticInputs, QuadratureSpec, SpeedDistribution};

fn main() {
    let lambda0 = units::per_km2_to_per_m2(1.0);
    let v = units::kmh_to_ms(45.0);
    let quad = QuadratureSpec::default();
    let grid = [10.0, 40.0, 100.0];

    for &t in &grid {
        let start = Instant::now();
        let exact = ssm_handover_probability(lambda0, v, t, &quad);
        let dt_a = start.elapsed();
        let start = Instant::now();
        let alt = ssm_handover_probability_via_density(lambda0, v, t, &quad);
        let dt_b = start.elapsed();
        println!("ssm t={t:>5}: {exact:.9} ({dt_a:?}) | density route {alt:.9} ({dt_b:?})");
    }

    let speed = SpeedDistribution::rayleigh_with_mean(v).unwrap();
    for &t in &grid {
        let inputs = AnalyticInputs::new(lambda0, t, speed, quad).unwrap();
        let start = Instant::now();
        let bound = dsm_handover_lower_bound(&inputs);
        let dt = start.elapsed();
        println!("dsm t={t:>5}: lower bound {bound:.9} ({dt:?})");
    }

    let cfg = SimConfig::new(lambda0, SpeedDistribution::degenerate(v).unwrap(), 100.0, 42).unwrap();
    let start = Instant::now();
    let curve = estimate_handover_curve(&cfg, &grid, 20_000).unwrap();
    println!(
        "mc ssm {:?} in {:?} (window {:.0} m)",
        curve.estimates,
        start.elapsed(),
        curve.window_radius
    );
}
