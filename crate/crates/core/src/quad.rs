//! Adaptive Gauss–Kronrod quadrature on finite intervals.
//!
//! A 7-point Gauss rule nested in a 15-point Kronrod rule drives an adaptive
//! bisection scheme: the segment with the largest error estimate is split
//! until the global estimate meets the requested tolerance or the
//! subdivision budget is exhausted. All nodes are interior, so integrands
//! are never evaluated at interval endpoints; integrable endpoint
//! singularities are handled by subdivision alone.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

/// Tolerances and budgets for the numerical integrals.
///
/// One spec governs a whole nested evaluation: each nesting level passes
/// [`QuadratureSpec::inner`] downwards so the outermost integral dominates
/// the total error budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Relative tolerance on each integral.
    pub rel_tol: f64,
    /// Absolute tolerance floor, for integrals whose value is near zero.
    pub abs_tol: f64,
    /// Maximum number of segment bisections per nesting level.
    pub max_subdivisions: usize,
    /// Probability mass allowed to be truncated from infinite ranges.
    pub tail_mass_epsilon: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("tolerances must be positive, got rel_tol={rel_tol}, abs_tol={abs_tol}, tail_mass_epsilon={tail_mass_epsilon}")]
    NonpositiveTolerance {
        rel_tol: f64,
        abs_tol: f64,
        tail_mass_epsilon: f64,
    },
    #[error("max_subdivisions must be at least 10, got {0}")]
    SubdivisionBudgetTooSmall(usize),
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-7,
            abs_tol: 1e-10,
            max_subdivisions: 200,
            tail_mass_epsilon: 1e-12,
        }
    }
}

impl QuadratureSpec {
    /// Validated constructor; see the field docs for the invariants.
    pub fn new(
        rel_tol: f64,
        abs_tol: f64,
        max_subdivisions: usize,
        tail_mass_epsilon: f64,
    ) -> Result<Self, QuadError> {
        if !(rel_tol > 0.0 && abs_tol > 0.0 && tail_mass_epsilon > 0.0) {
            return Err(QuadError::NonpositiveTolerance {
                rel_tol,
                abs_tol,
                tail_mass_epsilon,
            });
        }
        if max_subdivisions < 10 {
            return Err(QuadError::SubdivisionBudgetTooSmall(max_subdivisions));
        }
        Ok(Self {
            rel_tol,
            abs_tol,
            max_subdivisions,
            tail_mass_epsilon,
        })
    }

    /// Budget for an integral nested one level deeper: a tenth of the
    /// tolerances, so that the outer level dominates the total error.
    pub fn inner(&self) -> Self {
        Self {
            rel_tol: self.rel_tol / 10.0,
            abs_tol: self.abs_tol / 10.0,
            ..*self
        }
    }
}

/// Outcome of one adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralEstimate {
    pub value: f64,
    /// Conservative estimate of the absolute error.
    pub abs_error: f64,
    /// Number of bisections performed.
    pub subdivisions: usize,
    /// False when the subdivision budget ran out before the tolerance was met.
    pub converged: bool,
}

// 15-point Kronrod abscissae on [-1, 1] (non-negative half) and weights,
// with the embedded 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_23,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One Gauss–Kronrod 7/15 evaluation over `[a, b]`.
fn kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let f_center = f(center);
    let mut res_gauss = WG[3] * f_center;
    let mut res_kronrod = WGK[7] * f_center;
    let mut res_abs = WGK[7] * f_center.abs();

    let mut samples = [0.0f64; 15];
    samples[7] = f_center;

    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        samples[j] = f1;
        samples[14 - j] = f2;
        res_kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            // odd-index Kronrod nodes are the embedded Gauss nodes
            res_gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * res_kronrod;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((samples[j] - mean).abs() + (samples[14 - j] - mean).abs());
    }

    let value = res_kronrod * half;
    let raw_err = ((res_kronrod - res_gauss) * half).abs();
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();

    // QUADPACK-style error rescaling: sharpen the raw |K - G| difference and
    // floor it at the roundoff level of the function values.
    let mut error = raw_err;
    if res_asc != 0.0 && raw_err != 0.0 {
        error = res_asc * 1.0f64.min((200.0 * raw_err / res_asc).powf(1.5));
    }
    let tiny = f64::MIN_POSITIVE / (50.0 * f64::EPSILON);
    if res_abs > tiny {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }

    Segment {
        a,
        b,
        value,
        error,
    }
}

/// Adaptively integrate `f` over the finite interval `[a, b]`.
///
/// `a > b` integrates with the usual sign flip. The function is never
/// evaluated at `a` or `b` themselves.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> IntegralEstimate {
    debug_assert!(a.is_finite() && b.is_finite(), "bounds must be finite");
    if a == b {
        return IntegralEstimate {
            value: 0.0,
            abs_error: 0.0,
            subdivisions: 0,
            converged: true,
        };
    }
    if a > b {
        let mut flipped = integrate(f, b, a, spec);
        flipped.value = -flipped.value;
        return flipped;
    }

    let mut heap = BinaryHeap::with_capacity(64);
    let first = kronrod_15(&f, a, b);
    let mut total_value = first.value;
    let mut total_error = first.error;
    heap.push(first);

    let mut subdivisions = 0;
    while total_error > spec.abs_tol.max(spec.rel_tol * total_value.abs()) {
        if subdivisions >= spec.max_subdivisions {
            return IntegralEstimate {
                value: total_value,
                abs_error: total_error,
                subdivisions,
                converged: false,
            };
        }
        let worst = heap.pop().expect("heap cannot be empty while error > 0");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval no longer splittable in f64; accept what we have
            heap.push(worst);
            break;
        }
        let left = kronrod_15(&f, worst.a, mid);
        let right = kronrod_15(&f, mid, worst.b);
        total_value += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
    }

    IntegralEstimate {
        value: total_value,
        abs_error: total_error,
        subdivisions,
        converged: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn default_spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn polynomial_is_exact() {
        // K15 integrates polynomials up to degree 22 exactly
        let est = integrate(|x| x * x * x - 2.0 * x + 1.0, -1.0, 3.0, &default_spec());
        // antiderivative x^4/4 - x^2 + x evaluated on [-1, 3]: 14.25 + 1.75
        assert_relative_eq!(est.value, 16.0, max_relative = 1e-14);
        assert!(est.converged);
    }

    #[test]
    fn gaussian_bump() {
        let est = integrate(
            |x| (-x * x / 2.0).exp(),
            -40.0,
            40.0,
            &default_spec(),
        );
        assert_relative_eq!(est.value, (2.0 * PI).sqrt(), max_relative = 1e-9);
    }

    #[test]
    fn endpoint_singularity_integrable() {
        // 1/sqrt(x) on (0, 1] integrates to 2; nodes never touch x = 0
        let est = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, &default_spec());
        assert_relative_eq!(est.value, 2.0, max_relative = 1e-6);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let fwd = integrate(|x| x.sin(), 0.0, PI, &default_spec());
        let rev = integrate(|x| x.sin(), PI, 0.0, &default_spec());
        assert_relative_eq!(fwd.value, 2.0, max_relative = 1e-12);
        assert_relative_eq!(rev.value, -2.0, max_relative = 1e-12);
    }

    #[test]
    fn empty_interval_is_zero() {
        let est = integrate(|_| 123.0, 1.5, 1.5, &default_spec());
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let spec = QuadratureSpec::new(1e-15, 1e-300, 10, 1e-12).unwrap();
        // highly oscillatory on a wide range: 10 splits cannot resolve it
        let est = integrate(|x| (100.0 * x).sin().abs(), 0.0, 50.0, &spec);
        assert!(!est.converged);
        assert!(est.subdivisions == 10);
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::new(1e-7, 1e-10, 200, 1e-12).is_ok());
        assert!(QuadratureSpec::new(0.0, 1e-10, 200, 1e-12).is_err());
        assert!(QuadratureSpec::new(1e-7, -1.0, 200, 1e-12).is_err());
        assert!(QuadratureSpec::new(1e-7, 1e-10, 9, 1e-12).is_err());
    }

    #[test]
    fn inner_budget_shrinks_tolerances() {
        let spec = default_spec();
        let inner = spec.inner();
        assert_relative_eq!(inner.rel_tol, spec.rel_tol / 10.0);
        assert_relative_eq!(inner.abs_tol, spec.abs_tol / 10.0);
        assert_eq!(inner.max_subdivisions, spec.max_subdivisions);
    }

    #[test]
    fn requested_relative_accuracy_is_met() {
        // compare against the closed form of int_0^1 exp(x) dx on nested specs
        let exact = std::f64::consts::E - 1.0;
        for spec in [default_spec(), default_spec().inner(), default_spec().inner().inner()] {
            let est = integrate(|x| x.exp(), 0.0, 1.0, &spec);
            assert!((est.value - exact).abs() <= 10.0 * spec.rel_tol.max(1e-15) * exact);
        }
    }
}
