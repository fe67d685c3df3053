//! Speed laws for the drone fleet.
//!
//! The same-speed model (SSM) is the degenerate law putting all mass on a
//! single value; the different-speed model (DSM) draws i.i.d. speeds from a
//! continuous law. Continuous variants expose a density for use inside the
//! analytic integrals. The degenerate variant deliberately has no density:
//! callers must branch to atom-aware code paths instead of integrating
//! against a point mass.

use std::f64::consts::PI;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpeedError {
    #[error("speed parameter must be finite and non-negative, got {0}")]
    InvalidParameter(f64),
    #[error("uniform support must satisfy 0 <= lo < hi, got [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("the degenerate speed law has no density; branch on `atom()` instead")]
    DegenerateHasNoPdf,
}

/// Random speed `V` of a drone: cdf, pdf, sampling and quantiles.
///
/// Every variant is reachable from the single "mean speed" knob of an
/// experiment: `rayleigh_with_mean` converts the mean to the Rayleigh scale
/// internally, and `uniform_with_mean(v)` is uniform on `[0, 2v]`, the
/// zero-anchored uniform with mean `v`. Other uniform supports are available
/// through [`SpeedDistribution::uniform_on`].
///
/// Values are immutable after construction and safe to share across threads;
/// sampling takes a caller-owned random stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpeedDistribution {
    /// Every drone moves at exactly this speed (the SSM).
    Degenerate { value: f64 },
    /// Rayleigh law with the given scale parameter.
    Rayleigh { scale: f64 },
    /// Uniform on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
}

impl SpeedDistribution {
    pub fn degenerate(value: f64) -> Result<Self, SpeedError> {
        if !value.is_finite() || value < 0.0 {
            return Err(SpeedError::InvalidParameter(value));
        }
        Ok(Self::Degenerate { value })
    }

    /// Rayleigh law parameterised by its mean: scale = mean * sqrt(2/pi).
    pub fn rayleigh_with_mean(mean: f64) -> Result<Self, SpeedError> {
        if !mean.is_finite() || mean <= 0.0 {
            return Err(SpeedError::InvalidParameter(mean));
        }
        Ok(Self::Rayleigh {
            scale: mean * (2.0 / PI).sqrt(),
        })
    }

    /// Uniform on `[0, 2 mean]`.
    pub fn uniform_with_mean(mean: f64) -> Result<Self, SpeedError> {
        if !mean.is_finite() || mean <= 0.0 {
            return Err(SpeedError::InvalidParameter(mean));
        }
        Self::uniform_on(0.0, 2.0 * mean)
    }

    pub fn uniform_on(lo: f64, hi: f64) -> Result<Self, SpeedError> {
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi) {
            return Err(SpeedError::InvalidInterval { lo, hi });
        }
        Ok(Self::Uniform { lo, hi })
    }

    /// The point mass of the degenerate variant, if any.
    pub fn atom(&self) -> Option<f64> {
        match self {
            Self::Degenerate { value } => Some(*value),
            _ => None,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Degenerate { value } => *value,
            Self::Rayleigh { scale } => scale * (PI / 2.0).sqrt(),
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    /// `P[V <= v]`. Total on finite reals; negative speeds give 0.
    pub fn cdf(&self, v: f64) -> f64 {
        match self {
            Self::Degenerate { value } => {
                if v >= *value {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Rayleigh { scale } => {
                if v <= 0.0 {
                    0.0
                } else {
                    -(-v * v / (2.0 * scale * scale)).exp_m1()
                }
            }
            Self::Uniform { lo, hi } => ((v - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    /// Density at `v`; zero outside the support. Errors for the degenerate
    /// variant, which has no density.
    pub fn pdf(&self, v: f64) -> Result<f64, SpeedError> {
        match self {
            Self::Degenerate { .. } => Err(SpeedError::DegenerateHasNoPdf),
            _ => Ok(self.pdf_continuous(v)),
        }
    }

    /// Density of a continuous variant. Must not be called on the degenerate
    /// variant; internal callers branch on [`SpeedDistribution::atom`] first.
    pub(crate) fn pdf_continuous(&self, v: f64) -> f64 {
        match self {
            Self::Degenerate { .. } => {
                debug_assert!(false, "pdf_continuous on a degenerate law");
                0.0
            }
            Self::Rayleigh { scale } => {
                if v <= 0.0 {
                    0.0
                } else {
                    let s2 = scale * scale;
                    v / s2 * (-v * v / (2.0 * s2)).exp()
                }
            }
            Self::Uniform { lo, hi } => {
                if v < *lo || v > *hi {
                    0.0
                } else {
                    1.0 / (hi - lo)
                }
            }
        }
    }

    /// One i.i.d. draw, by inverse transform of the cdf.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Degenerate { value } => *value,
            Self::Rayleigh { scale } => {
                let u: f64 = rng.random();
                // 1 - u lies in (0, 1], so the log is finite
                scale * (-2.0 * (1.0 - u).ln()).sqrt()
            }
            Self::Uniform { lo, hi } => {
                let u: f64 = rng.random();
                lo + u * (hi - lo)
            }
        }
    }

    /// Smallest `v` with `cdf(v) >= p`, for `p` in (0, 1). Used as an
    /// effective maximum speed when sizing simulation windows and truncating
    /// integrals over unbounded supports.
    pub fn upper_quantile(&self, p: f64) -> f64 {
        assert!(p > 0.0 && p < 1.0, "quantile level must be in (0, 1), got {p}");
        let mut v = match self {
            Self::Degenerate { value } => return *value,
            Self::Rayleigh { scale } => scale * (-2.0 * (1.0 - p).ln()).sqrt(),
            Self::Uniform { lo, hi } => lo + p * (hi - lo),
        };
        // the closed form can round to a value with cdf(v) one ulp below p;
        // nudge upward so "smallest v with cdf(v) >= p" holds literally
        while self.cdf(v) < p {
            v = v.next_up();
        }
        v
    }

    /// Upper end of the support: the exact bound for bounded laws, the
    /// `1 - tail_eps` quantile otherwise.
    pub(crate) fn effective_max_speed(&self, tail_eps: f64) -> f64 {
        match self {
            Self::Degenerate { value } => *value,
            Self::Rayleigh { .. } => self.upper_quantile(1.0 - tail_eps),
            Self::Uniform { hi, .. } => *hi,
        }
    }
}
