//! Error probabilities by quadrature.
//!
//! For a Poisson codebook under maximum-likelihood decoding, the error
//! probability conditioned on the noise draw is `1 - exp(-lambda W(u))`,
//! where `W(u)` is the volume of the discrepancy sub-level set at the
//! realized discrepancy `u`.  For rotation-invariant noise that conditional
//! expectation collapses to a one-dimensional radial integral this module
//! evaluates to near machine precision.  Hard-core (thinned) codebooks get a
//! rigorous upper bound instead, and the typicality decoder gets the
//! tail-plus-collision bound.
//!
//! Intensities are always parametrized by `alpha`: the codebook density is
//! `exp(n * rate)` with `rate = -(h + ln alpha)`, so `alpha > 1` means
//! operating below the model's capacity and `alpha < 1` above it.

use std::error::Error;
use std::fmt;

use crate::geometry::{
    chi_density_log, gamma_l1_density_log, log_ball_volume, matern_lune_radius, Norm,
};
use crate::montecarlo::{run_batches, trial_rng, Estimate, MonteCarloError};
use crate::noise::{NoiseError, NoiseModel};
use crate::numerics::{
    ln_erf, ln_gammp, ln_gammq, ln_one_minus_exp_neg, log_integrate, NumericsError,
};

#[derive(Debug, Clone, PartialEq)]
pub enum ExactError {
    BadParameter { what: &'static str, value: f64 },
    Unsupported { op: &'static str, model: &'static str },
    Numerics(NumericsError),
    Noise(NoiseError),
    MonteCarlo(MonteCarloError),
}

impl fmt::Display for ExactError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactError::BadParameter { what, value } => {
                write!(f, "bad parameter {what} = {value}")
            }
            ExactError::Unsupported { op, model } => {
                write!(f, "{op} is not available for the {model} noise model")
            }
            ExactError::Numerics(e) => write!(f, "numerics: {e}"),
            ExactError::Noise(e) => write!(f, "noise: {e}"),
            ExactError::MonteCarlo(e) => write!(f, "monte carlo: {e}"),
        }
    }
}

impl Error for ExactError {}

impl From<NumericsError> for ExactError {
    fn from(e: NumericsError) -> Self {
        ExactError::Numerics(e)
    }
}

impl From<NoiseError> for ExactError {
    fn from(e: NoiseError) -> Self {
        ExactError::Noise(e)
    }
}

impl From<MonteCarloError> for ExactError {
    fn from(e: MonteCarloError) -> Self {
        ExactError::MonteCarlo(e)
    }
}

/// Error and success probabilities of one decoding problem, in logs.  Both
/// sides are computed by independent quadratures, so
/// [`LogProbability::consistency_gap`] is a real accuracy check, not an
/// identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogProbability {
    pub log_pe: f64,
    pub log_ps: f64,
    pub n: usize,
    pub alpha: f64,
    pub model: &'static str,
}

impl LogProbability {
    /// `|exp(log_pe) + exp(log_ps) - 1|`.
    pub fn consistency_gap(&self) -> f64 {
        (self.log_pe.exp() + self.log_ps.exp() - 1.0).abs()
    }
}

/// `ln(1 - exp(-exp(log_x)))`, stable across the whole range of `log_x`.
fn ln_one_minus_exp_of_log(log_x: f64) -> f64 {
    if log_x == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if log_x < -37.0 {
        // 1 - e^{-x} = x (1 - x/2 + ...): the correction is below f64
        // resolution here.
        log_x
    } else {
        ln_one_minus_exp_neg(log_x.exp())
    }
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Radius beyond which the chi distribution (norm of an n-dimensional
/// isotropic Gaussian with per-coordinate deviation `sigma`) has mass below
/// `e^{-41}`.
fn chi_upper_limit(n: usize, sigma: f64) -> f64 {
    let nf = n as f64;
    let mut r = sigma * (nf.sqrt() + 10.0);
    while ln_gammq(0.5 * nf, 0.5 * (r / sigma) * (r / sigma)) > -41.0 {
        r *= 1.25;
    }
    r
}

/// Upper limit for the normalized L1 radius (mean 1, Gamma(n) tails).
fn gamma_upper_limit(n: usize) -> f64 {
    let nf = n as f64;
    let mut v = 2.0 + 10.0 / nf.sqrt();
    while ln_gammq(nf, nf * v) > -41.0 {
        v *= 1.25;
    }
    v
}

const QUAD_MAX_INTERVALS: usize = 4000;

/// Exact (to quadrature accuracy) error probability of a Poisson codebook
/// with intensity `exp(-n (h + ln alpha))` under maximum-likelihood
/// decoding, for rotation- or ellipsoid-invariant Gaussian noise.
pub fn poisson_mle_log_pe(
    model: &NoiseModel,
    n: usize,
    alpha: f64,
) -> Result<LogProbability, ExactError> {
    if n == 0 {
        return Err(ExactError::BadParameter {
            what: "n",
            value: 0.0,
        });
    }
    if !(alpha > 0.0) {
        return Err(ExactError::BadParameter {
            what: "alpha",
            value: alpha,
        });
    }
    let nf = n as f64;
    let log_lambda = -nf * (model.entropy_rate() + alpha.ln());
    // Reduce to the radial law of the discrepancy: a chi_n radius, with the
    // level-set volume a ball (white) or a fixed ellipsoid (colored).
    let (radial_sigma, log_vol): (f64, Box<dyn Fn(f64) -> f64>) = match model {
        NoiseModel::WhiteGaussian { sigma } => {
            let s = *sigma;
            (s, Box::new(move |r: f64| log_ball_volume(n, r, Norm::L2)))
        }
        NoiseModel::ColoredGaussian(c) => {
            if n > c.max_n() {
                return Err(ExactError::Noise(NoiseError::DimensionExceedsCache {
                    n,
                    max_n: c.max_n(),
                }));
            }
            // Whitened (Mahalanobis) radius is chi_n with unit scale; the
            // level set maps back to an ellipsoid of the same radius.
            let half_log_det = 0.5 * c.log_det(n);
            (
                1.0,
                Box::new(move |r: f64| log_ball_volume(n, r, Norm::L2) + half_log_det),
            )
        }
        other => {
            return Err(ExactError::Unsupported {
                op: "poisson_mle_log_pe",
                model: other.kind_name(),
            })
        }
    };
    let r_max = chi_upper_limit(n, radial_sigma);
    let log_pe = log_integrate(
        |r| {
            let log_mass = log_lambda + log_vol(r);
            ln_one_minus_exp_of_log(log_mass) + chi_density_log(n, radial_sigma, r)
        },
        0.0,
        r_max,
        1e-12,
        QUAD_MAX_INTERVALS,
    )?;
    let log_ps = log_integrate(
        |r| {
            let log_mass = log_lambda + log_vol(r);
            -log_mass.exp() + chi_density_log(n, radial_sigma, r)
        },
        0.0,
        r_max,
        1e-12,
        QUAD_MAX_INTERVALS,
    )?;
    Ok(LogProbability {
        log_pe,
        log_ps,
        n,
        alpha,
        model: model.kind_name(),
    })
}

/// Upper bound on the error probability of a hard-core (mutually thinned)
/// codebook under maximum-likelihood decoding, in logs.
///
/// The codebook keeps the pre-thinning intensity `exp(-n (h + ln alpha))`
/// as its competitor bound while the exclusion geometry is evaluated at
/// `alpha_tilde = alpha - epsilon`; the thinning clears every competitor
/// whose pull region would intersect the exclusion ball, so only the part of
/// the noise ball beyond the exclusion constraint can capture the received
/// point.
pub fn matern_mle_log_pe_bound(
    model: &NoiseModel,
    n: usize,
    alpha: f64,
    epsilon: f64,
) -> Result<f64, ExactError> {
    if n == 0 {
        return Err(ExactError::BadParameter {
            what: "n",
            value: 0.0,
        });
    }
    if !(epsilon >= 0.0) {
        return Err(ExactError::BadParameter {
            what: "epsilon",
            value: epsilon,
        });
    }
    let alpha_tilde = alpha - epsilon;
    if !(alpha_tilde > 1.0) {
        return Err(ExactError::BadParameter {
            what: "alpha - epsilon",
            value: alpha_tilde,
        });
    }
    let nf = n as f64;
    let log_lambda = -nf * (model.entropy_rate() + alpha.ln());
    match model {
        NoiseModel::WhiteGaussian { sigma } => {
            // Normalized radius v = |noise| / (sigma sqrt n); competitors
            // survive only outside the exclusion ball, which shrinks the
            // capture ball to the lune-inscribed radius.
            let scale = sigma * nf.sqrt();
            let v_hi = (chi_upper_limit(n, 1.0) / nf.sqrt()).max(1.5 * alpha_tilde);
            let v_lo = 0.5 * alpha_tilde;
            let bound = log_integrate(
                |v| {
                    let c = matern_lune_radius(v, alpha_tilde);
                    if c <= 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    let log_mass = log_lambda + log_ball_volume(n, c * scale, Norm::L2);
                    log_mass.min(0.0) + chi_density_log(n, 1.0, v * nf.sqrt()) + nf.sqrt().ln()
                },
                v_lo,
                v_hi,
                1e-12,
                QUAD_MAX_INTERVALS,
            )?;
            Ok(bound.min(0.0))
        }
        NoiseModel::WhiteSymExp { sigma } => {
            // Normalized L1 radius v = |noise|_1 sqrt(2) / (n sigma).  The
            // exclusion constraint empties the capture region below
            // alpha_tilde / 2; above, the full L1 ball is the (upper-bound)
            // capture volume.
            let scale = nf * sigma / std::f64::consts::SQRT_2;
            let v_hi = gamma_upper_limit(n).max(1.5 * alpha_tilde);
            let v_lo = 0.5 * alpha_tilde;
            let bound = log_integrate(
                |v| {
                    let log_mass = log_lambda + log_ball_volume(n, v * scale, Norm::L1);
                    log_mass.min(0.0) + gamma_l1_density_log(n, *sigma, v * scale) + scale.ln()
                },
                v_lo,
                v_hi,
                1e-12,
                QUAD_MAX_INTERVALS,
            )?;
            Ok(bound.min(0.0))
        }
        other => Err(ExactError::Unsupported {
            op: "matern_mle_log_pe_bound",
            model: other.kind_name(),
        }),
    }
}

/// Upper bound on the typicality decoder's error probability, in logs:
/// the chance the displacement leaves the typical shell, plus the chance a
/// codeword of intensity `exp(n rate)` lands in the collision set.
pub fn typicality_log_pe_bound(
    model: &NoiseModel,
    n: usize,
    rate: f64,
    delta: f64,
) -> Result<f64, ExactError> {
    if n == 0 {
        return Err(ExactError::BadParameter {
            what: "n",
            value: 0.0,
        });
    }
    if !(delta > 0.0) {
        return Err(ExactError::BadParameter {
            what: "delta",
            value: delta,
        });
    }
    let nf = n as f64;
    let tail_log = match model {
        NoiseModel::WhiteGaussian { .. } => {
            // |Z|^2 / sigma^2 is chi-square with n degrees of freedom.
            let lo = 0.5 * nf * (1.0 - 2.0 * delta);
            let below = if lo > 0.0 {
                ln_gammp(0.5 * nf, lo)
            } else {
                f64::NEG_INFINITY
            };
            let above = ln_gammq(0.5 * nf, 0.5 * nf * (1.0 + 2.0 * delta));
            log_sum_exp(below, above)
        }
        NoiseModel::WhiteSymExp { .. } => {
            // |Z|_1 sqrt(2) / sigma is Gamma(n, 1).
            let lo = nf * (1.0 - delta);
            let below = if lo > 0.0 {
                ln_gammp(nf, lo)
            } else {
                f64::NEG_INFINITY
            };
            let above = ln_gammq(nf, nf * (1.0 + delta));
            log_sum_exp(below, above)
        }
        // Every draw hits the support cube, and the cube is the typical set.
        NoiseModel::WhiteUniform { .. } => f64::NEG_INFINITY,
        other => {
            return Err(ExactError::Unsupported {
                op: "typicality_log_pe_bound",
                model: other.kind_name(),
            })
        }
    };
    let log_vol = model.typicality_log_volume(n, delta)?;
    let collision_log = ln_one_minus_exp_of_log(nf * rate + log_vol);
    Ok(log_sum_exp(tail_log, collision_log))
}

/// Monte Carlo bound on the error probability of maximum-likelihood decoding
/// that was *designed* for one noise model while the displacement is drawn
/// from another: averages the design model's conditional error probability
/// `1 - exp(-lambda W_design(u))` over the actual displacement law, where
/// `u` is the design discrepancy of the draw and `lambda` comes from the
/// design entropy.  Exact ties inside the level set are counted as errors,
/// which is what makes this a bound.
pub fn mismatched_pe_bound(
    design: &NoiseModel,
    actual: &NoiseModel,
    n: usize,
    alpha: f64,
    trials: u64,
    seed: u64,
) -> Result<Estimate, ExactError> {
    if n == 0 {
        return Err(ExactError::BadParameter {
            what: "n",
            value: 0.0,
        });
    }
    if !(alpha > 0.0) {
        return Err(ExactError::BadParameter {
            what: "alpha",
            value: alpha,
        });
    }
    if trials == 0 {
        return Err(ExactError::BadParameter {
            what: "trials",
            value: 0.0,
        });
    }
    // Surface unsupported design models before burning trials.
    design.discrepancy_floor()?;
    let nf = n as f64;
    let log_lambda = -nf * (design.entropy_rate() + alpha.ln());
    let (sum, sum_sq, edges) = run_batches(trials, |t| {
        let mut rng = trial_rng(seed, t);
        let d = actual.sample(n, &mut rng)?;
        let u = design.stun_from_origin(&d)?;
        let w = design.stun_level_log_volume(n, u)?;
        let p = -f64::exp_m1(-(log_lambda + w).exp());
        Ok((p, false))
    })?;
    Ok(Estimate::from_sums(sum, sum_sq, trials, seed, edges, false))
}

/// Log success probability of the unshifted cubic grid codebook with spacing
/// `exp(-rate)` under white Gaussian noise: per-coordinate rounding must get
/// every coordinate right.
pub fn grid_log_ps(n: usize, rate: f64, sigma: f64) -> f64 {
    let spacing = (-rate).exp();
    n as f64 * ln_erf(spacing / (2.0 * sigma * std::f64::consts::SQRT_2))
}

/// Sensitivity of the Poisson success probability to the interferer
/// intensity: `d p_s / d lambda = -E[vol B(|Z|) exp(-lambda vol B(|Z|))]`
/// for white Gaussian noise.  Always negative.
pub fn dps_dlambda(n: usize, lambda: f64, sigma: f64) -> Result<f64, ExactError> {
    if n == 0 {
        return Err(ExactError::BadParameter {
            what: "n",
            value: 0.0,
        });
    }
    if !(lambda >= 0.0) {
        return Err(ExactError::BadParameter {
            what: "lambda",
            value: lambda,
        });
    }
    let r_max = chi_upper_limit(n, sigma);
    let log_integral = log_integrate(
        |r| {
            let log_vol = log_ball_volume(n, r, Norm::L2);
            log_vol - lambda * log_vol.exp() + chi_density_log(n, sigma, r)
        },
        0.0,
        r_max,
        1e-12,
        QUAD_MAX_INTERVALS,
    )?;
    Ok(-log_integral.exp())
}

/// Probability that the entire typical shell around a codeword lies inside
/// its own decision cell: no interferer of intensity `exp(-n (h + ln alpha))`
/// within twice the shell's outer radius.  As `n` grows this tends to one
/// iff `alpha > 2 sqrt(1 + 2 delta)`.
pub fn coverage_prob_typ_in_voronoi(
    n: usize,
    alpha: f64,
    delta: f64,
    sigma: f64,
) -> Result<f64, ExactError> {
    if n == 0 {
        return Err(ExactError::BadParameter {
            what: "n",
            value: 0.0,
        });
    }
    if !(alpha > 0.0) {
        return Err(ExactError::BadParameter {
            what: "alpha",
            value: alpha,
        });
    }
    if !(delta > 0.0) {
        return Err(ExactError::BadParameter {
            what: "delta",
            value: delta,
        });
    }
    let nf = n as f64;
    let model = NoiseModel::white_gaussian(sigma)?;
    let log_lambda = -nf * (model.entropy_rate() + alpha.ln());
    let shell = 2.0 * sigma * (nf * (1.0 + 2.0 * delta)).sqrt();
    let log_mass = log_lambda + log_ball_volume(n, shell, Norm::L2);
    Ok((-log_mass.exp()).exp())
}
