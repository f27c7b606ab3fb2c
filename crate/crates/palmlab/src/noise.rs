//! Stationary noise families and their entropy machinery.
//!
//! Five models are supported: white Gaussian, white symmetric exponential
//! (Laplace), white uniform, colored Gaussian given through a spectral
//! density, and first-order Gauss-Markov.  All are parametrised so that
//! `sigma` (or `sigma_eps`) has per-coordinate standard-deviation meaning.
//!
//! The quantity that organises everything is the *discrepancy* of a vector
//! against a candidate source point,
//!
//! ```text
//!     D(s, t) = -(1/n) ln f^n(s - t),
//! ```
//!
//! i.e. the per-dimension log-likelihood deficit.  A maximum-likelihood
//! decoder picks the candidate with the smallest discrepancy; the volume of
//! a sublevel set `{x : D(x, 0) <= u}` is what couples the noise to the
//! codebook intensity; and the large-deviations behaviour of `D(X, 0)` for
//! `X` drawn from the noise itself is captured by [`NoiseModel::rate_function`].
//!
//! The colored-Gaussian model caches its covariance machinery at
//! construction: Toeplitz covariances for lags `0..max_n`, one Cholesky
//! factor whose leading blocks serve every dimension up to `max_n`, and the
//! spectral integrals for the entropy rate.  Requests beyond `max_n` are
//! errors, and a spectrum that fails positive definiteness is rejected up
//! front.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::geometry::{log_ball_volume, Norm};
use crate::numerics::{
    cholesky_lower, integrate, log_diff_exp, solve_lower_sq_norm, NumericsError, LN_2PI,
};

/// ln 2 sqrt 3 is used all over the uniform model: its support half-width is
/// `sqrt3 sigma`, giving entropy `ln(2 sqrt3 sigma)`.
const SQRT_3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseError {
    BadParameter {
        what: &'static str,
        value: f64,
    },
    /// The operation has no tractable form for this model (e.g. sublevel-set
    /// volumes of a Gauss-Markov density).
    Unsupported {
        op: &'static str,
        model: &'static str,
    },
    /// Colored-Gaussian request beyond the covariance cache built at
    /// construction.
    DimensionExceedsCache {
        n: usize,
        max_n: usize,
    },
    /// The spectral density was nonpositive or produced a covariance that is
    /// not positive definite at the given order.
    SpectrumNotPositive {
        order: usize,
    },
    SpectrumQuadrature(NumericsError),
}

impl fmt::Display for NoiseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseError::BadParameter { what, value } => {
                write!(f, "bad noise parameter: {} = {}", what, value)
            }
            NoiseError::Unsupported { op, model } => {
                write!(f, "{} is not supported for the {} model", op, model)
            }
            NoiseError::DimensionExceedsCache { n, max_n } => write!(
                f,
                "dimension {} exceeds the covariance cache built for max_n = {}",
                n, max_n
            ),
            NoiseError::SpectrumNotPositive { order } => write!(
                f,
                "spectral density is not positive definite (failed at order {})",
                order
            ),
            NoiseError::SpectrumQuadrature(e) => write!(f, "spectral quadrature failed: {}", e),
        }
    }
}

impl std::error::Error for NoiseError {}

impl From<NumericsError> for NoiseError {
    fn from(e: NumericsError) -> Self {
        NoiseError::SpectrumQuadrature(e)
    }
}

/// Covariance and spectral caches for a stationary colored Gaussian process,
/// built once from a spectral density.
#[derive(Debug, Clone)]
pub struct ColoredGaussian {
    max_n: usize,
    /// Autocovariance lags r_0 .. r_{max_n - 1}.
    lags: Vec<f64>,
    /// Lower Cholesky factor of the order-max_n Toeplitz covariance,
    /// row-major with stride max_n.  Leading blocks factor the leading
    /// covariance submatrices, so this one factorization serves every n.
    chol: Vec<f64>,
    /// log_det_prefix[n] = ln det Gamma_n (prefix sums of 2 ln L_ii).
    log_det_prefix: Vec<f64>,
    /// Entropy rate (1/4pi) int ln(2 pi e g).
    entropy: f64,
    /// Log spectral geometric mean (1/2pi) int ln g; exp of it is the
    /// effective white variance for exponent purposes.
    log_spectral_mean: f64,
    /// Row-sum bound on the largest covariance eigenvalue, valid at every
    /// order: r_0 + 2 sum |r_k|.
    eigen_upper: f64,
}

impl ColoredGaussian {
    pub fn max_n(&self) -> usize {
        self.max_n
    }

    pub fn lag(&self, k: usize) -> f64 {
        self.lags[k]
    }

    /// ln det of the order-n covariance.
    pub fn log_det(&self, n: usize) -> f64 {
        self.log_det_prefix[n]
    }

    pub fn eigen_upper_bound(&self) -> f64 {
        self.eigen_upper
    }

    /// Geometric-mean spectral level: exp((1/2pi) int ln g).  The model's
    /// exponents coincide with those of white Gaussian noise at
    /// `sigma^2 = ` this value.
    pub fn effective_variance(&self) -> f64 {
        self.log_spectral_mean.exp()
    }

    /// Finite-n entropy (1/n) h(Gamma_n) = (1/2) ln 2 pi + (1/2n) ln det + 1/2;
    /// decreases to the entropy rate as n grows.
    pub fn entropy_at(&self, n: usize) -> f64 {
        0.5 * LN_2PI + self.log_det_prefix[n] / (2.0 * n as f64) + 0.5
    }

    fn check_n(&self, n: usize) -> Result<(), NoiseError> {
        if n == 0 || n > self.max_n {
            Err(NoiseError::DimensionExceedsCache {
                n,
                max_n: self.max_n,
            })
        } else {
            Ok(())
        }
    }

    fn quad_form(&self, x: &[f64]) -> f64 {
        solve_lower_sq_norm(&self.chol, self.max_n, x.len(), x)
    }
}

/// A stationary noise model.  Construct through the checked constructors;
/// the colored model carries its covariance cache by value.
#[derive(Debug, Clone)]
pub enum NoiseModel {
    WhiteGaussian { sigma: f64 },
    WhiteSymExp { sigma: f64 },
    WhiteUniform { sigma: f64 },
    ColoredGaussian(ColoredGaussian),
    MarkovGaussian { a: f64, sigma_eps: f64 },
}

fn check_positive(what: &'static str, value: f64) -> Result<f64, NoiseError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(NoiseError::BadParameter { what, value })
    }
}

impl NoiseModel {
    pub fn white_gaussian(sigma: f64) -> Result<Self, NoiseError> {
        Ok(NoiseModel::WhiteGaussian {
            sigma: check_positive("sigma", sigma)?,
        })
    }

    pub fn white_sym_exp(sigma: f64) -> Result<Self, NoiseError> {
        Ok(NoiseModel::WhiteSymExp {
            sigma: check_positive("sigma", sigma)?,
        })
    }

    pub fn white_uniform(sigma: f64) -> Result<Self, NoiseError> {
        Ok(NoiseModel::WhiteUniform {
            sigma: check_positive("sigma", sigma)?,
        })
    }

    pub fn markov_gaussian(a: f64, sigma_eps: f64) -> Result<Self, NoiseError> {
        if !(a.abs() < 1.0) || !a.is_finite() {
            return Err(NoiseError::BadParameter { what: "a", value: a });
        }
        Ok(NoiseModel::MarkovGaussian {
            a,
            sigma_eps: check_positive("sigma_eps", sigma_eps)?,
        })
    }

    /// Colored Gaussian noise from a spectral density on `[-pi, pi]`.
    /// Autocovariances for lags up to `max_n - 1`, the Cholesky factor of
    /// the order-`max_n` covariance, and the entropy integrals are all
    /// computed here; a nonpositive spectrum or a covariance that fails
    /// positive definiteness is an immediate error.
    pub fn colored_gaussian<F: Fn(f64) -> f64>(g: F, max_n: usize) -> Result<Self, NoiseError> {
        assert!(max_n >= 1, "colored model needs max_n >= 1");
        let pi = std::f64::consts::PI;
        // The spectrum must be strictly positive for ln g to integrate; scan
        // before spending time on quadrature.
        for i in 0..512 {
            let beta = -pi + 2.0 * pi * (i as f64 + 0.5) / 512.0;
            let v = g(beta);
            if !(v > 0.0) || !v.is_finite() {
                return Err(NoiseError::SpectrumNotPositive { order: 0 });
            }
        }
        // r_k = (1/2pi) int g(beta) cos(k beta) dbeta, integrated piecewise
        // with at least four panels per oscillation so high lags stay exact.
        let mut lags = Vec::with_capacity(max_n);
        for k in 0..max_n {
            let segments = 8.max(4 * (k + 1));
            let mut acc = 0.0;
            for s in 0..segments {
                let a = -pi + 2.0 * pi * s as f64 / segments as f64;
                let b = -pi + 2.0 * pi * (s + 1) as f64 / segments as f64;
                acc += integrate(
                    |beta| g(beta) * (k as f64 * beta).cos(),
                    a,
                    b,
                    1e-13,
                    1e-13,
                    400,
                )?;
            }
            lags.push(acc / (2.0 * pi));
        }
        // Entropy integrals.
        let mut log_int = 0.0;
        for s in 0..16 {
            let a = -pi + 2.0 * pi * s as f64 / 16.0;
            let b = -pi + 2.0 * pi * (s + 1) as f64 / 16.0;
            log_int += integrate(|beta| g(beta).ln(), a, b, 1e-12, 1e-12, 400)?;
        }
        let log_spectral_mean = log_int / (2.0 * pi);
        let entropy = 0.5 * (LN_2PI + 1.0) + 0.5 * log_spectral_mean;
        // Toeplitz covariance and its factor.
        let mut cov = vec![0.0; max_n * max_n];
        for i in 0..max_n {
            for j in 0..max_n {
                cov[i * max_n + j] = lags[i.abs_diff(j)];
            }
        }
        let chol = cholesky_lower(max_n, &cov).map_err(|e| match e {
            NumericsError::NotPositiveDefinite { index } => {
                NoiseError::SpectrumNotPositive { order: index }
            }
            other => NoiseError::SpectrumQuadrature(other),
        })?;
        let mut log_det_prefix = vec![0.0; max_n + 1];
        for i in 0..max_n {
            log_det_prefix[i + 1] = log_det_prefix[i] + 2.0 * chol[i * max_n + i].ln();
        }
        let eigen_upper = lags[0] + 2.0 * lags.iter().skip(1).map(|r| r.abs()).sum::<f64>();
        Ok(NoiseModel::ColoredGaussian(ColoredGaussian {
            max_n,
            lags,
            chol,
            log_det_prefix,
            entropy,
            log_spectral_mean,
            eigen_upper,
        }))
    }

    /// Colored Gaussian with the rational spectrum of an AR(1) recursion,
    /// `g(beta) = sigma_eps^2 / (1 - 2 a cos beta + a^2)`.  The same process
    /// as [`NoiseModel::markov_gaussian`], but exposed through its spectrum
    /// so the full colored machinery applies; the pair makes a good
    /// consistency oracle.
    pub fn colored_ar1(a: f64, sigma_eps: f64, max_n: usize) -> Result<Self, NoiseError> {
        if !(a.abs() < 1.0) || !a.is_finite() {
            return Err(NoiseError::BadParameter { what: "a", value: a });
        }
        let s2 = check_positive("sigma_eps", sigma_eps)?.powi(2);
        Self::colored_gaussian(move |beta| s2 / (1.0 - 2.0 * a * beta.cos() + a * a), max_n)
    }

    /// Short tag for CSV output and error messages.
    pub fn kind_name(&self) -> &'static str {
        match self {
            NoiseModel::WhiteGaussian { .. } => "wgn",
            NoiseModel::WhiteSymExp { .. } => "symexp",
            NoiseModel::WhiteUniform { .. } => "uniform",
            NoiseModel::ColoredGaussian(_) => "cgn",
            NoiseModel::MarkovGaussian { .. } => "markov-ar1",
        }
    }

    pub fn as_colored(&self) -> Option<&ColoredGaussian> {
        match self {
            NoiseModel::ColoredGaussian(c) => Some(c),
            _ => None,
        }
    }

    /// Differential entropy rate in nats per dimension.
    pub fn entropy_rate(&self) -> f64 {
        match self {
            NoiseModel::WhiteGaussian { sigma } => 0.5 * (LN_2PI + 1.0) + sigma.ln(),
            NoiseModel::WhiteSymExp { sigma } => {
                1.0 + 0.5 * std::f64::consts::LN_2 + sigma.ln()
            }
            NoiseModel::WhiteUniform { sigma } => (2.0 * SQRT_3 * sigma).ln(),
            NoiseModel::ColoredGaussian(c) => c.entropy,
            NoiseModel::MarkovGaussian { sigma_eps, .. } => {
                0.5 * (LN_2PI + 1.0) + sigma_eps.ln()
            }
        }
    }

    /// Stationary per-coordinate variance.
    pub fn variance_per_dim(&self) -> f64 {
        match self {
            NoiseModel::WhiteGaussian { sigma }
            | NoiseModel::WhiteSymExp { sigma }
            | NoiseModel::WhiteUniform { sigma } => sigma * sigma,
            NoiseModel::ColoredGaussian(c) => c.lags[0],
            NoiseModel::MarkovGaussian { a, sigma_eps } => sigma_eps * sigma_eps / (1.0 - a * a),
        }
    }

    /// Draw one n-dimensional noise vector.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>, NoiseError> {
        assert!(n >= 1);
        match self {
            NoiseModel::WhiteGaussian { sigma } => Ok((0..n)
                .map(|_| sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
                .collect()),
            NoiseModel::WhiteSymExp { sigma } => {
                let scale = sigma / std::f64::consts::SQRT_2;
                Ok((0..n)
                    .map(|_| {
                        let mag: f64 = Exp1.sample(rng);
                        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                        sign * scale * mag
                    })
                    .collect())
            }
            NoiseModel::WhiteUniform { sigma } => {
                let half = SQRT_3 * sigma;
                Ok((0..n).map(|_| rng.gen_range(-half..half)).collect())
            }
            NoiseModel::ColoredGaussian(c) => {
                c.check_n(n)?;
                let z: Vec<f64> = (0..n)
                    .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
                    .collect();
                let mut x = vec![0.0; n];
                for i in 0..n {
                    let mut s = 0.0;
                    for k in 0..=i {
                        s += c.chol[i * c.max_n + k] * z[k];
                    }
                    x[i] = s;
                }
                Ok(x)
            }
            NoiseModel::MarkovGaussian { a, sigma_eps } => {
                let stat = sigma_eps / (1.0 - a * a).sqrt();
                let mut x = vec![0.0; n];
                x[0] = stat * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
                for i in 1..n {
                    let eps: f64 =
                        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
                    x[i] = a * x[i - 1] + sigma_eps * eps;
                }
                Ok(x)
            }
        }
    }

    /// Log density of the n-dimensional marginal at `x` (`-inf` outside the
    /// support).
    pub fn log_density(&self, x: &[f64]) -> Result<f64, NoiseError> {
        let n = x.len();
        assert!(n >= 1);
        let nf = n as f64;
        match self {
            NoiseModel::WhiteGaussian { sigma } => {
                let q: f64 = x.iter().map(|v| v * v).sum();
                Ok(-0.5 * nf * (LN_2PI + 2.0 * sigma.ln()) - q / (2.0 * sigma * sigma))
            }
            NoiseModel::WhiteSymExp { sigma } => {
                let l1: f64 = x.iter().map(|v| v.abs()).sum();
                let rate = std::f64::consts::SQRT_2 / sigma;
                Ok(nf * (0.5 * rate).ln() - rate * l1)
            }
            NoiseModel::WhiteUniform { sigma } => {
                let half = SQRT_3 * sigma;
                if x.iter().all(|v| v.abs() <= half) {
                    Ok(-nf * (2.0 * half).ln())
                } else {
                    Ok(f64::NEG_INFINITY)
                }
            }
            NoiseModel::ColoredGaussian(c) => {
                c.check_n(n)?;
                Ok(-0.5 * nf * LN_2PI - 0.5 * c.log_det_prefix[n] - 0.5 * c.quad_form(x))
            }
            NoiseModel::MarkovGaussian { a, sigma_eps } => {
                let stat2 = sigma_eps * sigma_eps / (1.0 - a * a);
                let mut acc = -0.5 * (LN_2PI + stat2.ln()) - x[0] * x[0] / (2.0 * stat2);
                let e2 = sigma_eps * sigma_eps;
                for i in 1..n {
                    let r = x[i] - a * x[i - 1];
                    acc += -0.5 * (LN_2PI + e2.ln()) - r * r / (2.0 * e2);
                }
                Ok(acc)
            }
        }
    }

    /// Discrepancy `D(s, t) = -(1/n) ln f^n(s - t)`; `+inf` when the
    /// difference falls outside the noise support.  `stun(s, t)` equals
    /// `stun(s - t, 0)` exactly, since both paths compute the same
    /// difference vector.
    pub fn stun(&self, s: &[f64], t: &[f64]) -> Result<f64, NoiseError> {
        assert_eq!(s.len(), t.len(), "stun arguments must share a dimension");
        let diff: Vec<f64> = s.iter().zip(t).map(|(a, b)| a - b).collect();
        self.stun_from_origin(&diff)
    }

    /// Discrepancy of a difference vector against the origin.
    pub fn stun_from_origin(&self, diff: &[f64]) -> Result<f64, NoiseError> {
        let ld = self.log_density(diff)?;
        Ok(-ld / diff.len() as f64)
    }

    /// Log volume of the discrepancy sublevel set
    /// `W^n(u) = vol{x : D(x, 0) <= u}`; `-inf` when the set is empty or of
    /// measure zero.  Not available for the Gauss-Markov model, whose
    /// sublevel sets have no tractable volume.
    pub fn stun_level_log_volume(&self, n: usize, u: f64) -> Result<f64, NoiseError> {
        assert!(n >= 1);
        let nf = n as f64;
        match self {
            NoiseModel::WhiteGaussian { sigma } => {
                let tau = 0.5 * (LN_2PI + 2.0 * sigma.ln());
                if u <= tau {
                    return Ok(f64::NEG_INFINITY);
                }
                let r = sigma * (2.0 * nf * (u - tau)).sqrt();
                Ok(log_ball_volume(n, r, Norm::L2))
            }
            NoiseModel::WhiteSymExp { sigma } => {
                let tau = (std::f64::consts::SQRT_2 * sigma).ln();
                if u <= tau {
                    return Ok(f64::NEG_INFINITY);
                }
                let r = nf * sigma * (u - tau) / std::f64::consts::SQRT_2;
                Ok(log_ball_volume(n, r, Norm::L1))
            }
            NoiseModel::WhiteUniform { sigma } => {
                let tau = (2.0 * SQRT_3 * sigma).ln();
                if u >= tau {
                    Ok(nf * tau)
                } else {
                    Ok(f64::NEG_INFINITY)
                }
            }
            NoiseModel::ColoredGaussian(c) => {
                c.check_n(n)?;
                let tau = 0.5 * LN_2PI + c.log_det_prefix[n] / (2.0 * nf);
                if u <= tau {
                    return Ok(f64::NEG_INFINITY);
                }
                let r = (2.0 * nf * (u - tau)).sqrt();
                Ok(log_ball_volume(n, r, Norm::L2) + 0.5 * c.log_det_prefix[n])
            }
            NoiseModel::MarkovGaussian { .. } => Err(NoiseError::Unsupported {
                op: "stun_level_log_volume",
                model: self.kind_name(),
            }),
        }
    }

    /// Log volume of the delta-typical set
    /// `A = {x : |D(x, 0) - h| < delta}` (with the finite-n entropy as the
    /// center for the colored model).  Shell volumes whose inner and outer
    /// log measures agree to within the log-diff floor collapse to `-inf`.
    pub fn typicality_log_volume(&self, n: usize, delta: f64) -> Result<f64, NoiseError> {
        assert!(n >= 1);
        if !(delta > 0.0) {
            return Err(NoiseError::BadParameter {
                what: "delta",
                value: delta,
            });
        }
        let nf = n as f64;
        match self {
            NoiseModel::WhiteGaussian { sigma } => {
                let outer = log_ball_volume(n, sigma * (nf * (1.0 + 2.0 * delta)).sqrt(), Norm::L2);
                let inner = if 1.0 - 2.0 * delta > 0.0 {
                    log_ball_volume(n, sigma * (nf * (1.0 - 2.0 * delta)).sqrt(), Norm::L2)
                } else {
                    f64::NEG_INFINITY
                };
                Ok(log_diff_exp(outer, inner))
            }
            NoiseModel::WhiteSymExp { sigma } => {
                let scale = nf * sigma / std::f64::consts::SQRT_2;
                let outer = log_ball_volume(n, scale * (1.0 + delta), Norm::L1);
                let inner = if 1.0 - delta > 0.0 {
                    log_ball_volume(n, scale * (1.0 - delta), Norm::L1)
                } else {
                    f64::NEG_INFINITY
                };
                Ok(log_diff_exp(outer, inner))
            }
            NoiseModel::WhiteUniform { sigma } => Ok(nf * (2.0 * SQRT_3 * sigma).ln()),
            NoiseModel::ColoredGaussian(c) => {
                c.check_n(n)?;
                let half_det = 0.5 * c.log_det_prefix[n];
                let outer =
                    log_ball_volume(n, (nf * (1.0 + 2.0 * delta)).sqrt(), Norm::L2) + half_det;
                let inner = if 1.0 - 2.0 * delta > 0.0 {
                    log_ball_volume(n, (nf * (1.0 - 2.0 * delta)).sqrt(), Norm::L2) + half_det
                } else {
                    f64::NEG_INFINITY
                };
                Ok(log_diff_exp(outer, inner))
            }
            NoiseModel::MarkovGaussian { .. } => Err(NoiseError::Unsupported {
                op: "typicality_log_volume",
                model: self.kind_name(),
            }),
        }
    }

    /// Whether `x` belongs to the delta-typical set used by the typicality
    /// decoder.  Centered at the entropy rate for white models and at the
    /// finite-n entropy for the colored model.
    pub fn is_typical(&self, x: &[f64], delta: f64) -> Result<bool, NoiseError> {
        let center = match self {
            NoiseModel::ColoredGaussian(c) => {
                c.check_n(x.len())?;
                c.entropy_at(x.len())
            }
            NoiseModel::MarkovGaussian { .. } => {
                return Err(NoiseError::Unsupported {
                    op: "is_typical",
                    model: self.kind_name(),
                })
            }
            _ => self.entropy_rate(),
        };
        let d = self.stun_from_origin(x)?;
        Ok((d - center).abs() < delta)
    }

    /// Draw a noise vector and return the discrepancy of the draw against
    /// the origin — one sample from the entropy spectrum of the model.
    pub fn entropy_spectrum_sample<R: Rng + ?Sized>(
        &self,
        n: usize,
        rng: &mut R,
    ) -> Result<f64, NoiseError> {
        let x = self.sample(n, rng)?;
        self.stun_from_origin(&x)
    }

    /// Large-deviations rate function `I(u)` of the discrepancy of the noise
    /// against its own source: `P(D(X, 0) ~ u) = e^{-n I(u) + o(n)}`.
    /// `I(h) = 0`, `I` is convex, and `I = +inf` at and below the model's
    /// essential infimum of the discrepancy (the uniform model degenerates
    /// to a point mass at its entropy).  Not available for Gauss-Markov.
    pub fn rate_function(&self, u: f64) -> Result<f64, NoiseError> {
        match self {
            NoiseModel::WhiteGaussian { sigma } => {
                let tau = 0.5 * (LN_2PI + 2.0 * sigma.ln());
                if u <= tau {
                    return Ok(f64::INFINITY);
                }
                Ok(u - self.entropy_rate() - 0.5 * (2.0 * (u - tau)).ln())
            }
            NoiseModel::WhiteSymExp { sigma } => {
                let tau = (std::f64::consts::SQRT_2 * sigma).ln();
                if u <= tau {
                    return Ok(f64::INFINITY);
                }
                Ok(u - self.entropy_rate() - (u - tau).ln())
            }
            NoiseModel::WhiteUniform { .. } => {
                if u == self.entropy_rate() {
                    Ok(0.0)
                } else {
                    Ok(f64::INFINITY)
                }
            }
            NoiseModel::ColoredGaussian(c) => {
                // Same shape as white Gaussian at the effective variance
                // exp(log spectral mean).
                let tau = 0.5 * (LN_2PI + c.log_spectral_mean);
                if u <= tau {
                    return Ok(f64::INFINITY);
                }
                Ok(u - c.entropy - 0.5 * (2.0 * (u - tau)).ln())
            }
            NoiseModel::MarkovGaussian { .. } => Err(NoiseError::Unsupported {
                op: "rate_function",
                model: self.kind_name(),
            }),
        }
    }

    /// The essential infimum of the discrepancy: below this, sublevel sets
    /// are empty and the rate function is +inf.
    pub fn discrepancy_floor(&self) -> Result<f64, NoiseError> {
        match self {
            NoiseModel::WhiteGaussian { sigma } => Ok(0.5 * (LN_2PI + 2.0 * sigma.ln())),
            NoiseModel::WhiteSymExp { sigma } => Ok((std::f64::consts::SQRT_2 * sigma).ln()),
            NoiseModel::WhiteUniform { sigma } => Ok((2.0 * SQRT_3 * sigma).ln()),
            NoiseModel::ColoredGaussian(c) => Ok(0.5 * (LN_2PI + c.log_spectral_mean)),
            NoiseModel::MarkovGaussian { .. } => Err(NoiseError::Unsupported {
                op: "discrepancy_floor",
                model: self.kind_name(),
            }),
        }
    }
}
