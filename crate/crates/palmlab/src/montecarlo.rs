//! Monte Carlo estimators for the coding pipeline.
//!
//! Every estimator is deterministic given `(seed, trials)`: trial `t` runs
//! on its own ChaCha stream (`seed_from_u64(seed)` + `set_stream(t)`), trials
//! are grouped into fixed batches that may execute on any number of rayon
//! threads, and the batch partial sums are folded sequentially in batch
//! order.  Reruns — and runs under different `--threads` settings — produce
//! bit-identical results.
//!
//! Each estimator also counts *edge events*: trials whose decision could
//! have depended on codewords outside the sampling window.  A run with more
//! than one edge event per thousand trials should be treated as biased and
//! rerun with a larger window (see [`Estimate::is_valid`]).

use std::error::Error;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::decoding::{self, Decoder};
use crate::geometry::{log_ball_volume, Norm};
use crate::noise::{NoiseError, NoiseModel};
use crate::pointprocess::{
    sample_palm_interferers, sample_poisson, PalmKind, PalmScenario, PointProcessError,
    WindowSpec,
};

/// Trials per work unit.  Fixed so that the partition of trials into batches
/// — and therefore the summation order — never depends on the thread count.
const BATCH_SIZE: u64 = 1024;

#[derive(Debug, Clone, PartialEq)]
pub enum MonteCarloError {
    ZeroTrials,
    BadParameter { what: &'static str, value: f64 },
    /// The requested variance reduction does not apply to this
    /// scenario/decoder/noise combination.
    ReductionUnavailable { reason: &'static str },
    PointProcess(PointProcessError),
    Noise(NoiseError),
}

impl fmt::Display for MonteCarloError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MonteCarloError::ZeroTrials => write!(f, "at least one trial is required"),
            MonteCarloError::BadParameter { what, value } => {
                write!(f, "bad parameter {what} = {value}")
            }
            MonteCarloError::ReductionUnavailable { reason } => {
                write!(f, "reduced estimator unavailable: {reason}")
            }
            MonteCarloError::PointProcess(e) => write!(f, "point process: {e}"),
            MonteCarloError::Noise(e) => write!(f, "noise: {e}"),
        }
    }
}

impl Error for MonteCarloError {}

impl From<PointProcessError> for MonteCarloError {
    fn from(e: PointProcessError) -> Self {
        MonteCarloError::PointProcess(e)
    }
}

impl From<NoiseError> for MonteCarloError {
    fn from(e: NoiseError) -> Self {
        MonteCarloError::Noise(e)
    }
}

/// A Monte Carlo estimate with its sampling pedigree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    /// `mean ± 1.96 · std_error`.
    pub ci95: (f64, f64),
    pub trials: u64,
    pub seed: u64,
    /// Trials whose verdict could have depended on codewords outside the
    /// sampling window.
    pub edge_events: u64,
}

impl Estimate {
    pub(crate) fn from_sums(
        sum: f64,
        sum_sq: f64,
        trials: u64,
        seed: u64,
        edge_events: u64,
        indicator: bool,
    ) -> Self {
        let nf = trials as f64;
        let mean = sum / nf;
        // Indicator estimators get the exact binomial standard error; counts
        // and smoothed values get the empirical one.
        let variance_of_mean = if indicator {
            (mean * (1.0 - mean)).max(0.0) / nf
        } else if trials > 1 {
            ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0) / nf
        } else {
            0.0
        };
        let std_error = variance_of_mean.sqrt();
        Estimate {
            mean,
            std_error,
            ci95: (mean - 1.96 * std_error, mean + 1.96 * std_error),
            trials,
            seed,
            edge_events,
        }
    }

    /// Window-bias sanity gate: at most one edge event per thousand trials.
    pub fn is_valid(&self) -> bool {
        self.edge_events.saturating_mul(1000) <= self.trials
    }
}

/// How the error probability is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Simulate interferers and noise, run the decoder, average the error
    /// indicator.
    Explicit,
    /// Integrate the interferers out: condition on the noise draw and use
    /// the closed-form conditional error probability `1 - exp(-lambda W(u))`.
    /// Only available for the Poisson scenario with the maximum-likelihood
    /// rule and a noise model whose discrepancy level sets have closed-form
    /// volumes.  Never smaller variance than zero, never larger than the
    /// explicit estimator's (Rao-Blackwell).
    Reduced,
}

pub(crate) fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Run `trials` single-trial closures over the fixed batch grid and fold the
/// partial sums in batch order.  Returns `(sum, sum_sq, edge_events)`.
pub(crate) fn run_batches<F>(trials: u64, f: F) -> Result<(f64, f64, u64), MonteCarloError>
where
    F: Fn(u64) -> Result<(f64, bool), MonteCarloError> + Sync,
{
    let batches = (trials + BATCH_SIZE - 1) / BATCH_SIZE;
    let partials: Vec<Result<(f64, f64, u64), MonteCarloError>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let lo = b * BATCH_SIZE;
            let hi = trials.min(lo + BATCH_SIZE);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let mut edges = 0u64;
            for t in lo..hi {
                let (value, edge) = f(t)?;
                sum += value;
                sum_sq += value * value;
                if edge {
                    edges += 1;
                }
            }
            Ok((sum, sum_sq, edges))
        })
        .collect();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut edges = 0u64;
    for partial in partials {
        let (s, q, e) = partial?;
        sum += s;
        sum_sq += q;
        edges += e;
    }
    Ok((sum, sum_sq, edges))
}

/// Radius around the origin containing every interferer the typicality
/// decoder's collision test can see for displacement `d`.
fn typicality_extent(model: &NoiseModel, delta: f64, d: &[f64]) -> f64 {
    let n = d.len() as f64;
    let d2: f64 = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    match model {
        NoiseModel::WhiteGaussian { sigma } => d2 + sigma * (n * (1.0 + 2.0 * delta)).sqrt(),
        NoiseModel::WhiteSymExp { sigma } => {
            d2 + n * sigma * (1.0 + delta) / std::f64::consts::SQRT_2
        }
        NoiseModel::WhiteUniform { sigma } => d2 + sigma * (3.0 * n).sqrt(),
        NoiseModel::ColoredGaussian(c) => {
            d2 + (c.eigen_upper_bound() * n * (1.0 + 2.0 * delta)).sqrt()
        }
        // The typicality decoder rejects this model before sampling.
        NoiseModel::MarkovGaussian { .. } => f64::INFINITY,
    }
}

/// Estimate the per-codeword error probability of a decoding scenario.
///
/// Draw order within a trial is fixed (interferers, then noise), so the
/// explicit and reduced modes consume independent but reproducible
/// randomness for a given `(seed, trial)` pair.
pub fn estimate_pe(
    scenario: &PalmScenario,
    decoder: &Decoder,
    model: &NoiseModel,
    trials: u64,
    seed: u64,
    mode: Mode,
) -> Result<Estimate, MonteCarloError> {
    if trials == 0 {
        return Err(MonteCarloError::ZeroTrials);
    }
    scenario.validate()?;
    let n = scenario.n;
    match mode {
        Mode::Reduced => {
            if !matches!(scenario.kind, PalmKind::PoissonSlivnyak) {
                return Err(MonteCarloError::ReductionUnavailable {
                    reason: "conditioning on the noise is closed-form only for the Poisson scenario",
                });
            }
            if !matches!(decoder, Decoder::Mle) {
                return Err(MonteCarloError::ReductionUnavailable {
                    reason: "only the maximum-likelihood rule has closed-form conditional errors",
                });
            }
            if matches!(model, NoiseModel::MarkovGaussian { .. }) {
                return Err(MonteCarloError::ReductionUnavailable {
                    reason: "discrepancy level sets of the Gauss-Markov model have no closed-form volume",
                });
            }
            let log_lambda = scenario.log_lambda;
            let (sum, sum_sq, edges) = run_batches(trials, |t| {
                let mut rng = trial_rng(seed, t);
                let d = model.sample(n, &mut rng)?;
                let u = model.stun_from_origin(&d)?;
                let w = model.stun_level_log_volume(n, u)?;
                // P(error | noise) = 1 - exp(-lambda * W(u)); exact, so no
                // window and no edge events.
                let p = -f64::exp_m1(-(log_lambda + w).exp());
                Ok((p, false))
            })?;
            Ok(Estimate::from_sums(sum, sum_sq, trials, seed, edges, false))
        }
        Mode::Explicit => {
            let (sum, sum_sq, edges) = run_batches(trials, |t| {
                let mut rng = trial_rng(seed, t);
                let interferers = sample_palm_interferers(scenario, &mut rng)?;
                let d = model.sample(n, &mut rng)?;
                let (outcome, extent) = match decoder {
                    Decoder::Mle => (
                        decoding::mle_success(model, &interferers, &d)?,
                        decoding::relevant_radius(model, &d)?,
                    ),
                    Decoder::Typicality { delta } => (
                        decoding::typicality_success(model, *delta, &interferers, &d)?,
                        typicality_extent(model, *delta, &d),
                    ),
                    Decoder::Mismatched { design } => (
                        decoding::mismatched_success(design, &interferers, &d)?,
                        decoding::relevant_radius(design, &d)?,
                    ),
                };
                let error = if outcome.resolved_success { 0.0 } else { 1.0 };
                Ok((error, extent > scenario.window.radius))
            })?;
            Ok(Estimate::from_sums(sum, sum_sq, trials, seed, edges, true))
        }
    }
}

/// Estimate the error probability through the incoming-error count: for each
/// interferer `T`, displace it by its own noise draw and ask whether the
/// decoder hands the received point to the *origin*.  The per-trial count
/// can exceed one; by a mass-transport argument its expectation equals the
/// per-codeword error probability, which makes this a consistency check on
/// the direct estimator rather than a faster alternative.
///
/// Sources outside the window are missed entirely; they are astronomically
/// unlikely to decode to the origin for any window passing the edge gate, but
/// unlike in-window edge events they cannot be counted, so treat validity
/// here as window-size dependent.
pub fn estimate_pe_mass_transport(
    scenario: &PalmScenario,
    model: &NoiseModel,
    trials: u64,
    seed: u64,
) -> Result<Estimate, MonteCarloError> {
    if trials == 0 {
        return Err(MonteCarloError::ZeroTrials);
    }
    scenario.validate()?;
    let n = scenario.n;
    let (sum, sum_sq, edges) = run_batches(trials, |t| {
        let mut rng = trial_rng(seed, t);
        let interferers = sample_palm_interferers(scenario, &mut rng)?;
        let sources = interferers.len() / n;
        let mut count = 0.0;
        let mut edge = false;
        let mut received = vec![0.0; n];
        for i in 0..sources {
            let source = &interferers[i * n..(i + 1) * n];
            let noise = model.sample(n, &mut rng)?;
            for k in 0..n {
                received[k] = source[k] + noise[k];
            }
            // Own-source early exit: if the source explains its own received
            // point strictly better than the origin does, the origin cannot
            // win, no matter what else is in the configuration.
            let s_own = model.stun(&received, source)?;
            let s_origin = model.stun_from_origin(&received)?;
            if s_own < s_origin {
                continue;
            }
            let outcome = decoding::mle_success(model, &interferers, &received)?;
            if outcome.resolved_success {
                count += 1.0;
            }
            if decoding::relevant_radius(model, &received)? > scenario.window.radius {
                edge = true;
            }
        }
        Ok((count, edge))
    })?;
    Ok(Estimate::from_sums(sum, sum_sq, trials, seed, edges, false))
}

/// Estimate the cell-perturbation integral `E[1(X in own cell) * vol B(X, |X|)]`
/// for white Gaussian displacements against a Poisson configuration: the
/// (negative) sensitivity of the success probability to the interferer
/// intensity.  At `lambda = 0` the gate is always open and the value reduces
/// to the mean ball volume at the noise radius.
pub fn estimate_perturbation_integral(
    n: usize,
    lambda: f64,
    sigma: f64,
    trials: u64,
    seed: u64,
) -> Result<Estimate, MonteCarloError> {
    if trials == 0 {
        return Err(MonteCarloError::ZeroTrials);
    }
    if !(lambda >= 0.0) {
        return Err(MonteCarloError::BadParameter {
            what: "lambda",
            value: lambda,
        });
    }
    let model = NoiseModel::white_gaussian(sigma)?;
    let window = WindowSpec {
        n,
        radius: 6.0 * sigma * (n as f64).sqrt(),
    };
    let log_lambda = lambda.ln();
    let (sum, sum_sq, edges) = run_batches(trials, |t| {
        let mut rng = trial_rng(seed, t);
        let config = sample_poisson(window, log_lambda, &mut rng)?;
        let x = model.sample(n, &mut rng)?;
        let r_sq: f64 = x.iter().map(|v| v * v).sum();
        let r = r_sq.sqrt();
        let mut own_cell = true;
        for p in config.points() {
            let dist_sq: f64 = x.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
            if dist_sq < r_sq {
                own_cell = false;
                break;
            }
        }
        let value = if own_cell {
            log_ball_volume(n, r, Norm::L2).exp()
        } else {
            0.0
        };
        Ok((value, 2.0 * r > window.radius))
    })?;
    Ok(Estimate::from_sums(sum, sum_sq, trials, seed, edges, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::erf;
    use rand::Rng;
    use std::f64::consts::PI;

    fn slivnyak_scenario(
        n: usize,
        alpha: f64,
        sigma: f64,
        radius: Option<f64>,
    ) -> (PalmScenario, NoiseModel) {
        let model = NoiseModel::white_gaussian(sigma).unwrap();
        let h = model.entropy_rate();
        let rate = -(h + alpha.ln());
        let log_lambda = n as f64 * rate;
        let window = match radius {
            Some(r) => WindowSpec { n, radius: r },
            None => WindowSpec::default_for(n, sigma, 0.0, rate),
        };
        let scenario = PalmScenario {
            kind: PalmKind::PoissonSlivnyak,
            n,
            log_lambda,
            r_excl: 0.0,
            window,
        };
        (scenario, model)
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let (scenario, model) = slivnyak_scenario(2, 1.5, 1.0, None);
        let run = |threads: usize, mode: Mode| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                estimate_pe(&scenario, &Decoder::Mle, &model, 4113, 7, mode).unwrap()
            })
        };
        for mode in [Mode::Explicit, Mode::Reduced] {
            let one = run(1, mode);
            let four = run(4, mode);
            let two = run(2, mode);
            assert_eq!(one.mean.to_bits(), four.mean.to_bits());
            assert_eq!(one.std_error.to_bits(), four.std_error.to_bits());
            assert_eq!(one.edge_events, four.edge_events);
            assert_eq!(one.mean.to_bits(), two.mean.to_bits());
        }
    }

    #[test]
    fn confidence_intervals_cover_a_known_mean() {
        // Bernoulli(0.3) through the full batch/fold/CI machinery: the 95%
        // interval should cover the truth about 95% of the time.
        let mut covered = 0u32;
        for rep in 0..1000u64 {
            let (sum, sum_sq, edges) = run_batches(1000, |t| {
                let mut rng = trial_rng(rep.wrapping_mul(100_003).wrapping_add(1), t);
                let v = if rng.gen::<f64>() < 0.3 { 1.0 } else { 0.0 };
                Ok((v, false))
            })
            .unwrap();
            let est = Estimate::from_sums(sum, sum_sq, 1000, rep, edges, true);
            if est.ci95.0 <= 0.3 && 0.3 <= est.ci95.1 {
                covered += 1;
            }
        }
        assert!(covered >= 930, "interval covered only {covered}/1000 runs");
    }

    #[test]
    fn reduced_estimator_matches_planar_closed_form() {
        // In the plane the Poisson error probability integrates in closed
        // form: p_e = 1 - 1/(1 + 2 pi lambda sigma^2).
        let (scenario, model) = slivnyak_scenario(2, 1.5, 1.0, None);
        let est = estimate_pe(&scenario, &Decoder::Mle, &model, 200_000, 11, Mode::Reduced)
            .unwrap();
        let lambda = scenario.log_lambda.exp();
        let pe = 1.0 - 1.0 / (1.0 + 2.0 * PI * lambda);
        assert!(est.std_error > 0.0);
        assert!(
            (est.mean - pe).abs() <= 3.0 * est.std_error,
            "reduced {} vs closed form {pe} (se {})",
            est.mean,
            est.std_error
        );
        assert!(est.is_valid());
    }

    #[test]
    fn reduced_and_explicit_agree_and_reduction_helps() {
        let (scenario, model) = slivnyak_scenario(4, 1.3, 1.0, Some(12.0));
        let explicit =
            estimate_pe(&scenario, &Decoder::Mle, &model, 30_000, 3, Mode::Explicit).unwrap();
        let reduced =
            estimate_pe(&scenario, &Decoder::Mle, &model, 30_000, 3, Mode::Reduced).unwrap();
        let combined = explicit.std_error.hypot(reduced.std_error);
        assert!(
            (explicit.mean - reduced.mean).abs() <= 3.0 * combined,
            "explicit {} vs reduced {} (combined se {combined})",
            explicit.mean,
            reduced.mean
        );
        // Rao-Blackwell: conditioning cannot increase the variance.
        assert!(reduced.std_error < explicit.std_error);
        assert!(explicit.is_valid() && reduced.is_valid());
    }

    #[test]
    fn reduction_rejects_unsupported_combinations() {
        let (scenario, model) = slivnyak_scenario(2, 1.5, 1.0, None);
        let typ = Decoder::Typicality { delta: 0.2 };
        let err = estimate_pe(&scenario, &typ, &model, 10, 0, Mode::Reduced).unwrap_err();
        assert!(matches!(err, MonteCarloError::ReductionUnavailable { .. }));
        let markov = NoiseModel::markov_gaussian(0.5, 1.0).unwrap();
        let err = estimate_pe(&scenario, &Decoder::Mle, &markov, 10, 0, Mode::Reduced)
            .unwrap_err();
        assert!(matches!(err, MonteCarloError::ReductionUnavailable { .. }));
        let mut grid = scenario.clone();
        grid.kind = PalmKind::GridPalm;
        let err = estimate_pe(&grid, &Decoder::Mle, &model, 10, 0, Mode::Reduced).unwrap_err();
        assert!(matches!(err, MonteCarloError::ReductionUnavailable { .. }));
        let err = estimate_pe(&scenario, &Decoder::Mle, &model, 0, 0, Mode::Explicit).unwrap_err();
        assert!(matches!(err, MonteCarloError::ZeroTrials));
    }

    #[test]
    fn mass_transport_count_agrees_with_direct_estimate() {
        let (scenario, model) = slivnyak_scenario(2, 1.5, 1.0, None);
        let direct =
            estimate_pe(&scenario, &Decoder::Mle, &model, 40_000, 13, Mode::Explicit).unwrap();
        let transport = estimate_pe_mass_transport(&scenario, &model, 40_000, 14).unwrap();
        let lambda = scenario.log_lambda.exp();
        let pe = 1.0 - 1.0 / (1.0 + 2.0 * PI * lambda);
        let combined = direct.std_error.hypot(transport.std_error);
        assert!(
            (direct.mean - transport.mean).abs() <= 3.0 * combined,
            "direct {} vs transport {}",
            direct.mean,
            transport.mean
        );
        assert!(
            (transport.mean - pe).abs() <= 3.0 * transport.std_error,
            "transport {} vs closed form {pe}",
            transport.mean
        );
        assert!(transport.is_valid());
    }

    #[test]
    fn grid_scenario_matches_rounding_closed_form() {
        // Against an unshifted cubic grid, maximum-likelihood decoding of
        // white Gaussian noise is per-coordinate rounding, so
        // p_s = erf(spacing / (2 sigma sqrt 2))^n exactly.
        let cases: [(usize, f64, f64); 2] = [(1, 0.0, 1.0), (2, 0.4, 0.6)];
        for &(n, rate, sigma) in &cases {
            let spacing = (-rate).exp();
            let window = WindowSpec {
                n,
                radius: 6.0 * sigma * (n as f64).sqrt() + 2.0 * spacing * (n as f64).sqrt(),
            };
            let scenario = PalmScenario {
                kind: PalmKind::GridPalm,
                n,
                log_lambda: n as f64 * rate,
                r_excl: 0.0,
                window,
            };
            let model = NoiseModel::white_gaussian(sigma).unwrap();
            let est = estimate_pe(&scenario, &Decoder::Mle, &model, 30_000, 17, Mode::Explicit)
                .unwrap();
            let ps = erf(spacing / (2.0 * sigma * std::f64::consts::SQRT_2)).powi(n as i32);
            let pe = 1.0 - ps;
            assert!(
                (est.mean - pe).abs() <= 3.0 * est.std_error.max(1e-12),
                "n={n}: grid estimate {} vs closed form {pe}",
                est.mean
            );
            assert!(est.is_valid());
        }
    }

    #[test]
    fn perturbation_integral_matches_derivative_closed_form() {
        // n = 2, sigma = 1: the integral equals 2 pi / (1 + 2 pi lambda)^2.
        let free = estimate_perturbation_integral(2, 0.0, 1.0, 20_000, 5).unwrap();
        assert!(
            (free.mean - 2.0 * PI).abs() <= 3.0 * free.std_error,
            "lambda=0 estimate {} vs {}",
            free.mean,
            2.0 * PI
        );
        let lambda = 0.05;
        let est = estimate_perturbation_integral(2, lambda, 1.0, 60_000, 6).unwrap();
        let expected = 2.0 * PI / (1.0 + 2.0 * PI * lambda).powi(2);
        assert!(
            (est.mean - expected).abs() <= 3.0 * est.std_error,
            "estimate {} vs closed form {expected} (se {})",
            est.mean,
            est.std_error
        );
        assert!(est.is_valid());
    }

    #[test]
    fn typicality_decoder_runs_and_stays_in_range() {
        let (scenario, model) = slivnyak_scenario(6, 2.0, 1.0, None);
        let typ = Decoder::Typicality { delta: 0.3 };
        let est = estimate_pe(&scenario, &typ, &model, 5_000, 23, Mode::Explicit).unwrap();
        assert!(est.mean >= 0.0 && est.mean <= 1.0);
        assert!(est.is_valid());
        // The Gauss-Markov model has no typical-set machinery: the error
        // surfaces rather than poisons the estimate.
        let markov = NoiseModel::markov_gaussian(0.4, 1.0).unwrap();
        let err = estimate_pe(&scenario, &typ, &markov, 10, 0, Mode::Explicit).unwrap_err();
        assert!(matches!(err, MonteCarloError::Noise(_)));
    }
}
