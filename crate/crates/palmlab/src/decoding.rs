//! Per-trial decoding verdicts.
//!
//! The decoder sees a displaced codeword `d` (the true codeword sits at the
//! origin) and a flat buffer of interferer codewords.  Maximum-likelihood
//! decoding succeeds when the origin has the smallest discrepancy among all
//! candidates; exact discrepancy ties are reported as ambiguous and then
//! resolved by Euclidean distance (the origin wins only when strictly
//! closer).  Typicality decoding succeeds when the displacement is typical
//! for the noise and no interferer offers a second typical explanation.
//!
//! All functions treat `d.len()` as the dimension and `interferers` as
//! `count * n` coordinates.

use std::fmt;

use crate::noise::{NoiseError, NoiseModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeStatus {
    Success,
    Failure,
    /// At least one interferer ties the origin's discrepancy exactly (this
    /// includes the case where every candidate has infinite discrepancy).
    Ambiguous,
}

/// Outcome of one decoding attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeOutcome {
    pub status: DecodeStatus,
    /// The verdict after tie-breaking: ambiguous outcomes count as success
    /// only when the origin is strictly Euclidean-closer to `d` than every
    /// tying interferer.
    pub resolved_success: bool,
    /// For failures, the interferer the decoder picked instead (smallest
    /// discrepancy; first reached on exact equality among interferers).
    /// For unresolved ambiguity, the first tying interferer.
    pub winner: Option<usize>,
}

impl DecodeOutcome {
    fn success() -> Self {
        DecodeOutcome {
            status: DecodeStatus::Success,
            resolved_success: true,
            winner: None,
        }
    }

    fn failure(winner: Option<usize>) -> Self {
        DecodeOutcome {
            status: DecodeStatus::Failure,
            resolved_success: false,
            winner,
        }
    }
}

impl fmt::Display for DecodeOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.status, self.resolved_success) {
            (DecodeStatus::Success, _) => write!(f, "success"),
            (DecodeStatus::Failure, _) => write!(f, "failure"),
            (DecodeStatus::Ambiguous, true) => write!(f, "ambiguous (resolved success)"),
            (DecodeStatus::Ambiguous, false) => write!(f, "ambiguous (resolved failure)"),
        }
    }
}

/// Which decoder a simulation runs.
#[derive(Debug, Clone)]
pub enum Decoder {
    Mle,
    Typicality { delta: f64 },
    /// Maximum-likelihood under a *design* model that may differ from the
    /// noise actually applied.
    Mismatched { design: NoiseModel },
}

impl Decoder {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Decoder::Mle => "mle",
            Decoder::Typicality { .. } => "typicality",
            Decoder::Mismatched { .. } => "mismatched",
        }
    }
}

fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn diff_norm_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Maximum-likelihood verdict for displacement `d` against the interferers.
///
/// The origin wins when its discrepancy is strictly smallest.  Exact
/// discrepancy ties (positive-probability events for the uniform model,
/// measure-zero otherwise) yield [`DecodeStatus::Ambiguous`], resolved in
/// favour of the origin only when it is strictly Euclidean-closer to `d`
/// than every tying interferer.
pub fn mle_success(
    model: &NoiseModel,
    interferers: &[f64],
    d: &[f64],
) -> Result<DecodeOutcome, NoiseError> {
    let n = d.len();
    assert!(n >= 1 && interferers.len() % n == 0);
    let count = interferers.len() / n;
    // The white Gaussian discrepancy is a monotone function of Euclidean
    // distance, so compare squared distances directly; everything else goes
    // through the density.
    let use_euclidean = matches!(model, NoiseModel::WhiteGaussian { .. });
    let s0 = if use_euclidean {
        norm_sq(d)
    } else {
        model.stun_from_origin(d)?
    };
    let mut best: Option<(usize, f64)> = None;
    let mut ties: Vec<usize> = Vec::new();
    for i in 0..count {
        let t = &interferers[i * n..(i + 1) * n];
        let s = if use_euclidean {
            diff_norm_sq(d, t)
        } else {
            model.stun(d, t)?
        };
        if s < s0 {
            match best {
                Some((_, b)) if b <= s => {}
                _ => best = Some((i, s)),
            }
        } else if s == s0 {
            // Covers the all-infinite case too: inf == inf.
            ties.push(i);
        }
    }
    if let Some((i, _)) = best {
        return Ok(DecodeOutcome::failure(Some(i)));
    }
    if ties.is_empty() {
        return Ok(DecodeOutcome::success());
    }
    // Euclidean tie-break.
    let d0 = norm_sq(d);
    let origin_wins = ties
        .iter()
        .all(|&i| d0 < diff_norm_sq(d, &interferers[i * n..(i + 1) * n]));
    Ok(DecodeOutcome {
        status: DecodeStatus::Ambiguous,
        resolved_success: origin_wins,
        winner: if origin_wins { None } else { Some(ties[0]) },
    })
}

/// Typicality verdict: success iff `d` is delta-typical for the noise and no
/// interferer `T` leaves a second typical explanation `d - T`.  The second
/// condition is conservative — a colliding interferer is counted against the
/// transmission even if a likelihood comparison would still favour the
/// origin — so the success indicator lower-bounds the MLE one on typical
/// displacements.
pub fn typicality_success(
    model: &NoiseModel,
    delta: f64,
    interferers: &[f64],
    d: &[f64],
) -> Result<DecodeOutcome, NoiseError> {
    if !(delta > 0.0) {
        return Err(NoiseError::BadParameter {
            what: "delta",
            value: delta,
        });
    }
    let n = d.len();
    assert!(n >= 1 && interferers.len() % n == 0);
    if !model.is_typical(d, delta)? {
        return Ok(DecodeOutcome::failure(None));
    }
    let count = interferers.len() / n;
    let mut diff = vec![0.0; n];
    for i in 0..count {
        let t = &interferers[i * n..(i + 1) * n];
        for (k, (a, b)) in d.iter().zip(t).enumerate() {
            diff[k] = a - b;
        }
        if model.is_typical(&diff, delta)? {
            return Ok(DecodeOutcome {
                status: DecodeStatus::Ambiguous,
                resolved_success: false,
                winner: Some(i),
            });
        }
    }
    Ok(DecodeOutcome::success())
}

/// Maximum-likelihood decoding under `design`, applied to a displacement
/// that was produced by some other (or the same) actual noise law.  The rule
/// is [`mle_success`] with the design model everywhere — including its
/// support: a displacement outside the design support has infinite design
/// discrepancy and loses to any interferer with a finite one.
pub fn mismatched_success(
    design: &NoiseModel,
    interferers: &[f64],
    d: &[f64],
) -> Result<DecodeOutcome, NoiseError> {
    mle_success(design, interferers, d)
}

/// Radius around the origin beyond which no interferer can change the MLE
/// verdict for displacement `d`: any competitor must lie within this
/// distance of the origin.  Monte Carlo uses it to flag trials whose
/// decision region sticks out of the sampling window.
pub fn relevant_radius(model: &NoiseModel, d: &[f64]) -> Result<f64, NoiseError> {
    let n = d.len();
    let d2 = norm_sq(d).sqrt();
    match model {
        NoiseModel::WhiteGaussian { .. } => Ok(2.0 * d2),
        NoiseModel::WhiteSymExp { .. } => {
            let d1: f64 = d.iter().map(|v| v.abs()).sum();
            Ok(d2 + d1)
        }
        NoiseModel::WhiteUniform { sigma } => {
            // A finite-discrepancy competitor sits within the box diagonal of
            // d; an infinite-discrepancy tie only matters when it is
            // Euclidean-closer, i.e. within 2|d|.
            Ok((d2 + sigma * (3.0 * n as f64).sqrt()).max(2.0 * d2))
        }
        NoiseModel::ColoredGaussian(c) => {
            let q = model.stun_from_origin(d)?;
            // Convert the discrepancy back to the quadratic form.
            let tau = 0.5 * crate::numerics::LN_2PI + c.log_det(n) / (2.0 * n as f64);
            let quad = 2.0 * n as f64 * (q - tau).max(0.0);
            Ok(d2 + (c.eigen_upper_bound() * quad).sqrt())
        }
        NoiseModel::MarkovGaussian { a, sigma_eps } => {
            // Precision form of the competitor condition, with a row-sum
            // bound on the covariance spectrum.
            let zeros = vec![0.0; n];
            let quad = 2.0 * (model.log_density(&zeros)? - model.log_density(d)?);
            let stat2 = sigma_eps * sigma_eps / (1.0 - a * a);
            let eigen_upper = stat2 * (1.0 + a.abs()) / (1.0 - a.abs());
            Ok(d2 + (eigen_upper * quad.max(0.0)).sqrt())
        }
    }
}
