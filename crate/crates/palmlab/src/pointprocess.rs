//! Codebook samplers: Poisson configurations, hard-core thinnings, cubic
//! grids, and the Palm scenarios the Monte Carlo estimators condition on.
//!
//! All samplers work inside a Euclidean ball window and return flat
//! coordinate buffers (`count * n` doubles).  Palm scenarios describe the
//! point process *as seen from a codeword at the origin*: for a Poisson
//! codebook that is just an independent Poisson configuration (Slivnyak),
//! for a hard-core codebook it is a rejection-sampled configuration with the
//! origin's exclusion ball respected, and for a grid it is the lattice with
//! the origin removed.

use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::geometry::{log_ball_volume, Norm};
use crate::noise::{NoiseError, NoiseModel};

/// Hard cap on the expected number of points a single window may hold.
const MAX_EXPECTED_POINTS: f64 = 1e8;

/// Minimum Palm acceptance probability before rejection sampling is refused.
const MIN_PALM_ACCEPTANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum PointProcessError {
    /// The window/intensity combination asks for too many points.
    TooManyPoints { ln_expected: f64 },
    /// The hard-core Palm rejection sampler would almost never accept.
    PalmAcceptanceTooLow { acceptance: f64 },
    /// The rejection loop ran out of budget (should not happen once the
    /// acceptance guard passes; kept as a defensive bound).
    RejectionBudgetExhausted { attempts: u64 },
    BadParameter { what: &'static str, value: f64 },
    Noise(NoiseError),
}

impl fmt::Display for PointProcessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointProcessError::TooManyPoints { ln_expected } => write!(
                f,
                "expected point count e^{:.2} exceeds the {:e} cap",
                ln_expected, MAX_EXPECTED_POINTS
            ),
            PointProcessError::PalmAcceptanceTooLow { acceptance } => write!(
                f,
                "palm rejection acceptance {:.3e} is below {:e}",
                acceptance, MIN_PALM_ACCEPTANCE
            ),
            PointProcessError::RejectionBudgetExhausted { attempts } => {
                write!(f, "palm rejection sampler gave up after {} attempts", attempts)
            }
            PointProcessError::BadParameter { what, value } => {
                write!(f, "bad point-process parameter: {} = {}", what, value)
            }
            PointProcessError::Noise(e) => write!(f, "noise model error: {}", e),
        }
    }
}

impl std::error::Error for PointProcessError {}

impl From<NoiseError> for PointProcessError {
    fn from(e: NoiseError) -> Self {
        PointProcessError::Noise(e)
    }
}

/// The observation window: a Euclidean ball of the given radius around the
/// origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpec {
    pub n: usize,
    pub radius: f64,
}

impl WindowSpec {
    pub fn log_volume(&self) -> f64 {
        log_ball_volume(self.n, self.radius, Norm::L2)
    }

    /// Default window for decoding experiments.  A decision for displacement
    /// `d` can only involve codewords within roughly `2|d|` of the origin, so
    /// `8 sigma sqrt(n)` leaves the edge-event rate far below the validity
    /// gate; exclusion balls and one codeword spacing (`e^{-rate}`) are also
    /// covered.  Deliberately not proportional to `spacing * sqrt(n)` — that
    /// blows the expected point count up exponentially in `n` without making
    /// any additional decision reachable.
    pub fn default_for(n: usize, sigma: f64, r_excl: f64, rate: f64) -> Self {
        let nf = n as f64;
        let radius = (8.0 * sigma * nf.sqrt())
            .max(3.0 * r_excl)
            .max((-rate).exp());
        WindowSpec { n, radius }
    }
}

/// How a configuration was produced; thinnings record their exclusion
/// parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Poisson,
    Matern1 { r_excl: f64 },
    MaternStun { xi: f64 },
    Grid { rate: f64, shift: Vec<f64> },
}

/// A finite point configuration in a window, with flat coordinate storage.
#[derive(Debug, Clone)]
pub struct PointConfiguration {
    pub n: usize,
    coords: Vec<f64>,
    /// Log intensity of the process the configuration was drawn from (for
    /// thinnings: of the *underlying* process before deletion).
    pub log_intensity: f64,
    pub provenance: Provenance,
}

impl PointConfiguration {
    pub fn new(n: usize, coords: Vec<f64>, log_intensity: f64, provenance: Provenance) -> Self {
        assert!(n >= 1 && coords.len() % n == 0);
        PointConfiguration {
            n,
            coords,
            log_intensity,
            provenance,
        }
    }

    pub fn count(&self) -> usize {
        self.coords.len() / self.n
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.n..(i + 1) * self.n]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.n)
    }
}

// ---------------------------------------------------------------------------
// Spatial index
// ---------------------------------------------------------------------------

/// Uniform-grid hash over a flat coordinate buffer, with cell side equal to
/// the query radius so any radius-bounded query touches at most the 3^n
/// neighborhood of a cell.  Worth building only in moderate dimension and
/// for enough points; [`GridIndex::build`] returns `None` otherwise and
/// callers fall back to a linear scan.
pub(crate) struct GridIndex {
    n: usize,
    cell: f64,
    map: HashMap<Box<[i32]>, Vec<u32>>,
}

impl GridIndex {
    pub(crate) fn build(coords: &[f64], n: usize, cell: f64) -> Option<GridIndex> {
        let count = coords.len() / n;
        if n > 12 || cell <= 0.0 {
            return None;
        }
        // 3^n candidate cells per query; if that rivals the point count the
        // linear scan wins.
        let neighborhood = 3f64.powi(n as i32);
        if neighborhood > 4.0 * count as f64 {
            return None;
        }
        let mut map: HashMap<Box<[i32]>, Vec<u32>> = HashMap::new();
        let mut key = vec![0i32; n];
        for i in 0..count {
            let p = &coords[i * n..(i + 1) * n];
            for (k, &x) in key.iter_mut().zip(p) {
                *k = (x / cell).floor() as i32;
            }
            map.entry(key.clone().into_boxed_slice())
                .or_default()
                .push(i as u32);
        }
        Some(GridIndex { n, cell, map })
    }

    /// Visit the indices of all points whose cell is within one cell of the
    /// query point's cell; the caller applies the exact distance test.
    pub(crate) fn for_neighbors<F: FnMut(u32)>(&self, center: &[f64], mut f: F) {
        let n = self.n;
        let mut base = vec![0i32; n];
        for (k, &x) in base.iter_mut().zip(center) {
            *k = (x / self.cell).floor() as i32;
        }
        // Mixed-radix counter over {-1, 0, 1}^n.
        let mut offset = vec![-1i32; n];
        let mut key = vec![0i32; n];
        loop {
            for i in 0..n {
                key[i] = base[i] + offset[i];
            }
            if let Some(bucket) = self.map.get(key.as_slice()) {
                for &idx in bucket {
                    f(idx);
                }
            }
            // Increment the counter.
            let mut carry = 0;
            loop {
                if carry == n {
                    return;
                }
                offset[carry] += 1;
                if offset[carry] <= 1 {
                    break;
                }
                offset[carry] = -1;
                carry += 1;
            }
        }
    }
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

fn dist_l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

/// Sample a homogeneous Poisson configuration of log intensity `log_lambda`
/// in the window.  `log_lambda = -inf` yields the empty configuration;
/// windows expecting more than 1e8 points are refused.
pub fn sample_poisson<R: Rng + ?Sized>(
    window: WindowSpec,
    log_lambda: f64,
    rng: &mut R,
) -> Result<PointConfiguration, PointProcessError> {
    let ln_expected = log_lambda + window.log_volume();
    if ln_expected > MAX_EXPECTED_POINTS.ln() {
        return Err(PointProcessError::TooManyPoints { ln_expected });
    }
    let expected = ln_expected.exp();
    let count = if expected > 0.0 {
        let draw: f64 = Poisson::new(expected)
            .map_err(|_| PointProcessError::BadParameter {
                what: "log_lambda",
                value: log_lambda,
            })?
            .sample(rng);
        draw as usize
    } else {
        0
    };
    let n = window.n;
    let mut coords = Vec::with_capacity(count * n);
    for _ in 0..count {
        sample_in_ball(n, window.radius, rng, &mut coords);
    }
    Ok(PointConfiguration::new(
        n,
        coords,
        log_lambda,
        Provenance::Poisson,
    ))
}

// Uniform point in the n-ball: Gaussian direction, radius R * U^{1/n}.
fn sample_in_ball<R: Rng + ?Sized>(n: usize, radius: f64, rng: &mut R, out: &mut Vec<f64>) {
    let start = out.len();
    let mut norm_sq = 0.0;
    for _ in 0..n {
        let z: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
        out.push(z);
        norm_sq += z * z;
    }
    let norm = norm_sq.sqrt();
    let u: f64 = rng.gen::<f64>();
    let r = radius * u.powf(1.0 / n as f64);
    let scale = if norm > 0.0 { r / norm } else { 0.0 };
    for x in &mut out[start..] {
        *x *= scale;
    }
}

/// Mutual hard-core thinning: retain exactly the points whose nearest
/// neighbor in the *input* lies at Euclidean distance >= `r_excl`.  Both
/// members of a close pair are deleted.
pub fn matern1_thin(config: &PointConfiguration, r_excl: f64) -> PointConfiguration {
    let kept = thin_by(config, r_excl, |a, b| dist_sq(a, b) < r_excl * r_excl);
    PointConfiguration::new(
        config.n,
        kept,
        config.log_intensity,
        Provenance::Matern1 { r_excl },
    )
}

// Shared deletion loop: a point is deleted iff `too_close` holds against any
// other input point.  `radius` feeds the spatial index; the predicate does
// the exact test.
fn thin_by<F: Fn(&[f64], &[f64]) -> bool>(
    config: &PointConfiguration,
    radius: f64,
    too_close: F,
) -> Vec<f64> {
    let n = config.n;
    let count = config.count();
    let coords = config.coords();
    let mut kept = Vec::new();
    if let Some(index) = GridIndex::build(coords, n, radius) {
        for i in 0..count {
            let p = config.point(i);
            let mut crowded = false;
            index.for_neighbors(p, |j| {
                if j as usize != i && !crowded && too_close(p, config.point(j as usize)) {
                    crowded = true;
                }
            });
            if !crowded {
                kept.extend_from_slice(p);
            }
        }
    } else {
        for i in 0..count {
            let p = config.point(i);
            let crowded = (0..count)
                .any(|j| j != i && too_close(p, config.point(j)));
            if !crowded {
                kept.extend_from_slice(p);
            }
        }
    }
    kept
}

/// Discrepancy-based hard-core thinning: delete every point having another
/// input point within discrepancy `xi` under the noise model.  For the white
/// Gaussian model this is exactly [`matern1_thin`] at the radius where the
/// discrepancy crosses `xi`; for the symmetric exponential it is an L1-ball
/// exclusion; other sign-symmetric models go through the density directly.
pub fn matern_stun_thin(
    config: &PointConfiguration,
    model: &NoiseModel,
    xi: f64,
) -> Result<PointConfiguration, PointProcessError> {
    let n = config.n;
    let nf = n as f64;
    let kept = match model {
        NoiseModel::WhiteGaussian { sigma } => {
            let tau = model.discrepancy_floor()?;
            let r = if xi > tau {
                sigma * (2.0 * nf * (xi - tau)).sqrt()
            } else {
                0.0
            };
            // Defer to the Euclidean thinning: identical retained set by
            // construction.
            return Ok(PointConfiguration {
                provenance: Provenance::MaternStun { xi },
                ..matern1_thin(config, r)
            });
        }
        NoiseModel::WhiteSymExp { sigma } => {
            let tau = model.discrepancy_floor()?;
            let r = if xi > tau {
                nf * sigma * (xi - tau) / std::f64::consts::SQRT_2
            } else {
                0.0
            };
            thin_by(config, r, |a, b| dist_l1(a, b) < r)
        }
        _ => {
            // Generic sign-symmetric path through the density.  The
            // discrepancy sublevel set sits inside some Euclidean ball for
            // every model here, but without a clean radius we scan pairs.
            let count = config.count();
            let mut kept = Vec::new();
            for i in 0..count {
                let p = config.point(i);
                let mut crowded = false;
                for j in 0..count {
                    if i == j {
                        continue;
                    }
                    if model.stun(p, config.point(j))? < xi {
                        crowded = true;
                        break;
                    }
                }
                if !crowded {
                    kept.extend_from_slice(p);
                }
            }
            kept
        }
    };
    Ok(PointConfiguration::new(
        n,
        kept,
        config.log_intensity,
        Provenance::MaternStun { xi },
    ))
}

/// All points of the cubic lattice with spacing `e^{-rate}` shifted by
/// `shift`, intersected with the window ball.  The shift is reduced modulo
/// the spacing, so shifting by a full period reproduces the same set.
pub fn grid_codebook(
    n: usize,
    rate: f64,
    shift: &[f64],
    window: WindowSpec,
) -> Result<PointConfiguration, PointProcessError> {
    assert_eq!(window.n, n);
    assert_eq!(shift.len(), n);
    let spacing = (-rate).exp();
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(PointProcessError::BadParameter {
            what: "rate",
            value: rate,
        });
    }
    // Reduce the shift into [0, spacing).
    let shift: Vec<f64> = shift
        .iter()
        .map(|&u| {
            let r = u.rem_euclid(spacing);
            if r == spacing {
                0.0
            } else {
                r
            }
        })
        .collect();
    // Candidate count before ball pruning.
    let per_axis = 2.0 * window.radius / spacing + 2.0;
    if (n as f64) * per_axis.ln() > MAX_EXPECTED_POINTS.ln() {
        return Err(PointProcessError::TooManyPoints {
            ln_expected: (n as f64) * per_axis.ln(),
        });
    }
    let mut coords = Vec::new();
    let mut point = vec![0.0; n];
    // Depth-first over axes with prefix-norm pruning keeps the enumeration
    // proportional to the output for round windows.
    fn recurse(
        axis: usize,
        n: usize,
        spacing: f64,
        shift: &[f64],
        radius_sq: f64,
        prefix_sq: f64,
        point: &mut [f64],
        out: &mut Vec<f64>,
    ) {
        if axis == n {
            out.extend_from_slice(point);
            return;
        }
        let remaining = (radius_sq - prefix_sq).max(0.0).sqrt();
        let lo = ((-remaining - shift[axis]) / spacing).ceil() as i64;
        let hi = ((remaining - shift[axis]) / spacing).floor() as i64;
        for k in lo..=hi {
            let x = shift[axis] + k as f64 * spacing;
            let next = prefix_sq + x * x;
            if next <= radius_sq {
                point[axis] = x;
                recurse(axis + 1, n, spacing, shift, radius_sq, next, point, out);
            }
        }
    }
    recurse(
        0,
        n,
        spacing,
        &shift,
        window.radius * window.radius,
        0.0,
        &mut point,
        &mut coords,
    );
    Ok(PointConfiguration::new(
        n,
        coords,
        (n as f64) * rate,
        Provenance::Grid { rate, shift },
    ))
}

// ---------------------------------------------------------------------------
// Palm scenarios
// ---------------------------------------------------------------------------

/// Which conditional law the interferers are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PalmKind {
    /// Poisson codebook seen from one of its points: by Slivnyak's theorem,
    /// just an independent Poisson configuration.
    PoissonSlivnyak,
    /// Hard-core codebook seen from a retained point: Poisson configuration
    /// conditioned on the origin surviving the mutual thinning, then thinned.
    Matern1Palm,
    /// Cubic grid seen from a lattice point: the lattice minus the origin.
    GridPalm,
}

/// Everything needed to draw the interferers around a codeword at the
/// origin.  `r_excl` only matters for [`PalmKind::Matern1Palm`].
#[derive(Debug, Clone)]
pub struct PalmScenario {
    pub kind: PalmKind,
    pub n: usize,
    pub log_lambda: f64,
    pub r_excl: f64,
    pub window: WindowSpec,
}

impl PalmScenario {
    /// Probability that a Poisson configuration leaves the origin's
    /// exclusion ball empty — the acceptance rate of the rejection sampler.
    pub fn palm_acceptance(&self) -> f64 {
        let ln_mean_in_ball =
            self.log_lambda + log_ball_volume(self.n, self.r_excl, Norm::L2);
        (-ln_mean_in_ball.exp()).exp()
    }

    pub fn validate(&self) -> Result<(), PointProcessError> {
        assert_eq!(self.window.n, self.n);
        if self.kind == PalmKind::Matern1Palm {
            if !(self.r_excl > 0.0) {
                return Err(PointProcessError::BadParameter {
                    what: "r_excl",
                    value: self.r_excl,
                });
            }
            let acceptance = self.palm_acceptance();
            if acceptance < MIN_PALM_ACCEPTANCE {
                return Err(PointProcessError::PalmAcceptanceTooLow { acceptance });
            }
        }
        Ok(())
    }
}

/// Draw the interferer set of the scenario as a flat `count * n` buffer.
pub fn sample_palm_interferers<R: Rng + ?Sized>(
    scenario: &PalmScenario,
    rng: &mut R,
) -> Result<Vec<f64>, PointProcessError> {
    sample_palm_with_attempts(scenario, rng).map(|(coords, _)| coords)
}

/// Same as [`sample_palm_interferers`], also reporting how many rejection
/// attempts the draw took (always 1 outside the hard-core scenario).
pub fn sample_palm_with_attempts<R: Rng + ?Sized>(
    scenario: &PalmScenario,
    rng: &mut R,
) -> Result<(Vec<f64>, u64), PointProcessError> {
    scenario.validate()?;
    match scenario.kind {
        PalmKind::PoissonSlivnyak => {
            let config = sample_poisson(scenario.window, scenario.log_lambda, rng)?;
            Ok((config.coords, 1))
        }
        PalmKind::Matern1Palm => {
            let r = scenario.r_excl;
            let r_sq = r * r;
            // The acceptance guard in validate() bounds the expected attempt
            // count by 1e6; the hard cap below is pure defense.
            let max_attempts = (50.0 / scenario.palm_acceptance()).ceil() as u64;
            let mut attempts = 0u64;
            loop {
                attempts += 1;
                if attempts > max_attempts {
                    return Err(PointProcessError::RejectionBudgetExhausted { attempts });
                }
                let config = sample_poisson(scenario.window, scenario.log_lambda, rng)?;
                // Reject configurations that would delete the origin.
                let origin_crowded = config
                    .points()
                    .any(|p| p.iter().map(|x| x * x).sum::<f64>() < r_sq);
                if origin_crowded {
                    continue;
                }
                // The origin deletes nobody (everyone is at distance >= r
                // from it), so the mutual thinning runs among the others.
                let thinned = matern1_thin(&config, r);
                return Ok((thinned.coords, attempts));
            }
        }
        PalmKind::GridPalm => {
            let rate = scenario.log_lambda / scenario.n as f64;
            let config = grid_codebook(
                scenario.n,
                rate,
                &vec![0.0; scenario.n],
                scenario.window,
            )?;
            // Drop the origin itself (exact zero coordinates by
            // construction of the unshifted lattice).
            let mut coords = Vec::with_capacity(config.coords.len());
            for p in config.points() {
                if p.iter().any(|&x| x != 0.0) {
                    coords.extend_from_slice(p);
                }
            }
            Ok((coords, 1))
        }
    }
}
